#include "polybm/complex.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "polybm/errors.hpp"

namespace polybm {

namespace {

double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }

// Union-find over small index sets.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(int a, int b) { parent_[find(a)] = find(b); }

 private:
  std::vector<int> parent_;
};

std::vector<std::vector<VertexIndex>> nonempty_subsets(const std::vector<VertexIndex>& v) {
  std::vector<std::vector<VertexIndex>> out;
  const int n = static_cast<int>(v.size());
  for (int mask = 1; mask < (1 << n); ++mask) {
    std::vector<VertexIndex> sub;
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) sub.push_back(v[i]);
    out.push_back(std::move(sub));
  }
  // Smaller faces first, lexicographic inside one size.
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Charts

Vec2 Chart::to_chart(const Bary& b) const {
  Vec2 x{0.0, 0.0};
  for (int i = 0; i <= dim; ++i) {
    x[0] += b[i] * position[i][0];
    x[1] += b[i] * position[i][1];
  }
  return x;
}

Bary Chart::to_bary(const Vec2& x) const {
  const Vec2 d{x[0] - position[0][0], x[1] - position[0][1]};
  Bary b{0.0, 0.0, 0.0};
  double rest = 1.0;
  for (int i = 1; i <= dim; ++i) {
    b[i] = dot(gradient[i], d);
    rest -= b[i];
  }
  b[0] = rest;
  return b;
}

Chart make_chart(int dim, const std::array<double, 3>& lengths) {
  Chart c;
  c.dim = dim;
  if (dim == 1) {
    const double L = lengths[0];
    c.position[1] = {L, 0.0};
    c.gradient[0] = {-1.0 / L, 0.0};
    c.gradient[1] = {1.0 / L, 0.0};
    c.volume = L;
    return c;
  }

  // pairs (0,1), (0,2), (1,2) carry lengths[0..2]
  constexpr std::array<std::array<int, 3>, 3> pairs{{{0, 1, 2}, {0, 2, 1}, {1, 2, 0}}};
  int longest = 0;
  for (int i = 1; i < 3; ++i)
    if (lengths[i] > lengths[longest]) longest = i;
  const auto [a, b, apex] = pairs[longest];
  auto length_between = [&](int u, int v) {
    if (u > v) std::swap(u, v);
    if (u == 0 && v == 1) return lengths[0];
    if (u == 0 && v == 2) return lengths[1];
    return lengths[2];
  };
  const double L = lengths[longest];
  const double lac = length_between(a, apex);
  const double lbc = length_between(b, apex);
  const double x = (lac * lac - lbc * lbc + L * L) / (2.0 * L);
  const double y = std::sqrt(std::max(0.0, lac * lac - x * x));
  c.position[a] = {0.0, 0.0};
  c.position[b] = {L, 0.0};
  c.position[apex] = {x, y};

  const double m00 = c.position[1][0] - c.position[0][0];
  const double m10 = c.position[1][1] - c.position[0][1];
  const double m01 = c.position[2][0] - c.position[0][0];
  const double m11 = c.position[2][1] - c.position[0][1];
  const double det = m00 * m11 - m01 * m10;
  // rows of the inverse of [p1-p0 | p2-p0]
  c.gradient[1] = {m11 / det, -m01 / det};
  c.gradient[2] = {-m10 / det, m00 / det};
  c.gradient[0] = {-c.gradient[1][0] - c.gradient[2][0], -c.gradient[1][1] - c.gradient[2][1]};
  c.volume = 0.5 * std::abs(det);
  return c;
}

// ---------------------------------------------------------------------------
// Description parsing

ComplexDescription parse_complex_description(const nlohmann::json& doc) {
  ComplexDescription d;
  try {
    d.dimension = doc.at("dimension").get<int>();
    d.vertices = doc.at("vertices").get<std::vector<std::string>>();
    d.simplices = doc.at("simplices").get<std::vector<std::vector<std::string>>>();
    for (const auto& [key, value] : doc.at("edge_lengths").items()) {
      if (!value.is_number()) throw ComplexError("edge length for " + key + " is not a number");
      d.edge_lengths[key] = value.get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ComplexError(std::string("malformed complex description: ") + e.what());
  }
  return d;
}

ComplexDescription load_complex_description(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ComplexError("cannot open complex file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ComplexError("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_complex_description(doc);
}

// ---------------------------------------------------------------------------
// Polyhedron

std::optional<VertexIndex> Polyhedron::find_vertex(const std::string& name) const {
  auto it = vertex_lookup_.find(name);
  if (it == vertex_lookup_.end()) return std::nullopt;
  return it->second;
}

int Polyhedron::branch_index(FaceId f, SimplexId s) const {
  const auto& adj = adjacency_.at(f);
  auto it = std::find(adj.begin(), adj.end(), s);
  return it == adj.end() ? -1 : static_cast<int>(it - adj.begin());
}

double Polyhedron::edge_length(VertexIndex a, VertexIndex b) const {
  if (a > b) std::swap(a, b);
  auto it = lengths_.find({a, b});
  if (it == lengths_.end())
    throw ComplexError("no edge between " + vertex_name(a) + " and " + vertex_name(b));
  return it->second;
}

std::optional<int> Polyhedron::find_simplex(std::vector<VertexIndex> vertices) const {
  std::sort(vertices.begin(), vertices.end());
  auto it = simplex_lookup_.find(vertices);
  if (it == simplex_lookup_.end()) return std::nullopt;
  return it->second;
}

std::string Polyhedron::label(const Simplex& s) const {
  std::string out;
  for (std::size_t i = 0; i < s.vertices.size(); ++i) {
    if (i) out += '-';
    out += vertex_name(s.vertices[i]);
  }
  return out;
}

Polyhedron build_complex(const ComplexDescription& spec) {
  if (spec.dimension != 1 && spec.dimension != 2)
    throw ComplexError("dimension must be 1 or 2");
  Polyhedron P;
  const int n = spec.dimension;
  P.dim_ = n;
  P.by_dim_.resize(n + 1);

  for (const auto& name : spec.vertices) {
    if (name.empty() || name.find('-') != std::string::npos)
      throw ComplexError("invalid vertex id '" + name + "'");
    if (!P.vertex_lookup_.emplace(name, static_cast<VertexIndex>(P.vertex_names_.size())).second)
      throw ComplexError("duplicate vertex " + name);
    P.vertex_names_.push_back(name);
  }
  for (VertexIndex v = 0; v < static_cast<VertexIndex>(P.vertex_names_.size()); ++v) {
    P.by_dim_[0].push_back(Simplex{0, {v}, v});
    P.simplex_lookup_[{v}] = v;
  }

  std::vector<std::vector<VertexIndex>> listed;
  std::set<std::vector<VertexIndex>> seen;
  for (const auto& names : spec.simplices) {
    if (names.empty() || static_cast<int>(names.size()) > n + 1)
      throw ComplexError("simplex size out of range for dimension " + std::to_string(n));
    std::vector<VertexIndex> tuple;
    for (const auto& nm : names) {
      auto v = P.find_vertex(nm);
      if (!v) throw ComplexError("unknown vertex " + nm);
      tuple.push_back(*v);
    }
    std::sort(tuple.begin(), tuple.end());
    if (std::adjacent_find(tuple.begin(), tuple.end()) != tuple.end())
      throw ComplexError("repeated vertex in simplex");
    if (!seen.insert(tuple).second) throw ComplexError("duplicate simplex");
    listed.push_back(tuple);
  }

  // Maximal n-simplices take ids in listed order, then all faces follow.
  for (const auto& t : listed) {
    if (static_cast<int>(t.size()) != n + 1) continue;
    const int id = static_cast<int>(P.by_dim_[n].size());
    P.by_dim_[n].push_back(Simplex{n, t, id});
    P.simplex_lookup_[t] = id;
  }
  for (const auto& t : listed) {
    for (auto& sub : nonempty_subsets(t)) {
      const int s = static_cast<int>(sub.size()) - 1;
      if (s == 0 || P.simplex_lookup_.count(sub)) continue;
      const int id = static_cast<int>(P.by_dim_[s].size());
      P.by_dim_[s].push_back(Simplex{s, sub, id});
      P.simplex_lookup_[sub] = id;
    }
  }
  if (P.by_dim_[n].empty()) throw ComplexError("complex has no maximal simplex");

  for (const auto& [key, value] : spec.edge_lengths) {
    const auto dash = key.find('-');
    if (dash == std::string::npos || key.find('-', dash + 1) != std::string::npos)
      throw ComplexError("malformed edge key '" + key + "'");
    auto a = P.find_vertex(key.substr(0, dash));
    auto b = P.find_vertex(key.substr(dash + 1));
    if (!a || !b) throw ComplexError("unknown vertex in edge key '" + key + "'");
    if (*a == *b) throw ComplexError("degenerate edge key '" + key + "'");
    if (!(value > 0.0) || !std::isfinite(value)) throw ComplexError("non-positive length");
    auto edge = std::minmax(*a, *b);
    auto [it, inserted] = P.lengths_.emplace(std::pair{edge.first, edge.second}, value);
    if (!inserted && it->second != value) throw ComplexError("inconsistent shared-face lengths");
  }
  for (const auto& e : P.by_dim_[1]) {
    if (!P.lengths_.count({e.vertices[0], e.vertices[1]}))
      throw ComplexError("missing edge length for " + P.label(e));
  }

  // adjacency of (n-1)-simplices
  P.adjacency_.assign(P.by_dim_[n - 1].size(), {});
  P.opposite_.assign(P.by_dim_[n].size(), {-1, -1, -1});
  for (const auto& s : P.by_dim_[n]) {
    for (int i = 0; i <= n; ++i) {
      std::vector<VertexIndex> f;
      for (int j = 0; j <= n; ++j)
        if (j != i) f.push_back(s.vertices[j]);
      const int fid = P.simplex_lookup_.at(f);
      P.opposite_[s.id][i] = fid;
      P.adjacency_[fid].push_back(s.id);
    }
  }

  P.vertex_star_.assign(P.vertex_count(), {});
  for (const auto& s : P.by_dim_[n])
    for (VertexIndex v : s.vertices) P.vertex_star_[v].push_back(s.id);

  P.vertex_on_boundary_.assign(P.vertex_count(), false);
  for (std::size_t f = 0; f < P.adjacency_.size(); ++f)
    if (P.adjacency_[f].size() == 1)
      for (VertexIndex v : P.by_dim_[n - 1][f].vertices) P.vertex_on_boundary_[v] = true;

  for (const auto& s : P.by_dim_[n]) {
    std::array<double, 3> lengths{0.0, 0.0, 0.0};
    lengths[0] = P.edge_length(s.vertices[0], s.vertices[1]);
    if (n == 2) {
      lengths[1] = P.edge_length(s.vertices[0], s.vertices[2]);
      lengths[2] = P.edge_length(s.vertices[1], s.vertices[2]);
      const double a = lengths[0], b = lengths[1], c = lengths[2];
      if (!(a < b + c && b < a + c && c < a + b))
        throw ComplexError("degenerate triangle " + P.label(s));
    }
    P.charts_.push_back(make_chart(n, lengths));
  }
  return P;
}

Polyhedron load_polyhedron(const std::filesystem::path& path) {
  return build_complex(load_complex_description(path));
}

// ---------------------------------------------------------------------------
// Admissibility

std::string AdmissibilityReport::to_text() const {
  std::ostringstream os;
  os << "dimensional homogeneity: " << (homogeneous ? "pass" : "FAIL") << '\n';
  for (const auto& s : non_homogeneous) os << "  not a face of a maximal simplex: " << s << '\n';
  os << "(n-1)-chainability: " << (chainable ? "pass" : "FAIL") << '\n';
  for (const auto& s : chain_breaks) os << "  " << s << '\n';
  os << "admissible: " << (admissible() ? "yes" : "no") << '\n';
  return os.str();
}

AdmissibilityReport validate_admissible(const Polyhedron& P) {
  AdmissibilityReport r;
  const int n = P.dimension();

  for (int s = 0; s < n; ++s) {
    for (const auto& simplex : P.simplices(s)) {
      bool inside = false;
      for (SimplexId m : P.vertex_star(simplex.vertices[0])) {
        const auto& mv = P.maximal(m).vertices;
        if (std::includes(mv.begin(), mv.end(), simplex.vertices.begin(), simplex.vertices.end())) {
          inside = true;
          break;
        }
      }
      if (!inside) {
        r.homogeneous = false;
        r.non_homogeneous.push_back(P.label(simplex));
      }
    }
  }

  // Connected components of the whole complex (through any shared vertex).
  DisjointSets topo(P.vertex_count());
  for (int s = 1; s <= n; ++s)
    for (const auto& simplex : P.simplices(s))
      for (std::size_t i = 1; i < simplex.vertices.size(); ++i)
        topo.unite(simplex.vertices[0], simplex.vertices[i]);

  // Dual graph: maximal simplices joined through (n-1)-faces.
  DisjointSets dual(P.maximal_count());
  for (FaceId f = 0; f < static_cast<FaceId>(P.face_count()); ++f) {
    auto adj = P.adjacent(f);
    for (std::size_t i = 1; i < adj.size(); ++i) dual.unite(adj[0], adj[i]);
  }
  std::map<int, std::set<int>> pieces;  // topological component -> dual components
  for (const auto& m : P.simplices(n))
    pieces[topo.find(m.vertices[0])].insert(dual.find(m.id));
  for (const auto& [component, duals] : pieces) {
    if (duals.size() > 1) {
      r.chainable = false;
      std::ostringstream os;
      os << "component containing " << P.vertex_name(component) << " splits into " << duals.size()
         << " pieces without the (n-2)-skeleton:";
      for (const auto& m : P.simplices(n))
        if (topo.find(m.vertices[0]) == component) os << ' ' << P.label(m);
      r.chain_breaks.push_back(os.str());
    }
  }

  // Vertex stars (the (n-2)-skeleton is empty for n = 1).
  if (n == 2) {
    for (VertexIndex v = 0; v < static_cast<VertexIndex>(P.vertex_count()); ++v) {
      auto star = P.vertex_star(v);
      if (star.size() < 2) continue;
      std::map<SimplexId, int> local;
      for (std::size_t i = 0; i < star.size(); ++i) local[star[i]] = static_cast<int>(i);
      DisjointSets ds(star.size());
      for (const auto& e : P.simplices(1)) {
        if (e.vertices[0] != v && e.vertices[1] != v) continue;
        auto adj = P.adjacent(e.id);
        for (std::size_t i = 1; i < adj.size(); ++i) ds.unite(local.at(adj[0]), local.at(adj[i]));
      }
      std::set<int> roots;
      for (std::size_t i = 0; i < star.size(); ++i) roots.insert(ds.find(static_cast<int>(i)));
      if (roots.size() > 1) {
        r.chainable = false;
        r.chain_breaks.push_back("star of vertex " + P.vertex_name(v) + " splits into " +
                                 std::to_string(roots.size()) + " pieces");
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Points

Location locate(const Polyhedron& P, const Point& p) {
  const int n = P.dimension();
  Location loc;
  loc.simplex = p.simplex;
  int zeros = 0, zero_at = -1, nonzero_at = -1;
  for (int i = 0; i <= n; ++i) {
    if (p.bary[i] == 0.0) {
      ++zeros;
      zero_at = i;
    } else {
      nonzero_at = i;
    }
  }
  if (zeros == 0) return loc;
  if (zeros == 1) {
    loc.stratum = Stratum::face;
    loc.face = P.opposite_face(p.simplex, zero_at);
    return loc;
  }
  if (zeros == n && nonzero_at >= 0) {
    loc.stratum = Stratum::skeleton;
    loc.vertex = P.maximal(p.simplex).vertices[nonzero_at];
    return loc;
  }
  throw GeometryError("invalid barycentric coordinates");
}

Point vertex_point(const Polyhedron& P, VertexIndex v) {
  auto star = P.vertex_star(v);
  if (star.empty()) throw GeometryError("vertex " + P.vertex_name(v) + " has no maximal simplex");
  Point p;
  p.simplex = star.front();
  const auto& verts = P.maximal(p.simplex).vertices;
  for (std::size_t i = 0; i < verts.size(); ++i) p.bary[i] = verts[i] == v ? 1.0 : 0.0;
  return p;
}

Point face_point(const Polyhedron& P, FaceId f, std::span<const double> weights) {
  auto adj = P.adjacent(f);
  if (adj.empty()) throw GeometryError("face without maximal simplex");
  const auto& fv = P.face(f).vertices;
  if (weights.size() != fv.size()) throw GeometryError("face weight count mismatch");
  Point p;
  p.simplex = adj.front();
  const auto& verts = P.maximal(p.simplex).vertices;
  for (std::size_t i = 0; i < verts.size(); ++i) {
    auto it = std::find(fv.begin(), fv.end(), verts[i]);
    p.bary[i] = it == fv.end() ? 0.0 : weights[it - fv.begin()];
  }
  return p;
}

std::vector<std::pair<VertexIndex, double>> support(const Polyhedron& P, const Point& p) {
  std::vector<std::pair<VertexIndex, double>> out;
  const auto& verts = P.maximal(p.simplex).vertices;
  for (std::size_t i = 0; i < verts.size(); ++i)
    if (p.bary[i] != 0.0) out.emplace_back(verts[i], p.bary[i]);
  return out;
}

std::optional<Point> express_in(const Polyhedron& P, const Point& p, SimplexId target) {
  if (target == p.simplex) return p;
  const auto& verts = P.maximal(target).vertices;
  Point q;
  q.simplex = target;
  for (const auto& [v, w] : support(P, p)) {
    auto it = std::find(verts.begin(), verts.end(), v);
    if (it == verts.end()) return std::nullopt;
    q.bary[it - verts.begin()] = w;
  }
  return q;
}

Link link_at(const Polyhedron& P, const Point& p) {
  const Location loc = locate(P, p);
  if (loc.stratum == Stratum::skeleton)
    throw GeometryError("link undefined at codimension-2 point in this artifact");
  Link link;
  link.base = p;
  link.stratum = loc.stratum;
  if (loc.stratum == Stratum::interior) {
    LinkBranch b;
    b.simplex = p.simplex;
    b.base = p;
    b.full = true;
    b.mass = 1.0;
    link.branches.push_back(b);
    return link;
  }
  link.face = loc.face;
  const auto& fv = P.face(loc.face).vertices;
  auto adj = P.adjacent(loc.face);
  for (SimplexId s : adj) {
    LinkBranch b;
    b.simplex = s;
    b.base = *express_in(P, p, s);
    const auto& chart = P.chart(s);
    const auto& verts = P.maximal(s).vertices;
    int apex = 0;
    for (int i = 0; i <= P.dimension(); ++i)
      if (std::find(fv.begin(), fv.end(), verts[i]) == fv.end()) apex = i;
    const Vec2& g = chart.gradient[apex];
    const double gn = std::hypot(g[0], g[1]);
    b.normal = {g[0] / gn, g[1] / gn};
    if (P.dimension() == 2) {
      const int u = static_cast<int>(std::find(verts.begin(), verts.end(), fv[0]) - verts.begin());
      const int w = static_cast<int>(std::find(verts.begin(), verts.end(), fv[1]) - verts.begin());
      const Vec2 d{chart.position[w][0] - chart.position[u][0], chart.position[w][1] - chart.position[u][1]};
      const double dn = std::hypot(d[0], d[1]);
      b.tangent = {d[0] / dn, d[1] / dn};
    }
    b.mass = 1.0 / static_cast<double>(adj.size());
    link.branches.push_back(b);
  }
  return link;
}

}  // namespace polybm
