#include "polybm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

#include "polybm/errors.hpp"

namespace polybm {

namespace {

double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }
double norm(const Vec2& a) { return std::hypot(a[0], a[1]); }
Vec2 unit(const Vec2& a) {
  const double n = norm(a);
  return {a[0] / n, a[1] / n};
}
Vec2 sub(const Vec2& a, const Vec2& b) { return {a[0] - b[0], a[1] - b[1]}; }

int local_index(const Polyhedron& P, SimplexId s, VertexIndex v) {
  const auto& verts = P.maximal(s).vertices;
  return static_cast<int>(std::find(verts.begin(), verts.end(), v) - verts.begin());
}

// Local index of the vertex of s not on face f.
int apex_of(const Polyhedron& P, SimplexId s, FaceId f) {
  const auto& fv = P.face(f).vertices;
  const auto& verts = P.maximal(s).vertices;
  for (int i = 0; i <= P.dimension(); ++i)
    if (std::find(fv.begin(), fv.end(), verts[i]) == fv.end()) return i;
  throw GeometryError("simplex is not adjacent to face");
}

// Unit tangent of face f in the chart of s, oriented from the face's lower to
// higher vertex (n = 2).
Vec2 face_tangent(const Polyhedron& P, SimplexId s, FaceId f) {
  const auto& fv = P.face(f).vertices;
  const auto& c = P.chart(s);
  return unit(sub(c.position[local_index(P, s, fv[1])], c.position[local_index(P, s, fv[0])]));
}

Vec2 inward_normal(const Polyhedron& P, SimplexId s, FaceId f) {
  return unit(P.chart(s).gradient[apex_of(P, s, f)]);
}

void renormalise(Bary& b, int n) {
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    if (b[i] < 0.0) b[i] = 0.0;
    sum += b[i];
  }
  for (int i = 0; i <= n; ++i) b[i] /= sum;
}

// Moves the flow from the face point onto simplex `target`, keeping the
// tangential component and re-emitting the normal magnitude inward.
void transfer(const Polyhedron& P, FlowState& st, FaceId f, SimplexId target) {
  const int n = P.dimension();
  const SimplexId from = st.position.simplex;
  const Vec2 out = inward_normal(P, from, f);
  const double b = -dot(st.direction, out);
  Vec2 d{0.0, 0.0};
  if (n == 2) {
    const double a = dot(st.direction, face_tangent(P, from, f));
    const Vec2 e = face_tangent(P, target, f);
    d = {a * e[0], a * e[1]};
  }
  const Vec2 nu = inward_normal(P, target, f);
  d[0] += std::abs(b) * nu[0];
  d[1] += std::abs(b) * nu[1];
  const double len = norm(d);
  if (len > 0.0) d = {d[0] / len, d[1] / len};
  auto q = express_in(P, st.position, target);
  if (!q) throw GeometryError("face point does not lie in the continuation simplex");
  st.position = *q;
  st.direction = d;
}

SimplexId choose_branch(const Polyhedron& P, FaceId f, SimplexId from, Rng& rng, const StepOptions& opt) {
  auto adj = P.adjacent(f);
  const int k = static_cast<int>(adj.size());
  if (k == 1) return from;
  if (k == 2 && opt.rule == CrossingRule::unfold) return adj[0] == from ? adj[1] : adj[0];
  int chosen;
  if (!opt.branch_weights.empty() && static_cast<int>(opt.branch_weights.size()) == k) {
    std::discrete_distribution<int> pick(opt.branch_weights.begin(), opt.branch_weights.end());
    chosen = pick(rng);
  } else {
    chosen = std::uniform_int_distribution<int>(0, k - 1)(rng);
  }
  if (opt.choices) opt.choices->push_back(BranchChoice{f, P.branch_index(f, from), chosen});
  return adj[chosen];
}

}  // namespace

StepResult geodesic_step(const Polyhedron& P, const FlowState& s, double L, Rng& rng, const StepOptions& opt) {
  if (!(L >= 0.0)) throw GeometryError("negative step length");
  const int n = P.dimension();
  StepResult r;
  r.state = s;
  FlowState& st = r.state;
  if (L == 0.0) return r;

  const Location start = locate(P, st.position);
  if (start.stratum == Stratum::skeleton) throw CodimensionTwoHit();
  if (start.stratum == Stratum::face) {
    const int k = P.branch_count(start.face);
    if (k != 2 || opt.rule == CrossingRule::uniform)
      transfer(P, st, start.face, choose_branch(P, start.face, st.position.simplex, rng, opt));
  }

  double remaining = L;
  for (int guard = 0; remaining > 0.0; ++guard) {
    if (guard > 10'000'000) throw GeometryError("geodesic step did not terminate");
    const SimplexId S = st.position.simplex;
    const Chart& c = P.chart(S);
    Bary& lam = st.position.bary;
    std::array<double, 3> g{0.0, 0.0, 0.0};
    double best = std::numeric_limits<double>::infinity();
    int hit = -1;
    for (int i = 0; i <= n; ++i) {
      g[i] = dot(c.gradient[i], st.direction);
      if (g[i] < 0.0) {
        const double si = -lam[i] / g[i];
        if (si < best) {
          best = si;
          hit = i;
        }
      }
    }
    if (hit < 0 || best >= remaining) {
      for (int i = 0; i <= n; ++i) lam[i] += remaining * g[i];
      renormalise(lam, n);
      r.travelled += remaining;
      remaining = 0.0;
      break;
    }
    for (int i = 0; i <= n; ++i) lam[i] += best * g[i];
    lam[hit] = 0.0;
    renormalise(lam, n);
    r.travelled += best;
    remaining -= best;
    if (n == 2) {
      for (int i = 0; i <= n; ++i)
        if (i != hit && lam[i] <= kSkeletonTolerance) throw CodimensionTwoHit();
    }
    const FaceId f = P.opposite_face(S, hit);
    if (opt.stop_at && opt.stop_at(f, S)) {
      r.stopped = true;
      r.stop_face = f;
      break;
    }
    transfer(P, st, f, choose_branch(P, f, S, rng, opt));
  }
  st.elapsed += r.travelled;
  return r;
}

FlowState sample_link_direction(const Polyhedron& P, const Point& p, Rng& rng) {
  const Link link = link_at(P, p);
  const int k = link.k();
  const int pick = k > 1 ? std::uniform_int_distribution<int>(0, k - 1)(rng) : 0;
  const LinkBranch& b = link.branches[pick];
  FlowState st;
  st.position = b.base;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (P.dimension() == 1) {
    if (b.full) {
      st.direction = {unif(rng) < 0.5 ? -1.0 : 1.0, 0.0};
    } else {
      st.direction = b.normal;
    }
    return st;
  }
  if (b.full) {
    const double theta = 2.0 * std::numbers::pi * unif(rng);
    st.direction = {std::cos(theta), std::sin(theta)};
  } else {
    const double theta = std::numbers::pi * unif(rng);
    const double ct = std::cos(theta), s = std::sin(theta);
    st.direction = {ct * b.tangent[0] + s * b.normal[0], ct * b.tangent[1] + s * b.normal[1]};
  }
  return st;
}

Point exponential_map(const Polyhedron& P, const Point& p, const FaceTangent& u) {
  const Location loc = locate(P, p);
  if (loc.stratum != Stratum::face) throw GeometryError("exponential map needs a point on an open face");
  auto adj = P.adjacent(loc.face);
  if (u.branch < 0 || u.branch >= static_cast<int>(adj.size())) throw GeometryError("branch out of range");
  if (u.normal < 0.0) throw GeometryError("normal component must be nonnegative");
  if (P.dimension() == 1 && u.tangential != 0.0) throw GeometryError("no tangential direction in dimension 1");
  const SimplexId T = adj[u.branch];
  Point q = *express_in(P, p, T);
  if (u.tangential == 0.0 && u.normal == 0.0) return q;

  const Chart& c = P.chart(T);
  Vec2 x = c.to_chart(q.bary);
  const Vec2 nu = inward_normal(P, T, loc.face);
  x[0] += u.normal * nu[0];
  x[1] += u.normal * nu[1];
  if (P.dimension() == 2) {
    const Vec2 e = face_tangent(P, T, loc.face);
    x[0] += u.tangential * e[0];
    x[1] += u.tangential * e[1];
  }
  Bary b = c.to_bary(x);
  for (int i = 0; i <= P.dimension(); ++i)
    if (b[i] < -1e-12) throw GeometryError("exponential out of range");
  if (u.normal == 0.0) b[apex_of(P, T, loc.face)] = 0.0;
  renormalise(b, P.dimension());
  return Point{T, b};
}

NormalCoordinates normal_coordinates(const Polyhedron& P, FaceId face, const Point& x) {
  int branch = P.branch_index(face, x.simplex);
  Point y = x;
  if (branch < 0) {
    for (SimplexId s : P.adjacent(face)) {
      if (auto q = express_in(P, x, s)) {
        y = *q;
        branch = P.branch_index(face, s);
        break;
      }
    }
  }
  if (branch < 0) throw GeometryError("point not in a simplex adjacent to the face");
  const SimplexId S = y.simplex;
  const Chart& c = P.chart(S);
  const int apex = apex_of(P, S, face);
  NormalCoordinates nc;
  nc.branch = branch;
  nc.normal = y.bary[apex] / norm(c.gradient[apex]);
  if (P.dimension() == 2) {
    const Vec2 o = c.position[local_index(P, S, P.face(face).vertices[0])];
    nc.tangential = dot(sub(c.to_chart(y.bary), o), face_tangent(P, S, face));
  }
  return nc;
}

std::optional<double> chart_distance(const Polyhedron& P, const Point& a, const Point& b) {
  auto try_in = [&](SimplexId s) -> std::optional<double> {
    auto pa = express_in(P, a, s);
    auto pb = express_in(P, b, s);
    if (!pa || !pb) return std::nullopt;
    const Chart& c = P.chart(s);
    return norm(sub(c.to_chart(pa->bary), c.to_chart(pb->bary)));
  };
  if (auto d = try_in(a.simplex)) return d;
  if (auto d = try_in(b.simplex)) return d;
  for (const auto& [v, w] : support(P, a)) {
    for (SimplexId s : P.vertex_star(v))
      if (auto d = try_in(s)) return d;
  }
  return std::nullopt;
}

double broken_geodesic_length(const Polyhedron& P, std::span<const Point> points) {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    auto d = chart_distance(P, points[i - 1], points[i]);
    if (!d) throw GeometryError("consecutive points share no simplex");
    total += *d;
  }
  return total;
}

double distance_to_skeleton(const Polyhedron& P, const Point& p) {
  if (P.dimension() < 2) return std::numeric_limits<double>::infinity();
  const Chart& c = P.chart(p.simplex);
  const Vec2 x = c.to_chart(p.bary);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) best = std::min(best, norm(sub(x, c.position[i])));
  return best;
}

// ---------------------------------------------------------------------------
// SheetFrame

SheetFrame::SheetFrame(const Polyhedron& P, FaceId face, int branch) : P_(&P) {
  auto adj = P.adjacent(face);
  if (branch < 0 || branch >= static_cast<int>(adj.size())) throw GeometryError("branch out of range");
  const SimplexId root = adj[branch];
  const Chart& rc = P.chart(root);
  const Vec2 nu = inward_normal(P, root, face);
  const Vec2 o = rc.position[local_index(P, root, P.face(face).vertices[0])];
  Vec2 e{0.0, 1.0};
  if (P.dimension() == 2) e = face_tangent(P, root, face);
  Placement rp{e[0], e[1], nu[0], nu[1], {0.0, 0.0}};
  rp.offset = {-(rp.a00 * o[0] + rp.a01 * o[1]), -(rp.a10 * o[0] + rp.a11 * o[1])};
  placements_[root] = rp;

  auto apply = [](const Placement& pl, const Vec2& x) {
    return Vec2{pl.a00 * x[0] + pl.a01 * x[1] + pl.offset[0], pl.a10 * x[0] + pl.a11 * x[1] + pl.offset[1]};
  };

  std::queue<SimplexId> todo;
  todo.push(root);
  while (!todo.empty()) {
    const SimplexId s = todo.front();
    todo.pop();
    const Placement ps = placements_.at(s);
    const Chart& cs = P.chart(s);
    for (int i = 0; i <= P.dimension(); ++i) {
      const FaceId g = P.opposite_face(s, i);
      if (g == face || P.branch_count(g) != 2) continue;
      auto ga = P.adjacent(g);
      const SimplexId t = ga[0] == s ? ga[1] : ga[0];
      if (placements_.count(t)) continue;
      const Chart& ct = P.chart(t);
      const Vec2 apex_s = apply(ps, cs.position[i]);
      const auto& gv = P.face(g).vertices;
      const int ta = apex_of(P, t, g);
      Placement pt{};
      if (P.dimension() == 1) {
        const Vec2 shared = apply(ps, cs.position[local_index(P, s, gv[0])]);
        const double qt = ct.position[local_index(P, t, gv[0])][0];
        const double side = apex_s[1] - shared[1];
        // t's apex must land on the opposite side of the shared vertex
        const double sign = ((ct.position[ta][0] - qt) * side < 0.0) ? 1.0 : -1.0;
        pt = Placement{0.0, 0.0, sign, 0.0, {0.0, shared[1] - sign * qt}};
      } else {
        const Vec2 qu = ct.position[local_index(P, t, gv[0])];
        const Vec2 qw = ct.position[local_index(P, t, gv[1])];
        const Vec2 fu = apply(ps, cs.position[local_index(P, s, gv[0])]);
        const Vec2 fw = apply(ps, cs.position[local_index(P, s, gv[1])]);
        const Vec2 dq = sub(qw, qu), df = sub(fw, fu);
        const double side_s = (df[0] * (apex_s[1] - fu[1]) - df[1] * (apex_s[0] - fu[0]));
        for (int reflect = 0; reflect < 2; ++reflect) {
          const double aq = std::atan2(reflect ? -dq[1] : dq[1], dq[0]);
          const double ang = std::atan2(df[1], df[0]) - aq;
          const double cr = std::cos(ang), sr = std::sin(ang);
          const double f = reflect ? -1.0 : 1.0;
          Placement cand{cr, -sr * f, sr, cr * f, {0.0, 0.0}};
          cand.offset = {fu[0] - (cand.a00 * qu[0] + cand.a01 * qu[1]), fu[1] - (cand.a10 * qu[0] + cand.a11 * qu[1])};
          const Vec2 apex_t = apply(cand, ct.position[ta]);
          const double side_t = (df[0] * (apex_t[1] - fu[1]) - df[1] * (apex_t[0] - fu[0]));
          if (side_t * side_s < 0.0) {
            pt = cand;
            break;
          }
        }
      }
      placements_[t] = pt;
      todo.push(t);
    }
  }
}

std::optional<Vec2> SheetFrame::coordinates(const Point& p) const {
  auto it = placements_.find(p.simplex);
  Point q = p;
  if (it == placements_.end()) {
    for (const auto& [s, pl] : placements_) {
      if (auto e = express_in(*P_, p, s)) {
        q = *e;
        it = placements_.find(s);
        break;
      }
    }
    if (it == placements_.end()) return std::nullopt;
  }
  const Placement& pl = it->second;
  const Vec2 x = P_->chart(q.simplex).to_chart(q.bary);
  return Vec2{pl.a00 * x[0] + pl.a01 * x[1] + pl.offset[0], pl.a10 * x[0] + pl.a11 * x[1] + pl.offset[1]};
}

std::optional<Point> SheetFrame::point_at(const Vec2& xy) const {
  const int n = P_->dimension();
  for (const auto& [s, pl] : placements_) {
    const Vec2 d{xy[0] - pl.offset[0], xy[1] - pl.offset[1]};
    Vec2 x;
    if (n == 1) {
      x = {pl.a10 * d[1], 0.0};  // a10 is +-1
    } else {
      x = {pl.a00 * d[0] + pl.a10 * d[1], pl.a01 * d[0] + pl.a11 * d[1]};
    }
    Bary b = P_->chart(s).to_bary(x);
    bool inside = true;
    for (int i = 0; i <= n; ++i) inside = inside && b[i] >= -1e-12;
    if (!inside) continue;
    for (int i = 0; i <= n; ++i)
      if (std::abs(b[i]) <= 1e-12) b[i] = 0.0;
    renormalise(b, n);
    return Point{s, b};
  }
  return std::nullopt;
}

std::vector<SimplexId> SheetFrame::simplices() const {
  std::vector<SimplexId> out;
  for (const auto& [s, pl] : placements_) out.push_back(s);
  return out;
}

// ---------------------------------------------------------------------------
// PageCoordinates

PageCoordinates::PageCoordinates(const Polyhedron& P, FaceId face) : face_(face) {
  for (int b = 0; b < P.branch_count(face); ++b) frames_.emplace_back(P, face, b);
}

PageCoordinates::Coords PageCoordinates::operator()(const Point& p) const {
  int page = -1;
  for (int b = 0; b < pages() && page < 0; ++b)
    if (frames_[b].contains(p.simplex)) page = b;
  std::optional<Vec2> xy;
  if (page >= 0) {
    xy = frames_[page].coordinates(p);
  } else {
    for (int b = 0; b < pages() && !xy; ++b)
      if ((xy = frames_[b].coordinates(p))) page = b;
  }
  if (!xy) throw GeometryError("point outside the pages of the face");
  return Coords{page, (*xy)[0], std::max(0.0, (*xy)[1])};
}

std::optional<Point> PageCoordinates::point(int page, double tangential, double normal) const {
  return frames_.at(page).point_at({tangential, normal});
}

FaceId most_branched_face(const Polyhedron& P) {
  FaceId best = 0;
  for (FaceId f = 0; f < static_cast<FaceId>(P.face_count()); ++f)
    if (P.branch_count(f) > P.branch_count(best)) best = f;
  return best;
}

}  // namespace polybm
