#include "polybm/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "polybm/errors.hpp"

namespace polybm {

namespace {

// Nodes are identified across simplices by their global support with integer
// weight numerators over the common subdivision count.
using NodeKey = std::vector<std::pair<VertexIndex, int>>;

double dist(const Vec2& a, const Vec2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

void hat_gradients(int dim, MeshElement& e) {
  if (dim == 1) {
    const double d = e.coords[1][0] - e.coords[0][0];
    e.gradients[0] = {-1.0 / d, 0.0};
    e.gradients[1] = {1.0 / d, 0.0};
    e.volume = std::abs(d);
    return;
  }
  const Vec2& x0 = e.coords[0];
  const double a = e.coords[1][0] - x0[0], b = e.coords[2][0] - x0[0];
  const double c = e.coords[1][1] - x0[1], d = e.coords[2][1] - x0[1];
  const double det = a * d - b * c;
  // Rows of the inverse of [x1-x0 | x2-x0] are the gradients of hats 1 and 2.
  e.gradients[1] = {d / det, -b / det};
  e.gradients[2] = {-c / det, a / det};
  e.gradients[0] = {-e.gradients[1][0] - e.gradients[2][0], -e.gradients[1][1] - e.gradients[2][1]};
  e.volume = 0.5 * std::abs(det);
}

}  // namespace

Mesh build_mesh(const Polyhedron& P, double h) {
  if (!(h > 0.0)) throw OperatorError("mesh size must be positive");
  const int n = P.dimension();
  double shortest = std::numeric_limits<double>::infinity();
  for (const Simplex& e : P.simplices(1)) {
    const double L = P.edge_length(e.vertices[0], e.vertices[1]);
    shortest = std::min(shortest, L);
  }
  if (h > shortest * (1.0 + 1e-12)) throw OperatorError("h larger than smallest edge");

  Mesh mesh;
  mesh.P_ = &P;
  mesh.vertex_nodes_.assign(P.vertex_count(), -1);
  std::map<NodeKey, int> lookup;

  auto node_for = [&](SimplexId s, const std::array<int, 3>& num, int m) {
    const auto& verts = P.maximal(s).vertices;
    NodeKey key;
    for (int i = 0; i <= n; ++i)
      if (num[i] != 0) key.emplace_back(verts[i], num[i]);
    std::sort(key.begin(), key.end());
    auto [it, inserted] = lookup.emplace(key, static_cast<int>(mesh.nodes_.size()));
    if (!inserted) return it->second;

    MeshNode node;
    node.location.simplex = s;
    for (int i = 0; i <= n; ++i) node.location.bary[i] = static_cast<double>(num[i]) / m;
    const Location loc = locate(P, node.location);
    switch (loc.stratum) {
      case Stratum::interior:
        node.kind = NodeClass::interior;
        break;
      case Stratum::face:
        node.face = loc.face;
        node.kind = P.branch_count(loc.face) >= 2 ? NodeClass::singular_face : NodeClass::boundary;
        node.on_boundary = node.kind == NodeClass::boundary;
        if (n == 1) node.vertex = P.face(loc.face).vertices[0];
        break;
      case Stratum::skeleton:
        node.kind = NodeClass::codim2;
        node.vertex = loc.vertex;
        node.on_boundary = P.vertex_on_boundary(loc.vertex);
        break;
    }
    if (key.size() == 1) mesh.vertex_nodes_[key[0].first] = it->second;
    mesh.nodes_.push_back(node);
    return it->second;
  };

  const std::size_t count = P.maximal_count();
  mesh.subdivisions_.resize(count);
  mesh.grid_nodes_.resize(count);
  mesh.grid_elements_.resize(count);
  const int common = std::max(1, static_cast<int>(std::ceil(shortest / h - 1e-9)));

  for (SimplexId s = 0; s < static_cast<SimplexId>(count); ++s) {
    const Chart& chart = P.chart(s);
    if (n == 1) {
      const auto& v = P.maximal(s).vertices;
      const int m = std::max(1, static_cast<int>(std::ceil(P.edge_length(v[0], v[1]) / h - 1e-9)));
      mesh.subdivisions_[s] = m;
      auto& grid = mesh.grid_nodes_[s];
      for (int i = 0; i <= m; ++i) grid.push_back(node_for(s, {m - i, i, 0}, m));
      for (int i = 0; i < m; ++i) {
        MeshElement e;
        e.host = s;
        e.nodes = {grid[i], grid[i + 1], -1};
        e.coords[0] = chart.to_chart({static_cast<double>(m - i) / m, static_cast<double>(i) / m, 0.0});
        e.coords[1] = chart.to_chart({static_cast<double>(m - i - 1) / m, static_cast<double>(i + 1) / m, 0.0});
        hat_gradients(1, e);
        mesh.grid_elements_[s].push_back(static_cast<int>(mesh.elements_.size()));
        mesh.elements_.push_back(e);
      }
      continue;
    }

    const int m = common;
    mesh.subdivisions_[s] = m;
    auto& grid = mesh.grid_nodes_[s];
    grid.assign((m + 1) * (m + 1), -1);
    for (int i = 0; i <= m; ++i)
      for (int j = 0; i + j <= m; ++j) grid[i * (m + 1) + j] = node_for(s, {m - i - j, i, j}, m);

    auto place = [&](int i, int j) {
      return chart.to_chart({static_cast<double>(m - i - j) / m, static_cast<double>(i) / m, static_cast<double>(j) / m});
    };
    auto add = [&](std::array<std::pair<int, int>, 3> ij) {
      MeshElement e;
      e.host = s;
      for (int a = 0; a < 3; ++a) {
        e.nodes[a] = grid[ij[a].first * (m + 1) + ij[a].second];
        e.coords[a] = place(ij[a].first, ij[a].second);
      }
      hat_gradients(2, e);
      const int id = static_cast<int>(mesh.elements_.size());
      mesh.elements_.push_back(e);
      return id;
    };
    // Cell table: 2 * (i * m + j) is the upward cell at (i, j), +1 the downward one.
    auto& cells = mesh.grid_elements_[s];
    cells.assign(2 * m * m, -1);
    for (int i = 0; i < m; ++i)
      for (int j = 0; i + j < m; ++j) {
        cells[2 * (i * m + j)] = add({{{i, j}, {i + 1, j}, {i, j + 1}}});
        if (i + j + 2 <= m) cells[2 * (i * m + j) + 1] = add({{{i + 1, j}, {i, j + 1}, {i + 1, j + 1}}});
      }
  }

  for (int e = 0; e < static_cast<int>(mesh.elements_.size()); ++e) {
    const MeshElement& el = mesh.elements_[e];
    for (int a = 0; a <= n; ++a) mesh.nodes_[el.nodes[a]].elements.push_back(e);
    for (int a = 0; a <= n; ++a)
      for (int b = a + 1; b <= n; ++b) mesh.h_ = std::max(mesh.h_, dist(el.coords[a], el.coords[b]));
  }
  return mesh;
}

std::pair<int, Bary> Mesh::locate(const Point& p) const {
  const SimplexId s = p.simplex;
  const int m = subdivisions_.at(s);
  if (dimension() == 1) {
    const double u = p.bary[1] * m;
    const int i = std::clamp(static_cast<int>(std::floor(u)), 0, m - 1);
    const double f = std::clamp(u - i, 0.0, 1.0);
    return {grid_elements_[s][i], Bary{1.0 - f, f, 0.0}};
  }
  const double u = p.bary[1] * m, v = p.bary[2] * m;
  const int i = std::clamp(static_cast<int>(std::floor(u)), 0, m - 1);
  const int j = std::clamp(static_cast<int>(std::floor(v)), 0, m - 1 - i);
  const double fu = u - i, fv = v - j;
  const auto& cells = grid_elements_[s];
  if (fu + fv > 1.0 && i + j + 2 <= m) return {cells[2 * (i * m + j) + 1], Bary{1.0 - fv, 1.0 - fu, fu + fv - 1.0}};
  Bary w{1.0 - fu - fv, fu, fv};
  double total = 0.0;
  for (double& x : w) total += (x = std::max(x, 0.0));
  for (double& x : w) x /= total;
  return {cells[2 * (i * m + j)], w};
}

std::optional<int> Mesh::node_at(const Point& p) const {
  const auto [e, w] = locate(p);
  for (int a = 0; a <= dimension(); ++a)
    if (std::abs(w[a] - 1.0) < 1e-9) return elements_[e].nodes[a];
  return std::nullopt;
}

int Mesh::vertex_node(VertexIndex v) const {
  const int id = vertex_nodes_.at(v);
  if (id < 0) throw OperatorError("vertex has no mesh node");
  return id;
}

std::optional<Vec2> Mesh::position_in(int node, SimplexId s) const {
  auto q = express_in(*P_, nodes_.at(node).location, s);
  if (!q) return std::nullopt;
  return P_->chart(s).to_chart(q->bary);
}

// ---------------------------------------------------------------------------

DiscreteField::DiscreteField(const Mesh& mesh, int components)
    : mesh_(&mesh), components_(components), values_(mesh.node_count() * components, 0.0) {
  if (components < 1) throw OperatorError("field needs at least one component");
}

DiscreteField::DiscreteField(const Mesh& mesh, std::vector<double> values, int components)
    : mesh_(&mesh), components_(components), values_(std::move(values)) {
  if (components < 1 || values_.size() != mesh.node_count() * components)
    throw OperatorError("field value count does not match the mesh");
}

DiscreteField DiscreteField::from_function(const Mesh& mesh, std::function<double(const Point&)> fn) {
  DiscreteField f(mesh);
  for (std::size_t i = 0; i < mesh.node_count(); ++i) f.values_[i] = fn(mesh.node(static_cast<int>(i)).location);
  f.exact_ = std::move(fn);
  return f;
}

double DiscreteField::interpolate(const Point& p, int component) const {
  const auto [e, w] = mesh_->locate(p);
  const MeshElement& el = mesh_->element(e);
  double v = 0.0;
  for (int a = 0; a <= mesh_->dimension(); ++a) v += w[a] * (*this)(el.nodes[a], component);
  return v;
}

double DiscreteField::evaluate(const Point& p, int component) const {
  if (exact_ && components_ == 1) return exact_(p);
  return interpolate(p, component);
}

DiscreteField DiscreteField::nodal() const {
  DiscreteField out = *this;
  out.exact_ = nullptr;
  return out;
}

DiscreteField DiscreteField::component(int c) const {
  if (c < 0 || c >= components_) throw OperatorError("field component out of range");
  DiscreteField out(*mesh_);
  for (std::size_t i = 0; i < size(); ++i) out.values_[i] = values_[i * components_ + c];
  if (components_ == 1) out.exact_ = exact_;
  return out;
}

DiscreteField DiscreteField::scaled(double c) const {
  DiscreteField out = *this;
  for (double& v : out.values_) v *= c;
  if (exact_) out.exact_ = [fn = exact_, c](const Point& p) { return c * fn(p); };
  return out;
}

}  // namespace polybm
