#include "polybm/operators.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

#include <Eigen/Dense>

#include "polybm/errors.hpp"

namespace polybm {

namespace {

struct QuadraticFit {
  Vec2 gradient{};
  double laplacian = 0.0;
};

// Nodes reachable from `node` within `rings` element hops, using only
// elements hosted by l.
std::vector<int> ring_nodes(const Mesh& mesh, SimplexId l, int node, int rings) {
  std::set<int> seen{node};
  std::vector<int> frontier{node};
  for (int r = 0; r < rings; ++r) {
    std::vector<int> next;
    for (int q : frontier) {
      for (int e : mesh.node(q).elements) {
        const MeshElement& el = mesh.element(e);
        if (el.host != l) continue;
        for (int a = 0; a <= mesh.dimension(); ++a)
          if (seen.insert(el.nodes[a]).second) next.push_back(el.nodes[a]);
      }
    }
    frontier = std::move(next);
  }
  return {seen.begin(), seen.end()};
}

// Least-squares quadratic through the nodal values of f|l around the node.
QuadraticFit fit_quadratic(const Mesh& mesh, SimplexId l, const DiscreteField& f, int node) {
  const auto origin = mesh.position_in(node, l);
  if (!origin) throw OperatorError("node not adjacent to simplex");
  const int n = mesh.dimension();
  const int unknowns = n == 1 ? 3 : 6;
  const double scale = mesh.h();
  for (int rings = 2; rings <= 4; ++rings) {
    const std::vector<int> near = ring_nodes(mesh, l, node, rings);
    if (static_cast<int>(near.size()) < unknowns) continue;
    Eigen::MatrixXd A(near.size(), unknowns);
    Eigen::VectorXd b(near.size());
    for (std::size_t r = 0; r < near.size(); ++r) {
      const Vec2 x = *mesh.position_in(near[r], l);
      const double dx = (x[0] - (*origin)[0]) / scale, dy = (x[1] - (*origin)[1]) / scale;
      if (n == 1) {
        A.row(r) << 1.0, dx, 0.5 * dx * dx;
      } else {
        A.row(r) << 1.0, dx, dy, 0.5 * dx * dx, dx * dy, 0.5 * dy * dy;
      }
      b[r] = f(near[r]);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < unknowns) continue;
    const Eigen::VectorXd c = qr.solve(b);
    QuadraticFit fit;
    if (n == 1) {
      fit.gradient = {c[1] / scale, 0.0};
      fit.laplacian = c[2] / (scale * scale);
    } else {
      fit.gradient = {c[1] / scale, c[2] / scale};
      fit.laplacian = (c[3] + c[5]) / (scale * scale);
    }
    return fit;
  }
  throw OperatorError("one-sided stencil is rank deficient");
}

Vec2 element_gradient(const Mesh& mesh, const MeshElement& el, const DiscreteField& f, int component) {
  Vec2 g{0.0, 0.0};
  for (int a = 0; a <= mesh.dimension(); ++a) {
    g[0] += f(el.nodes[a], component) * el.gradients[a][0];
    g[1] += f(el.nodes[a], component) * el.gradients[a][1];
  }
  return g;
}

Vec2 inward_unit_normal(const Polyhedron& P, SimplexId s, FaceId face) {
  for (int i = 0; i <= P.dimension(); ++i) {
    if (P.opposite_face(s, i) != face) continue;
    const Vec2& g = P.chart(s).gradient[i];
    const double len = std::hypot(g[0], g[1]);
    return {g[0] / len, g[1] / len};
  }
  throw OperatorError("face is not a face of the simplex");
}

}  // namespace

double laplacian_on_simplex(const Mesh& mesh, SimplexId l, const DiscreteField& f, int node) {
  const MeshNode& nd = mesh.node(node);
  if (nd.kind == NodeClass::interior && nd.location.simplex == l) {
    double stencil = 0.0, mass = 0.0;
    for (int e : nd.elements) {
      const MeshElement& el = mesh.element(e);
      int self = 0;
      while (el.nodes[self] != node) ++self;
      const Vec2& gp = el.gradients[self];
      for (int a = 0; a <= mesh.dimension(); ++a)
        stencil += el.volume * (gp[0] * el.gradients[a][0] + gp[1] * el.gradients[a][1]) * f(el.nodes[a]);
      mass += el.volume / (mesh.dimension() + 1);
    }
    return -stencil / mass;
  }
  return fit_quadratic(mesh, l, f, node).laplacian;
}

Vec2 gradient_on_simplex(const Mesh& mesh, SimplexId l, const DiscreteField& f, int node) {
  return fit_quadratic(mesh, l, f, node).gradient;
}

double tilde_laplacian(const Mesh& mesh, const DiscreteField& f, int node) {
  const MeshNode& nd = mesh.node(node);
  switch (nd.kind) {
    case NodeClass::interior:
      return laplacian_on_simplex(mesh, nd.location.simplex, f, node);
    case NodeClass::singular_face:
    case NodeClass::boundary: {
      auto adj = mesh.polyhedron().adjacent(nd.face);
      double sum = 0.0;
      for (SimplexId s : adj) sum += laplacian_on_simplex(mesh, s, f, node);
      return sum / static_cast<double>(adj.size());
    }
    case NodeClass::codim2:
      break;
  }
  throw OperatorError("tilde Laplacian undefined at codimension-2 node");
}

double normal_trace_sum(const Mesh& mesh, const DiscreteField& f, int node) {
  const MeshNode& nd = mesh.node(node);
  if (nd.kind != NodeClass::singular_face) throw OperatorError("not a singular-face node");
  const Polyhedron& P = mesh.polyhedron();
  double sum = 0.0;
  for (SimplexId s : P.adjacent(nd.face)) {
    const Vec2 g = gradient_on_simplex(mesh, s, f, node);
    const Vec2 nu = inward_unit_normal(P, s, nd.face);
    sum += g[0] * nu[0] + g[1] * nu[1];
  }
  return sum;
}

double dirichlet_energy(const Mesh& mesh, const DiscreteField& f) {
  double energy = 0.0;
  for (const MeshElement& el : mesh.elements())
    for (int c = 0; c < f.components(); ++c) {
      const Vec2 g = element_gradient(mesh, el, f, c);
      energy += 0.5 * el.volume * (g[0] * g[0] + g[1] * g[1]);
    }
  return energy;
}

double max_gradient(const Mesh& mesh, const DiscreteField& f) {
  double best = 0.0;
  for (const MeshElement& el : mesh.elements())
    for (int c = 0; c < f.components(); ++c) {
      const Vec2 g = element_gradient(mesh, el, f, c);
      best = std::max(best, std::hypot(g[0], g[1]));
    }
  return best;
}

Eigen::SparseMatrix<double> stiffness_matrix(const Mesh& mesh) {
  std::vector<Eigen::Triplet<double>> triplets;
  const int n = mesh.dimension();
  for (const MeshElement& el : mesh.elements())
    for (int a = 0; a <= n; ++a)
      for (int b = 0; b <= n; ++b) {
        const double k = el.volume * (el.gradients[a][0] * el.gradients[b][0] + el.gradients[a][1] * el.gradients[b][1]);
        triplets.emplace_back(el.nodes[a], el.nodes[b], k);
      }
  const auto N = static_cast<Eigen::Index>(mesh.node_count());
  Eigen::SparseMatrix<double> K(N, N);
  K.setFromTriplets(triplets.begin(), triplets.end());
  return K;
}

std::vector<double> lumped_mass(const Mesh& mesh) {
  std::vector<double> m(mesh.node_count(), 0.0);
  for (const MeshElement& el : mesh.elements())
    for (int a = 0; a <= mesh.dimension(); ++a) m[el.nodes[a]] += el.volume / (mesh.dimension() + 1);
  return m;
}

OperatorMatrix assemble_operator(const Mesh& mesh, const std::vector<bool>& dirichlet) {
  if (dirichlet.size() != mesh.node_count()) throw OperatorError("Dirichlet mask does not match the mesh");
  const Eigen::SparseMatrix<double, Eigen::RowMajor> K = stiffness_matrix(mesh);
  std::vector<Eigen::Triplet<double>> triplets;
  OperatorMatrix op;
  op.rows.resize(mesh.node_count());
  for (Eigen::Index i = 0; i < K.rows(); ++i) {
    if (dirichlet[i]) {
      op.rows[i] = RowKind::dirichlet;
      triplets.emplace_back(i, i, 1.0);
      continue;
    }
    op.rows[i] = mesh.node(static_cast<int>(i)).kind == NodeClass::interior ? RowKind::interior : RowKind::kirchhoff;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(K, i); it; ++it)
      triplets.emplace_back(i, it.col(), it.value());
  }
  op.matrix.resize(K.rows(), K.cols());
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return op;
}

void OperatorMatrix::write_triples(std::ostream& out) const {
  out << "row,col,value\n";
  for (Eigen::Index i = 0; i < matrix.outerSize(); ++i)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(matrix, i); it; ++it)
      out << it.row() << ',' << it.col() << ',' << it.value() << '\n';
}

DomainCheck check_generator_domain(const Mesh& mesh, const DiscreteField& f,
                                   const std::function<bool(int node)>& in_scope, double factor) {
  DomainCheck check;
  check.tolerance = factor * mesh.h() * max_gradient(mesh, f);
  for (int i = 0; i < static_cast<int>(mesh.node_count()); ++i) {
    if (mesh.node(i).kind != NodeClass::singular_face) continue;
    if (in_scope && !in_scope(i)) continue;
    const double v = std::abs(normal_trace_sum(mesh, f, i));
    if (v > check.worst) {
      check.worst = v;
      check.worst_node = i;
    }
  }
  check.member = check.worst <= check.tolerance + 1e-12;
  return check;
}

Estimate estimate_generator_mc(const Mesh& mesh, const DiscreteField& f, const Point& p, const GeneratorConfig& cfg) {
  const Polyhedron& P = mesh.polyhedron();
  if (locate(P, p).stratum == Stratum::skeleton) throw OperatorError("generator undefined at codimension-2 point");
  if (!(cfg.t > 0.0)) throw OperatorError("time must be positive");
  const Region U = Region::star(P, p);
  const DomainCheck domain =
      check_generator_domain(mesh, f, [&](int i) { return U.contains(P, mesh.node(i).location); });
  if (!domain.member) throw OperatorError("not in generator domain");

  BrownianConfig bc;
  bc.horizon = cfg.t;
  bc.step = cfg.step > 0.0 ? cfg.step : cfg.t / 20.0;
  bc.stop = &U;
  const double f0 = f.evaluate(p);
  struct Outcome {
    double value = 0.0;
    bool kept = false;
  };
  const auto outcomes = map_paths<Outcome>(cfg.mc.paths, cfg.mc.threads, [&](std::size_t i) {
    Rng rng = path_rng(cfg.mc.seed, i);
    const PathSample path = simulate_brownian(P, p, bc, rng);
    if (path.discarded) return Outcome{};
    return Outcome{(f.evaluate(path.points.back()) - f0) / cfg.t, true};
  });
  std::vector<double> values;
  values.reserve(outcomes.size());
  for (const Outcome& o : outcomes)
    if (o.kept) values.push_back(o.value);
  return estimate(values, cfg.mc.confidence);
}

}  // namespace polybm
