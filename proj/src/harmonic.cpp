#include "polybm/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "polybm/errors.hpp"
#include "polybm/operators.hpp"

namespace polybm {

int BoundaryCondition::components() const {
  return values.empty() ? 0 : static_cast<int>(values.begin()->second.size());
}

void BoundaryCondition::validate(const Mesh& mesh) const {
  if (values.empty()) throw SolveError("boundary condition has no Dirichlet node");
  const int m = components();
  if (m < 1) throw SolveError("boundary value without components");
  for (const auto& [node, v] : values) {
    if (node < 0 || node >= static_cast<int>(mesh.node_count())) throw SolveError("Dirichlet node out of range");
    if (static_cast<int>(v.size()) != m) throw SolveError("boundary values have differing component counts");
    if (!allow_singular_nodes && mesh.node(node).kind == NodeClass::singular_face)
      throw SolveError("Dirichlet node on a singular face");
  }
}

std::vector<bool> BoundaryCondition::mask(const Mesh& mesh) const {
  std::vector<bool> m(mesh.node_count(), false);
  for (const auto& entry : values) m.at(entry.first) = true;
  return m;
}

BoundaryCondition boundary_data(const Mesh& mesh, const std::vector<std::function<double(const Point&)>>& g) {
  BoundaryCondition bc;
  for (int i = 0; i < static_cast<int>(mesh.node_count()); ++i) {
    const MeshNode& nd = mesh.node(i);
    if (!nd.on_boundary) continue;
    std::vector<double> v;
    for (const auto& fn : g) v.push_back(fn(nd.location));
    bc.values.emplace(i, std::move(v));
  }
  return bc;
}

BoundaryCondition boundary_data(const Mesh& mesh, const std::function<double(const Point&)>& g) {
  return boundary_data(mesh, std::vector<std::function<double(const Point&)>>{g});
}

namespace {

// Components of the node graph; each must carry Dirichlet data.
void check_components(const Mesh& mesh, const std::vector<bool>& fixed) {
  std::vector<int> parent(mesh.node_count());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const MeshElement& el : mesh.elements())
    for (int a = 1; a <= mesh.dimension(); ++a) parent[find(el.nodes[a])] = find(el.nodes[0]);
  std::vector<bool> anchored(mesh.node_count(), false);
  for (std::size_t i = 0; i < fixed.size(); ++i)
    if (fixed[i]) anchored[find(static_cast<int>(i))] = true;
  for (std::size_t i = 0; i < fixed.size(); ++i)
    if (!anchored[find(static_cast<int>(i))]) throw SolveError("disconnected component with no Dirichlet node");
}

Eigen::MatrixXd solve_components(const Mesh& mesh, const BoundaryCondition& bc, int m) {
  bc.validate(mesh);
  if (bc.components() < m) throw SolveError("boundary condition has too few components");
  const std::vector<bool> fixed = bc.mask(mesh);
  check_components(mesh, fixed);

  const std::size_t N = mesh.node_count();
  std::vector<int> index(N, -1);
  int free_count = 0;
  for (std::size_t i = 0; i < N; ++i)
    if (!fixed[i]) index[i] = free_count++;

  const Eigen::SparseMatrix<double> K = stiffness_matrix(mesh);
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(free_count, m);
  for (Eigen::Index col = 0; col < K.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it) {
      const int r = index[it.row()];
      if (r < 0) continue;
      if (index[col] >= 0) {
        triplets.emplace_back(r, index[col], it.value());
      } else {
        const auto& g = bc.values.at(static_cast<int>(col));
        for (int c = 0; c < m; ++c) rhs(r, c) -= it.value() * g[c];
      }
    }

  Eigen::MatrixXd out(N, m);
  for (const auto& [node, g] : bc.values)
    for (int c = 0; c < m; ++c) out(node, c) = g[c];
  if (free_count == 0) return out;

  Eigen::SparseMatrix<double> A(free_count, free_count);
  A.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::MatrixXd u(free_count, m);
  if (free_count <= 100000) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw SolveError("singular system");
    u = ldlt.solve(rhs);
  } else {
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg(A);
    cg.setTolerance(1e-12);
    u = cg.solve(rhs);
    if (cg.info() != Eigen::Success) throw SolveError("conjugate gradient did not converge");
  }
  for (int c = 0; c < m; ++c) {
    const double residual = (A * u.col(c) - rhs.col(c)).norm();
    if (!std::isfinite(residual) || residual > 1e-10 * std::max(1.0, rhs.col(c).norm()))
      throw SolveError("singular system");
  }
  for (std::size_t i = 0; i < N; ++i)
    if (index[i] >= 0) out.row(i) = u.row(index[i]);
  return out;
}

}  // namespace

DiscreteField solve_dirichlet(const Mesh& mesh, const BoundaryCondition& bc) {
  const Eigen::MatrixXd u = solve_components(mesh, bc, 1);
  return DiscreteField(mesh, std::vector<double>(u.data(), u.data() + u.rows()));
}

DiscreteField solve_harmonic_map_flat(const Mesh& mesh, const BoundaryCondition& bc, int m) {
  if (m < 1) throw SolveError("target dimension must be positive");
  const Eigen::MatrixXd u = solve_components(mesh, bc, m);
  DiscreteField phi(mesh, m);
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    for (int c = 0; c < m; ++c) phi(static_cast<int>(i), c) = u(i, c);
  return phi;
}

// ---------------------------------------------------------------------------

TargetManifold TargetManifold::euclidean(int m) {
  TargetManifold N;
  N.dimension = m;
  N.metric = [](int a, int b, std::span<const double>) { return a == b ? 1.0 : 0.0; };
  return N;
}

TargetManifold TargetManifold::hyperbolic_half_plane() {
  TargetManifold N;
  N.dimension = 2;
  N.metric = [](int a, int b, std::span<const double> y) { return a == b ? 1.0 / (y[1] * y[1]) : 0.0; };
  N.christoffel = [](int k, int a, int b, std::span<const double> y) {
    const double inv = 1.0 / y[1];
    if (k == 0) return (a + b == 1) ? -inv : 0.0;  // Gamma^x_xy
    if (a == 0 && b == 0) return inv;               // Gamma^y_xx
    if (a == 1 && b == 1) return -inv;              // Gamma^y_yy
    return 0.0;
  };
  N.in_domain = [](std::span<const double> y) { return y[1] > 0.0; };
  return N;
}

WeakResidual weakly_harmonic_residual(const Mesh& mesh, const DiscreteField& phi, const TargetManifold& N,
                                      const std::vector<bool>& tested) {
  const int m = N.dimension;
  if (phi.components() != m) throw OperatorError("map dimension does not match the target");
  const int n = mesh.dimension();
  WeakResidual out;
  out.residual = DiscreteField(mesh, m);
  out.tested = tested;
  if (out.tested.empty()) {
    out.tested.resize(mesh.node_count());
    for (std::size_t i = 0; i < mesh.node_count(); ++i) out.tested[i] = !mesh.node(static_cast<int>(i)).on_boundary;
  }

  std::vector<double> y(m);
  double phi_max = 0.0;
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    for (int c = 0; c < m; ++c) {
      y[c] = phi(static_cast<int>(i), c);
      phi_max = std::max(phi_max, std::abs(y[c]));
    }
    if (N.in_domain && !N.in_domain(y)) throw OperatorError("map leaves the target chart");
  }

  std::vector<double> diag(mesh.node_count(), 0.0);
  std::vector<Vec2> grads(m);
  for (const MeshElement& el : mesh.elements()) {
    for (int c = 0; c < m; ++c) {
      grads[c] = {0.0, 0.0};
      for (int a = 0; a <= n; ++a) {
        grads[c][0] += phi(el.nodes[a], c) * el.gradients[a][0];
        grads[c][1] += phi(el.nodes[a], c) * el.gradients[a][1];
      }
    }
    for (int a = 0; a <= n; ++a) {
      const int i = el.nodes[a];
      const Vec2& gl = el.gradients[a];
      diag[i] += el.volume * (gl[0] * gl[0] + gl[1] * gl[1]);
      if (!out.tested[i]) continue;
      for (int c = 0; c < m; ++c) y[c] = phi(i, c);
      for (int k = 0; k < m; ++k) {
        double r = el.volume * (gl[0] * grads[k][0] + gl[1] * grads[k][1]);
        if (N.christoffel) {
          double source = 0.0;
          for (int al = 0; al < m; ++al)
            for (int be = 0; be < m; ++be) {
              const double g = N.christoffel(k, al, be, y);
              if (g != 0.0) source += g * (grads[al][0] * grads[be][0] + grads[al][1] * grads[be][1]);
            }
          r -= el.volume / (n + 1) * source;
        }
        out.residual(i, k) += r;
      }
    }
  }
  double diag_max = 0.0;
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    diag_max = std::max(diag_max, diag[i]);
    if (!out.tested[i]) continue;
    for (int k = 0; k < m; ++k) out.max_abs = std::max(out.max_abs, std::abs(out.residual(static_cast<int>(i), k)));
  }
  const double scale = diag_max * phi_max;
  out.relative = scale > 0.0 ? out.max_abs / scale : out.max_abs;
  return out;
}

// ---------------------------------------------------------------------------

bool ConvexTester::Box::contains(std::span<const double> y) const {
  if (y.size() != lo.size()) return false;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] < lo[i] || y[i] > hi[i]) return false;
  return true;
}

bool ConvexTester::Box::inside(const Box& outer) const {
  if (lo.size() != outer.lo.size()) return false;
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (lo[i] < outer.lo[i] || hi[i] > outer.hi[i]) return false;
  return true;
}

bool ConvexTester::certify(Rng& rng, int segments) const {
  if (!f || !U1.inside(U2) || !U2.inside(U3)) return false;
  const std::size_t m = U3.lo.size();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> a(m), b(m), x(m), lo(m), hi(m);
  for (int s = 0; s < segments; ++s) {
    for (std::size_t i = 0; i < m; ++i) {
      a[i] = U3.lo[i] + unit(rng) * (U3.hi[i] - U3.lo[i]);
      b[i] = U3.lo[i] + unit(rng) * (U3.hi[i] - U3.lo[i]);
    }
    for (double t : {0.25, 0.5, 0.75}) {
      for (std::size_t i = 0; i < m; ++i) {
        x[i] = a[i] + t * (b[i] - a[i]);
        lo[i] = a[i] + (t - 0.25) * (b[i] - a[i]);
        hi[i] = a[i] + (t + 0.25) * (b[i] - a[i]);
      }
      const double fx = f(x), second = f(lo) + f(hi) - 2.0 * fx;
      if (second < -1e-12 * std::max(1.0, std::abs(fx))) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

std::vector<TargetFunction> default_test_functions() {
  return {
      {"y", [](double y) { return y; }, [](double) { return 0.0; }, {}},
      {"y^2", [](double y) { return y * y; }, [](double) { return 2.0; }, {}},
  };
}

DiscreteField pullback(const DiscreteField& phi, const TargetFunction& v) {
  if (phi.components() != 1) throw OperatorError("pullback needs a real-valued map");
  DiscreteField out(phi.mesh());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double y = phi(static_cast<int>(i));
    if (v.in_domain && !v.in_domain(y)) throw OperatorError("map range outside the domain of " + v.name);
    out(static_cast<int>(i)) = v.value(y);
  }
  return out;
}

DilationResult compute_dilation(const Mesh& mesh, const DiscreteField& phi, const std::vector<TargetFunction>& suite) {
  if (phi.components() != 1) throw OperatorError("dilation needs a real-valued map");
  const int n = mesh.dimension();
  const std::size_t N = mesh.node_count();

  bool usable = false;
  for (const TargetFunction& v : suite) {
    bool nonzero = true;
    for (std::size_t i = 0; i < N && nonzero; ++i) nonzero = v.laplacian(phi(static_cast<int>(i))) != 0.0;
    usable = usable || nonzero;
  }
  if (!usable) throw OperatorError("target Laplacian of every test function vanishes on the range");

  DilationResult out;
  out.lambda = DiscreteField(mesh);
  std::vector<double> weight(N, 0.0);
  for (const MeshElement& el : mesh.elements()) {
    Vec2 g{0.0, 0.0};
    for (int a = 0; a <= n; ++a) {
      g[0] += phi(el.nodes[a]) * el.gradients[a][0];
      g[1] += phi(el.nodes[a]) * el.gradients[a][1];
    }
    const double sq = g[0] * g[0] + g[1] * g[1];
    for (int a = 0; a <= n; ++a) {
      out.lambda(el.nodes[a]) += el.volume * sq;
      weight[el.nodes[a]] += el.volume;
    }
  }
  for (std::size_t i = 0; i < N; ++i) out.lambda(static_cast<int>(i)) /= weight[i];

  const Eigen::SparseMatrix<double> K = stiffness_matrix(mesh);
  const std::vector<double> mass = lumped_mass(mesh);
  for (const TargetFunction& v : suite) {
    const DiscreteField pulled = pullback(phi, v);
    const Eigen::Map<const Eigen::VectorXd> values(pulled.values().data(), static_cast<Eigen::Index>(N));
    const Eigen::VectorXd Kv = K * values;
    DilationResult::Member member;
    member.name = v.name;
    double source_max = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      if (mesh.node(static_cast<int>(i)).on_boundary) continue;
      const double source = out.lambda(static_cast<int>(i)) * v.laplacian(phi(static_cast<int>(i)));
      source_max = std::max(source_max, std::abs(source));
      member.residual = std::max(member.residual, std::abs(-Kv[i] / mass[i] - source));
    }
    member.tolerance = 10.0 * mesh.h() * std::max(1.0, source_max);
    member.ok = member.residual <= member.tolerance;
    out.max_residual = std::max(out.max_residual, member.residual);
    out.morphism_candidate = out.morphism_candidate && member.ok;
    out.suite.push_back(member);
  }
  return out;
}

}  // namespace polybm
