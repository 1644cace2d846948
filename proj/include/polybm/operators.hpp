#pragma once

// Discrete per-simplex Laplacians, the branch-averaged Laplacian, normal-trace
// sums, Dirichlet energy and the Monte Carlo generator estimator.

#include <iosfwd>
#include <vector>

#include <Eigen/SparseCore>

#include "polybm/mesh.hpp"
#include "polybm/process.hpp"
#include "polybm/stats.hpp"

namespace polybm {

/// Approximation of the Laplacian of f restricted to maximal simplex l at a
/// node in the closure of l. Nodes strictly inside l use the lumped P1
/// stencil; nodes on the boundary of l use a one-sided quadratic
/// least-squares fit over nearby nodes of l.
double laplacian_on_simplex(const Mesh& mesh, SimplexId l, const DiscreteField& f, int node);

/// Mean of laplacian_on_simplex over the simplices adjacent to the node's
/// stratum. Throws OperatorError at codimension-2 nodes.
double tilde_laplacian(const Mesh& mesh, const DiscreteField& f, int node);

/// One-sided gradient of f|l at a node of l, in l's chart.
Vec2 gradient_on_simplex(const Mesh& mesh, SimplexId l, const DiscreteField& f, int node);

/// Sum over adjacent simplices of the inward normal derivative at a
/// singular-face node.
double normal_trace_sum(const Mesh& mesh, const DiscreteField& f, int node);

/// Sum over elements of volume * |grad f|^2 / 2 (all components).
double dirichlet_energy(const Mesh& mesh, const DiscreteField& f);

/// Largest elementwise gradient norm.
double max_gradient(const Mesh& mesh, const DiscreteField& f);

/// P1 stiffness matrix (symmetric, zero row sums) and lumped mass.
Eigen::SparseMatrix<double> stiffness_matrix(const Mesh& mesh);
std::vector<double> lumped_mass(const Mesh& mesh);

enum class RowKind { interior, kirchhoff, dirichlet };

/// Stiffness operator with rows classified: interior stencils, Kirchhoff rows
/// at the remaining free nodes (faces, vertices, the free boundary), and
/// identity rows at Dirichlet nodes.
struct OperatorMatrix {
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;
  std::vector<RowKind> rows;

  /// Coordinate-format triples "row,col,value", one per line.
  void write_triples(std::ostream& out) const;
};

OperatorMatrix assemble_operator(const Mesh& mesh, const std::vector<bool>& dirichlet);

/// Discrete domain check: |normal_trace_sum| <= factor * h * max|grad f| at
/// every singular-face node selected by `in_scope`.
struct DomainCheck {
  bool member = true;
  double worst = 0.0;      // largest |normal trace sum| seen
  double tolerance = 0.0;
  int worst_node = -1;
};

DomainCheck check_generator_domain(const Mesh& mesh, const DiscreteField& f,
                                   const std::function<bool(int node)>& in_scope = {}, double factor = 10.0);

struct GeneratorConfig {
  double t = 0.005;
  double step = 0.0;  // Brownian step; 0 means t / 20
  MonteCarlo mc;
};

/// Estimate of (E[f(B_{t ^ tau_U})] - f(p)) / t with U the open star of p.
/// Throws OperatorError("not in generator domain") when f fails the zero
/// normal trace condition on U.
Estimate estimate_generator_mc(const Mesh& mesh, const DiscreteField& f, const Point& p, const GeneratorConfig& cfg);

}  // namespace polybm
