#pragma once

// Harmonic functions and maps by Dirichlet-energy minimisation, the weakly
// harmonic residual for curved targets, and dilation of real-valued maps.

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "polybm/mesh.hpp"
#include "polybm/random.hpp"

namespace polybm {

struct BoundaryCondition {
  std::map<int, std::vector<double>> values;  // node -> one value per component
  bool allow_singular_nodes = false;          // permit Dirichlet data on singular faces

  int components() const;
  /// Throws SolveError on an empty set, ragged values or unflagged
  /// singular-face nodes.
  void validate(const Mesh& mesh) const;
  std::vector<bool> mask(const Mesh& mesh) const;
};

/// Dirichlet data g on every node of the boundary of the polyhedron.
BoundaryCondition boundary_data(const Mesh& mesh, const std::function<double(const Point&)>& g);
BoundaryCondition boundary_data(const Mesh& mesh, const std::vector<std::function<double(const Point&)>>& g);

/// Energy minimiser with the given boundary values (first component).
DiscreteField solve_dirichlet(const Mesh& mesh, const BoundaryCondition& bc);

/// Componentwise minimiser for maps into flat R^m.
DiscreteField solve_harmonic_map_flat(const Mesh& mesh, const BoundaryCondition& bc, int m);

struct TargetManifold {
  int dimension = 1;
  /// Gamma^k_{ab}(y); empty for a flat target.
  std::function<double(int k, int a, int b, std::span<const double> y)> christoffel;
  std::function<double(int a, int b, std::span<const double> y)> metric;
  std::function<bool(std::span<const double> y)> in_domain;

  static TargetManifold euclidean(int m);
  /// Upper half-plane with metric (dx^2 + dy^2) / y^2.
  static TargetManifold hyperbolic_half_plane();
};

struct WeakResidual {
  DiscreteField residual;     // per node and target component, zero where untested
  std::vector<bool> tested;   // nodes whose hat function was used
  double max_abs = 0.0;
  double relative = 0.0;      // max_abs / (largest stiffness diagonal * max |phi|)
};

/// For each hat function of a tested node, the difference of the two sides of
/// the weakly harmonic equation, per target component. Tested nodes default to
/// those off the boundary of the polyhedron.
WeakResidual weakly_harmonic_residual(const Mesh& mesh, const DiscreteField& phi, const TargetManifold& N,
                                      const std::vector<bool>& tested = {});

/// Nested boxes in the target with a convex function on the outer one.
struct ConvexTester {
  struct Box {
    std::vector<double> lo, hi;
    bool contains(std::span<const double> y) const;
    bool inside(const Box& outer) const;
  };
  Box U1, U2, U3;
  std::function<double(std::span<const double>)> f;

  /// Nesting plus nonnegative second differences along random segments in U3.
  bool certify(Rng& rng, int segments = 1000) const;
};

/// Real function on the target used to probe the dilation identity.
struct TargetFunction {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> laplacian;  // v'' for a one-dimensional flat target
  std::function<bool(double)> in_domain;    // empty means everywhere
};

std::vector<TargetFunction> default_test_functions();

struct DilationResult {
  DiscreteField lambda;
  struct Member {
    std::string name;
    double residual = 0.0;   // max over tested hats, normalised by hat mass
    double tolerance = 0.0;
    bool ok = true;
  };
  std::vector<Member> suite;
  double max_residual = 0.0;
  bool morphism_candidate = true;
};

/// Nodal lambda = |grad phi|^2 (volume-weighted element average) and the
/// residual of the dilation identity over the suite and the hat functions of
/// nodes off the boundary.
DilationResult compute_dilation(const Mesh& mesh, const DiscreteField& phi,
                                const std::vector<TargetFunction>& suite = default_test_functions());

/// Nodal composition v o phi.
DiscreteField pullback(const DiscreteField& phi, const TargetFunction& v);

}  // namespace polybm
