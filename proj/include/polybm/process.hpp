#pragma once

// Path simulation on a polyhedron: the isotropic random-flight process, a
// small-step Brownian sampler, and the exact Walsh sampler on star graphs.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "polybm/complex.hpp"
#include "polybm/geometry.hpp"
#include "polybm/random.hpp"
#include "polybm/stats.hpp"

namespace polybm {

/// Open region U of the polyhedron: a union of open maximal simplices glued
/// along the faces all of whose branches belong to the union.
class Region {
 public:
  Region() = default;

  static Region whole(const Polyhedron& P);
  static Region of(const Polyhedron& P, std::span<const SimplexId> simplices);
  /// Open star of p: the maximal simplices whose closure contains p.
  static Region star(const Polyhedron& P, const Point& p);

  bool contains(const Polyhedron& P, const Point& p) const;
  /// True when crossing face f keeps a path inside U.
  bool face_internal(const Polyhedron& P, FaceId f) const;
  bool has_simplex(SimplexId s) const { return s >= 0 && s < static_cast<SimplexId>(member_.size()) && member_[s]; }

  /// Extra membership constraint, monitored at sample times.
  std::function<bool(const Point&)> within;

 private:
  std::vector<bool> member_;
};

struct IsotropicConfig {
  double eta = 0.01;     // in (0, 1]
  double horizon = 1.0;  // external time
  double rate = 1.0;     // exponential holding-time rate of the internal clock
  CrossingRule rule = CrossingRule::unfold;
};

struct BrownianConfig {
  double step = 1e-4;
  double horizon = 1.0;
  CrossingRule rule = CrossingRule::unfold;
  const Region* stop = nullptr;  // stop at the first exit from this region
  std::vector<double> branch_weights;
  bool record_choices = false;
};

struct PathSample {
  std::vector<double> times;
  std::vector<Point> points;
  bool discarded = false;  // hit the (n-2)-skeleton
  std::uint64_t seed = 0;
  std::size_t renewals = 0;            // direction renewals (isotropic process)
  std::optional<double> exit_time;     // set when a stop region was left
  std::optional<FlowState> final_state;
  std::vector<BranchChoice> choices;
};

struct StoppedPath {
  PathSample path;
  double tau = 0.0;
  bool exited = false;
};

/// Isotropic process Y^eta started from a uniform link direction at p0.
PathSample simulate_isotropic(const Polyhedron& P, const Point& p0, const IsotropicConfig& cfg, Rng& rng);
/// Same, continuing a given flow state (position and direction).
PathSample simulate_isotropic_from(const Polyhedron& P, const FlowState& start, const IsotropicConfig& cfg, Rng& rng);

/// Flow speed making the isotropic process converge to the Brownian motion
/// generated by half the branch-averaged Laplacian.
double isotropic_speed(int dimension, double rate);

/// Euler sampler: centred Gaussian displacements of covariance step * I carried
/// through faces by the geodesic flow.
PathSample simulate_brownian(const Polyhedron& P, const Point& p0, const BrownianConfig& cfg, Rng& rng);

struct WalshSample {
  std::vector<double> distance;
  std::vector<int> branch;  // 0-based
  std::size_t beyond_edge = 0;
};

/// Exact draws of Walsh Brownian motion at time t started at the centre:
/// distance |N(0, t)|, branch uniform and independent.
WalshSample sample_walsh_star(int k, double t, std::size_t n, Rng& rng,
                              double edge_length = std::numeric_limits<double>::infinity());

/// Truncation at the first sample outside U, with the crossing time linearly
/// interpolated inside the final step.
StoppedPath stop_at_exit(const Polyhedron& P, const PathSample& path, const Region& U);

/// Last recorded point at or before time t (the stopped value after an exit).
const Point& point_at_time(const PathSample& path, double t);

/// Configuration shared by the Monte Carlo estimators.
struct MonteCarlo {
  std::size_t paths = 100000;
  std::uint64_t seed = 7;
  unsigned threads = 1;
  double confidence = 0.99;
};

}  // namespace polybm
