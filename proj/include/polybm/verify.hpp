#pragma once

// Hypothesis tests over simulated paths: Walsh moments, branch probabilities,
// skeleton avoidance, the generator identity, martingale characterisations of
// harmonic maps, morphisms as time-changed Brownian motion, and agreement of
// the two samplers. Each test has a data-level core so its calibration can be
// checked on synthetic null data.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "polybm/harmonic.hpp"
#include "polybm/mesh.hpp"
#include "polybm/operators.hpp"
#include "polybm/process.hpp"

namespace polybm {

struct TestReport {
  std::string test;
  std::string statistic_name;
  double statistic = 0.0;
  std::optional<double> p_value;
  std::optional<double> ci_low, ci_high;
  double level = 0.01;
  bool passed = false;          // decision of the test itself
  bool expected_pass = true;    // false for power checks that must reject
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json details = nlohmann::json::object();

  bool as_expected() const { return passed == expected_pass; }
  nlohmann::json to_json() const;
  std::string to_text() const;
  /// One line: expectation met (ok/FAIL), test, decision, statistic, p-value.
  std::string summary() const;
};

// ---------------------------------------------------------------------------
// Data-level cores

/// Per-branch restricted moments E[d 1{branch l}] and E[d^2 1{branch l}]
/// against (1/k) sqrt(2t/pi) and t/k; Bonferroni over all 2k comparisons.
TestReport walsh_moment_check(std::span<const double> distance, std::span<const int> branch, int k, double t,
                              double level = 0.01);

/// Chi-square of branch counts against the uniform law.
TestReport branch_uniformity_check(std::span<const long long> counts, double level = 0.01);

/// Two-sided z-test that the mean of `values` equals `target`; passes when
/// the confidence interval at 1 - level covers the target.
TestReport mean_coverage_check(std::span<const double> values, double target, double level = 0.01);

enum class MartingaleMode { martingale, submartingale };

/// values[i][j] = f(B_{t_j ^ tau}) on path i, times[0] = 0. Martingale mode:
/// every pairwise difference has mean zero (two-sided, Bonferroni).
/// Submartingale mode: no pairwise difference (later minus earlier) has a
/// negative mean (one-sided, Bonferroni). Both report the CI of the per-path
/// drift slope sum t_j D_j / sum t_j^2.
TestReport martingale_check(const std::vector<std::vector<double>>& values, std::span<const double> times,
                            MartingaleMode mode, double level = 0.01);

/// Normalised increments should be i.i.d. N(0, 1): KS at level/2 and a zero
/// mean z-test at level/2.
TestReport gaussian_increment_check(std::span<const double> z, double level = 0.01);

/// Two-sample KS.
TestReport two_sample_check(std::span<const double> a, std::span<const double> b, double level = 0.01);

// ---------------------------------------------------------------------------
// Simulation tests

enum class WalshSampler { exact, brownian, both };

struct WalshConfig {
  int k = 3;
  double t = 0.01;
  std::size_t paths = 100000;
  WalshSampler sampler = WalshSampler::both;
  double step = 0.0;  // Brownian step; 0 means t / 100
  std::uint64_t seed = 7;
  unsigned threads = 1;
  double level = 0.01;
};

/// Brownian input uses `star` (must be a star with k unit-or-longer edges);
/// the exact sampler needs no complex. Throws VerificationError when paths < 10^4.
TestReport walsh_moment_test(const WalshConfig& cfg, const Polyhedron* star = nullptr);

struct BranchConfig {
  std::size_t crossings = 30000;
  double step = 1e-4;
  std::size_t steps_per_path = 50;
  std::vector<double> branch_weights;  // non-uniform sampler for power checks
  CrossingRule rule = CrossingRule::unfold;
  std::uint64_t seed = 7;
  unsigned threads = 1;
  double level = 0.01;
};

TestReport branch_probability_test(const Polyhedron& P, FaceId face, const BranchConfig& cfg);

struct SkeletonConfig {
  std::vector<double> epsilons{0.1, 0.05, 0.025};
  double horizon = 0.1;
  double step = 1e-4;
  std::size_t paths = 10000;
  double min_slope = 1.5;
  double min_halving = 2.8;
  double max_discard = 1e-3;
  std::uint64_t seed = 7;
  unsigned threads = 1;
};

/// Exact-hit discards and occupation of epsilon-neighbourhoods of the
/// (n-2)-skeleton. A threshold check, not a hypothesis test.
TestReport skeleton_avoidance_test(const Polyhedron& P, const Point& start, const SkeletonConfig& cfg);

/// MC generator estimate at p against half the branch-averaged Laplacian at
/// the mesh node sitting at p.
TestReport generator_consistency_test(const Mesh& mesh, const DiscreteField& f, const Point& p,
                                      const GeneratorConfig& cfg, double level = 0.01);

struct MartingaleConfig {
  std::vector<double> grid{0.005, 0.01, 0.02};
  double horizon = 0.0;  // 0 means the last grid time
  double step = 2.5e-4;
  MartingaleMode mode = MartingaleMode::martingale;
  MonteCarlo mc;
  double level = 0.01;
};

TestReport martingale_test(const Polyhedron& P, const std::function<double(const Point&)>& f, const Point& p0,
                           const Region& U, const MartingaleConfig& cfg);
TestReport martingale_test(const DiscreteField& f, const Point& p0, const Region& U, const MartingaleConfig& cfg);

struct MorphismConfig {
  double clock_step = 0.005;  // A-increment between observations
  int increments = 4;
  double step = 1.25e-4;
  bool time_change = true;  // false compares raw increments over equal t-increments
  MonteCarlo mc{10000, 7, 1, 0.99};
  double level = 0.01;
};

/// phi(B) observed at equal increments of A_t = int lambda(B_s) ds must have
/// i.i.d. N(0, dA) increments. Paths stop on leaving U.
TestReport morphism_test(const DiscreteField& phi, const DiscreteField& lambda, const Point& p0, const Region& U,
                         const MorphismConfig& cfg);

struct SamplerConsistencyConfig {
  double t = 0.01;
  double eta = 0.01;
  double step = 1e-4;
  std::size_t paths = 10000;
  std::uint64_t seed = 7;
  unsigned threads = 1;
  double level = 0.01;
};

/// Distance from p0 at time t under the isotropic process and the Brownian
/// sampler, compared by two-sample KS.
TestReport sampler_consistency_test(const Polyhedron& P, const Point& p0, const SamplerConsistencyConfig& cfg);

// ---------------------------------------------------------------------------
// Calibration

struct Calibration {
  std::string test;
  int repetitions = 0;
  int rejections = 0;
};

/// Runs each data-level core `repetitions` times on synthetic data for which
/// its null hypothesis holds.
std::vector<Calibration> calibrate(int repetitions, std::uint64_t seed, double level = 0.01);

// ---------------------------------------------------------------------------
// Bundled suites

struct SuiteConfig {
  std::filesystem::path data_dir;
  std::optional<std::filesystem::path> complex;  // overrides the bundled complex where meaningful
  std::uint64_t seed = 7;
  std::size_t paths = 100000;
  double eta = 0.01;
  double step = 0.0;       // 0 keeps each test's default
  std::vector<double> grid;  // empty keeps each test's default
  double mesh_h = 0.01;
  double level = 0.01;
  unsigned threads = 1;
};

/// Suite names: walsh, branch, skeleton, generator, martingale, morphism, all.
std::vector<TestReport> run_suite(const std::string& name, const SuiteConfig& cfg);

}  // namespace polybm
