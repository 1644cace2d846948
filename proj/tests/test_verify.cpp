#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "polybm/errors.hpp"
#include "polybm/process.hpp"
#include "polybm/random.hpp"
#include "polybm/verify.hpp"
#include "support.hpp"

using namespace polybm;
using polybm::testing::data_dir;

namespace {

std::vector<std::vector<double>> random_walks(std::size_t n, std::span<const double> times, double drift, Rng& rng) {
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> v(n, std::vector<double>(times.size()));
  for (auto& row : v) {
    row[0] = 0.0;
    for (std::size_t j = 1; j < times.size(); ++j) {
      const double dt = times[j] - times[j - 1];
      row[j] = row[j - 1] + drift * dt + std::sqrt(dt) * g(rng);
    }
  }
  return v;
}

}  // namespace

TEST(WalshCheck, ExactDrawsAcceptedAndWrongTimeRejected) {
  Rng rng(21);
  const WalshSample s = sample_walsh_star(3, 0.01, 100000, rng);
  EXPECT_TRUE(walsh_moment_check(s.distance, s.branch, 3, 0.01).passed);
  // Labelled with the wrong time the restricted moments miss their targets.
  EXPECT_FALSE(walsh_moment_check(s.distance, s.branch, 3, 0.012).passed);
}

TEST(WalshCheck, FullTestNeedsEnoughPaths) {
  WalshConfig cfg;
  cfg.paths = 5000;
  EXPECT_THROW((void)walsh_moment_test(cfg), VerificationError);
  cfg.paths = 100000;
  cfg.sampler = WalshSampler::exact;
  const TestReport r = walsh_moment_test(cfg);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.sample_size, 100000u);
}

TEST(BranchCheck, UniformAndSkewed) {
  const std::vector<long long> even{1010, 990, 1000}, skewed{1200, 900, 900};
  const TestReport a = branch_uniformity_check(even);
  EXPECT_TRUE(a.passed);
  EXPECT_NEAR(a.statistic, 0.2, 1e-12);
  EXPECT_FALSE(branch_uniformity_check(skewed).passed);
}

TEST(MeanCheck, CoverageDecision) {
  Rng rng(22);
  std::normal_distribution<double> g(1.0, 1.0);
  std::vector<double> v(20000);
  for (auto& x : v) x = g(rng);
  EXPECT_TRUE(mean_coverage_check(v, 1.0).passed);
  EXPECT_FALSE(mean_coverage_check(v, 1.1).passed);
}

TEST(MartingaleCheck, ModesAndDrift) {
  const std::vector<double> times{0.0, 0.25, 0.5, 1.0};
  Rng rng(23);
  const auto flat = random_walks(20000, times, 0.0, rng);
  const auto up = random_walks(20000, times, 0.5, rng);
  const auto down = random_walks(20000, times, -0.5, rng);
  EXPECT_TRUE(martingale_check(flat, times, MartingaleMode::martingale).passed);
  EXPECT_FALSE(martingale_check(up, times, MartingaleMode::martingale).passed);
  EXPECT_TRUE(martingale_check(up, times, MartingaleMode::submartingale).passed);
  EXPECT_TRUE(martingale_check(flat, times, MartingaleMode::submartingale).passed);
  EXPECT_FALSE(martingale_check(down, times, MartingaleMode::submartingale).passed);

  const TestReport r = martingale_check(up, times, MartingaleMode::martingale);
  ASSERT_TRUE(r.ci_low && r.ci_high);
  EXPECT_LE(*r.ci_low, 0.5);
  EXPECT_GE(*r.ci_high, 0.5);
}

TEST(GaussianCheck, VarianceAndMean) {
  Rng rng(24);
  std::normal_distribution<double> g;
  std::vector<double> z(20000), wide(20000), shifted(20000);
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = g(rng);
    wide[i] = 1.5 * g(rng);
    shifted[i] = g(rng) + 0.1;
  }
  EXPECT_TRUE(gaussian_increment_check(z).passed);
  EXPECT_FALSE(gaussian_increment_check(wide).passed);
  EXPECT_FALSE(gaussian_increment_check(shifted).passed);
}

TEST(TwoSampleCheck, SameAndDifferent) {
  Rng rng(25);
  std::exponential_distribution<double> e1(1.0), e2(1.3);
  std::vector<double> a(5000), b(5000), c(5000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = e1(rng);
    b[i] = e1(rng);
    c[i] = e2(rng);
  }
  EXPECT_TRUE(two_sample_check(a, b).passed);
  EXPECT_FALSE(two_sample_check(a, c).passed);
}

TEST(Calibration, RejectionRateNearLevel) {
  // 60 repetitions at level 0.01: five or more rejections has probability below 0.003.
  for (const Calibration& c : calibrate(60, 26)) {
    EXPECT_EQ(c.repetitions, 60) << c.test;
    EXPECT_LE(c.rejections, 4) << c.test;
  }
}

TEST(Report, JsonAndSummary) {
  TestReport r;
  r.test = "demo";
  r.statistic_name = "z";
  r.statistic = 1.5;
  r.p_value = 0.13;
  r.passed = true;
  r.sample_size = 10;
  r.seed = 99;
  const nlohmann::json j = r.to_json();
  for (const char* key : {"test", "statistic", "p_value", "ci_low", "level", "decision", "expected", "sample_size",
                          "seed", "config", "details"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["decision"], "accept");
  EXPECT_TRUE(j["ci_low"].is_null());
  EXPECT_EQ(r.summary().rfind("ok", 0), 0u);
  r.expected_pass = false;
  EXPECT_FALSE(r.as_expected());
  EXPECT_EQ(r.summary().rfind("FAIL", 0), 0u);
}

TEST(Suite, UnknownNameThrows) {
  SuiteConfig cfg;
  cfg.data_dir = data_dir();
  EXPECT_THROW((void)run_suite("nonsense", cfg), VerificationError);
}

TEST(Suite, BranchSuiteBehaves) {
  SuiteConfig cfg;
  cfg.data_dir = data_dir();
  cfg.paths = 10000;
  const auto reports = run_suite("branch", cfg);
  ASSERT_FALSE(reports.empty());
  bool saw_power = false;
  for (const TestReport& r : reports) {
    EXPECT_TRUE(r.as_expected()) << r.summary();
    saw_power |= !r.expected_pass;
  }
  EXPECT_TRUE(saw_power);
}
