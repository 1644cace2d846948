#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "polybm/errors.hpp"
#include "polybm/random.hpp"
#include "polybm/stats.hpp"

using namespace polybm;

TEST(Estimate, ConstantSample) {
  const std::vector<double> v{1, 1, 1, 1};
  const Estimate e = estimate(v);
  EXPECT_EQ(e.mean, 1.0);
  EXPECT_EQ(e.std_error, 0.0);
  EXPECT_EQ(e.count, 4u);
}

TEST(Estimate, TwoPoints) {
  const std::vector<double> v{0, 2};
  const Estimate e = estimate(v);
  EXPECT_DOUBLE_EQ(e.mean, 1.0);
  EXPECT_DOUBLE_EQ(e.std_error, 1.0);
}

TEST(Estimate, NeedsTwoValues) {
  const std::vector<double> v{3};
  EXPECT_THROW((void)estimate(v), Error);
}

TEST(Estimate, CoverageNearNominal) {
  int covered = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    Rng rng = path_rng(40, static_cast<std::uint64_t>(t));
    std::normal_distribution<double> g;
    std::vector<double> v(100000);
    for (auto& x : v) x = g(rng);
    const Estimate e = estimate(v, 0.99);
    covered += e.ci_low <= 0.0 && 0.0 <= e.ci_high;
  }
  // Binomial(200, 0.99): at least 193 with probability above 0.999.
  EXPECT_GE(covered, 193);
}

TEST(Normal, QuantilesAndTails) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-15);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
  EXPECT_NEAR(normal_upper_quantile(0.005), 2.5758293035489, 1e-10);
  EXPECT_NEAR(two_sided_normal_p(2.5758293035489), 0.01, 1e-12);
}

TEST(ChiSquare, KnownValue) {
  // Counts (30, 10) against (1/2, 1/2): statistic 10, one degree of freedom.
  const std::vector<long long> counts{30, 10};
  const std::vector<double> p{0.5, 0.5};
  const ChiSquareResult r = chi_square_gof(counts, p);
  EXPECT_DOUBLE_EQ(r.statistic, 10.0);
  EXPECT_EQ(r.dof, 1);
  EXPECT_NEAR(r.p_value, 0.0015654022580025, 1e-12);
}

TEST(Kolmogorov, TailValues) {
  EXPECT_NEAR(kolmogorov_tail(1.3580986393225505), 0.05, 1e-9);
  EXPECT_NEAR(kolmogorov_tail(1.6276236115189504), 0.01, 1e-9);
}

TEST(Kolmogorov, OneSampleDetectsShift) {
  Rng rng(41);
  std::normal_distribution<double> g;
  std::vector<double> same(5000), shifted(5000);
  for (auto& x : same) x = g(rng);
  for (auto& x : shifted) x = g(rng) + 0.2;
  EXPECT_GT(ks_one_sample(same, normal_cdf).p_value, 0.01);
  EXPECT_LT(ks_one_sample(shifted, normal_cdf).p_value, 1e-6);
  EXPECT_LT(ks_two_sample(same, shifted).p_value, 1e-6);
}

TEST(Kolmogorov, OneSampleStatisticByHand) {
  // Uniform cdf on [0, 1]; sample {0.1, 0.5, 0.6}: D = max(1/3 - 0.1, 2/3 - 0.5, 1 - 0.6, ...) = 0.4.
  const std::vector<double> v{0.6, 0.1, 0.5};
  const KsResult r = ks_one_sample(v, [](double x) { return std::clamp(x, 0.0, 1.0); });
  EXPECT_NEAR(r.statistic, 0.4, 1e-15);
}

TEST(Seeds, DerivedStreamsDifferAndRepeat) {
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
  EXPECT_NE(derive_seed(7, 3), derive_seed(7, 4));
  EXPECT_NE(derive_seed(7, 3), derive_seed(8, 3));
  Rng a = path_rng(7, 9), b = path_rng(7, 9);
  EXPECT_EQ(a(), b());
}

TEST(Seeds, ParallelMapIsOrderPreserving) {
  auto f = [](std::size_t i) {
    Rng r = path_rng(5, i);
    return static_cast<double>(r());
  };
  EXPECT_EQ(map_paths<double>(1000, 1, f), map_paths<double>(1000, 3, f));
}

TEST(LineFit, ExactLine) {
  const std::vector<double> x{1, 2, 3}, y{3, 5, 7};
  const LineFit f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
}
