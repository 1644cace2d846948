#pragma once

#include <functional>
#include <span>
#include <vector>

namespace polybm {

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample stdev / sqrt(count)
  std::size_t count = 0;
  double confidence = 0.99;
  double ci_low = 0.0;
  double ci_high = 0.0;

  bool covers(double value) const { return ci_low <= value && value <= ci_high; }
};

/// Mean, standard error and two-sided normal interval. Needs count >= 2.
Estimate estimate(std::span<const double> values, double confidence = 0.99);

double normal_cdf(double x);
/// Upper quantile: P(Z > q) = p.
double normal_upper_quantile(double p);
double two_sided_normal_p(double z);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Pearson goodness of fit of counts against the given probabilities.
ChiSquareResult chi_square_gof(std::span<const long long> counts, std::span<const double> probabilities);

/// Asymptotic Kolmogorov tail Q(lambda) = 2 sum (-1)^(j-1) exp(-2 j^2 lambda^2).
double kolmogorov_tail(double lambda);

struct KsResult {
  double statistic = 0.0;  // sup |F_n - F|
  double p_value = 1.0;
};

KsResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Least-squares slope and intercept of y on x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace polybm
