#include "polybm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "polybm/errors.hpp"
#include "polybm/io.hpp"

namespace polybm {

// ---------------------------------------------------------------------------
// Reports

nlohmann::json TestReport::to_json() const {
  nlohmann::json j;
  j["test"] = test;
  j["statistic_name"] = statistic_name;
  j["statistic"] = statistic;
  j["p_value"] = p_value ? nlohmann::json(*p_value) : nlohmann::json(nullptr);
  j["ci_low"] = ci_low ? nlohmann::json(*ci_low) : nlohmann::json(nullptr);
  j["ci_high"] = ci_high ? nlohmann::json(*ci_high) : nlohmann::json(nullptr);
  j["level"] = level;
  j["decision"] = passed ? "accept" : "reject";
  j["expected"] = expected_pass ? "accept" : "reject";
  j["sample_size"] = sample_size;
  j["seed"] = seed;
  j["config"] = config;
  j["details"] = details;
  return j;
}

std::string TestReport::summary() const {
  std::ostringstream out;
  out << (as_expected() ? "ok   " : "FAIL ") << test << ": " << (passed ? "accept" : "reject");
  if (!expected_pass) out << " (expected reject)";
  out << ' ' << statistic_name << '=' << format_double(statistic);
  if (p_value) out << " p=" << format_double(*p_value);
  if (ci_low && ci_high) out << " ci=[" << format_double(*ci_low) << ", " << format_double(*ci_high) << ']';
  out << " n=" << sample_size;
  return out.str();
}

std::string TestReport::to_text() const {
  std::ostringstream out;
  out << summary() << '\n';
  out << "  level: " << format_double(level) << "  seed: " << seed << '\n';
  out << "  config: " << config.dump() << '\n';
  for (const auto& [key, value] : details.items()) out << "  " << key << ": " << value.dump() << '\n';
  return out.str();
}

namespace {

double bonferroni(double p_min, std::size_t m) { return std::min(1.0, p_min * static_cast<double>(m)); }

double z_of(const Estimate& e, double target) {
  const double d = e.mean - target;
  if (e.std_error > 0.0) return d / e.std_error;
  return d == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), d);
}

}  // namespace

// ---------------------------------------------------------------------------
// Data-level cores

TestReport walsh_moment_check(std::span<const double> distance, std::span<const int> branch, int k, double t,
                              double level) {
  if (distance.size() != branch.size()) throw VerificationError("distance and branch counts differ");
  if (k < 2) throw VerificationError("Walsh moments need k >= 2");
  TestReport r;
  r.test = "walsh_moment";
  r.statistic_name = "max|z|";
  r.level = level;
  r.sample_size = distance.size();
  const double first_target = std::sqrt(2.0 * t / std::numbers::pi) / k;
  const double second_target = t / k;
  double p_min = 1.0, z_max = 0.0;
  nlohmann::json per_branch = nlohmann::json::array();
  std::vector<double> a(distance.size()), b(distance.size());
  for (int l = 0; l < k; ++l) {
    for (std::size_t i = 0; i < distance.size(); ++i) {
      const bool on = branch[i] == l;
      a[i] = on ? distance[i] : 0.0;
      b[i] = on ? distance[i] * distance[i] : 0.0;
    }
    const Estimate e1 = estimate(a, 1.0 - level), e2 = estimate(b, 1.0 - level);
    const double z1 = z_of(e1, first_target), z2 = z_of(e2, second_target);
    p_min = std::min({p_min, two_sided_normal_p(z1), two_sided_normal_p(z2)});
    z_max = std::max({z_max, std::abs(z1), std::abs(z2)});
    per_branch.push_back({{"branch", l + 1},
                          {"first_moment", e1.mean},
                          {"first_std_error", e1.std_error},
                          {"first_z", z1},
                          {"second_moment", e2.mean},
                          {"second_std_error", e2.std_error},
                          {"second_z", z2}});
  }
  r.statistic = z_max;
  r.p_value = bonferroni(p_min, 2 * static_cast<std::size_t>(k));
  r.passed = *r.p_value > level;
  r.details["first_target"] = first_target;
  r.details["second_target"] = second_target;
  r.details["branches"] = per_branch;
  r.details["within_3_sigma"] = z_max <= 3.0;
  return r;
}

TestReport branch_uniformity_check(std::span<const long long> counts, double level) {
  const std::size_t k = counts.size();
  if (k < 2) throw VerificationError("branch test needs at least two branches");
  const std::vector<double> probs(k, 1.0 / static_cast<double>(k));
  const ChiSquareResult chi = chi_square_gof(counts, probs);
  TestReport r;
  r.test = "branch_probability";
  r.statistic_name = "chi2";
  r.statistic = chi.statistic;
  r.p_value = chi.p_value;
  r.level = level;
  r.passed = chi.p_value > level;
  long long total = 0;
  for (long long c : counts) total += c;
  r.sample_size = static_cast<std::size_t>(total);
  r.details["counts"] = std::vector<long long>(counts.begin(), counts.end());
  r.details["dof"] = chi.dof;
  return r;
}

TestReport mean_coverage_check(std::span<const double> values, double target, double level) {
  const Estimate e = estimate(values, 1.0 - level);
  TestReport r;
  r.test = "mean_coverage";
  r.statistic_name = "mean";
  r.statistic = e.mean;
  r.p_value = two_sided_normal_p(z_of(e, target));
  r.ci_low = e.ci_low;
  r.ci_high = e.ci_high;
  r.level = level;
  r.passed = e.covers(target);
  r.sample_size = e.count;
  r.details["target"] = target;
  r.details["std_error"] = e.std_error;
  return r;
}

TestReport martingale_check(const std::vector<std::vector<double>>& values, std::span<const double> times,
                            MartingaleMode mode, double level) {
  const std::size_t G = times.size();
  if (G < 2 || times[0] != 0.0) throw VerificationError("martingale grid must start at 0 and have two times");
  for (std::size_t j = 1; j < G; ++j)
    if (!(times[j] > times[j - 1])) throw VerificationError("martingale grid must be increasing");
  const std::size_t n = values.size();
  if (n < 2) throw VerificationError("martingale test needs at least two paths");
  for (const auto& row : values)
    if (row.size() != G) throw VerificationError("path values do not match the grid");

  TestReport r;
  r.test = mode == MartingaleMode::martingale ? "martingale" : "submartingale";
  r.statistic_name = mode == MartingaleMode::martingale ? "max|z|" : "min z";
  r.level = level;
  r.sample_size = n;

  std::vector<double> d(n);
  nlohmann::json per_time = nlohmann::json::array();
  for (std::size_t j = 0; j < G; ++j) {
    for (std::size_t i = 0; i < n; ++i) d[i] = values[i][j];
    const Estimate e = estimate(d, 1.0 - level);
    per_time.push_back({{"t", times[j]}, {"mean", e.mean}, {"std_error", e.std_error}});
  }

  const std::size_t pairs = G * (G - 1) / 2;
  double p_min = 1.0;
  double stat = mode == MartingaleMode::martingale ? 0.0 : std::numeric_limits<double>::infinity();
  nlohmann::json pair_z = nlohmann::json::array();
  for (std::size_t a = 0; a < G; ++a)
    for (std::size_t b = a + 1; b < G; ++b) {
      for (std::size_t i = 0; i < n; ++i) d[i] = values[i][b] - values[i][a];
      const double z = z_of(estimate(d, 1.0 - level), 0.0);
      pair_z.push_back({{"from", times[a]}, {"to", times[b]}, {"z", z}});
      if (mode == MartingaleMode::martingale) {
        p_min = std::min(p_min, two_sided_normal_p(z));
        stat = std::max(stat, std::abs(z));
      } else {
        p_min = std::min(p_min, normal_cdf(z));
        stat = std::min(stat, z);
      }
    }
  r.statistic = stat;
  r.p_value = bonferroni(p_min, pairs);
  r.passed = *r.p_value > level;

  double tt = 0.0;
  for (std::size_t j = 1; j < G; ++j) tt += times[j] * times[j];
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 1; j < G; ++j) s += times[j] * (values[i][j] - values[i][0]);
    d[i] = s / tt;
  }
  const Estimate slope = estimate(d, 1.0 - level);
  r.ci_low = slope.ci_low;
  r.ci_high = slope.ci_high;
  r.details["drift_slope"] = slope.mean;
  r.details["drift_slope_std_error"] = slope.std_error;
  r.details["grid"] = per_time;
  r.details["pairs"] = pair_z;
  return r;
}

TestReport gaussian_increment_check(std::span<const double> z, double level) {
  if (z.size() < 2) throw VerificationError("too few increments");
  const KsResult ks = ks_one_sample(std::vector<double>(z.begin(), z.end()), normal_cdf);
  const Estimate e = estimate(z, 1.0 - level);
  const double p_drift = two_sided_normal_p(z_of(e, 0.0));
  double sq = 0.0;
  for (double x : z) sq += x * x;
  TestReport r;
  r.test = "gaussian_increments";
  r.statistic_name = "ks";
  r.statistic = ks.statistic;
  r.p_value = bonferroni(std::min(ks.p_value, p_drift), 2);
  r.ci_low = e.ci_low;
  r.ci_high = e.ci_high;
  r.level = level;
  r.passed = *r.p_value > level;
  r.sample_size = z.size();
  r.details["ks_p_value"] = ks.p_value;
  r.details["drift_p_value"] = p_drift;
  r.details["mean"] = e.mean;
  r.details["mean_square"] = sq / static_cast<double>(z.size());
  return r;
}

TestReport two_sample_check(std::span<const double> a, std::span<const double> b, double level) {
  const KsResult ks = ks_two_sample(std::vector<double>(a.begin(), a.end()), std::vector<double>(b.begin(), b.end()));
  TestReport r;
  r.test = "two_sample";
  r.statistic_name = "ks";
  r.statistic = ks.statistic;
  r.p_value = ks.p_value;
  r.level = level;
  r.passed = ks.p_value > level;
  r.sample_size = a.size() + b.size();
  return r;
}

// ---------------------------------------------------------------------------
// Simulation tests

namespace {

VertexIndex star_centre(const Polyhedron& P) {
  VertexIndex best = 0;
  for (VertexIndex v = 0; v < static_cast<VertexIndex>(P.vertex_count()); ++v)
    if (P.vertex_star(v).size() > P.vertex_star(best).size()) best = v;
  return best;
}

struct WalshDraws {
  std::vector<double> distance;
  std::vector<int> branch;
};

WalshDraws brownian_walsh(const Polyhedron& P, const WalshConfig& cfg, std::uint64_t seed) {
  if (P.dimension() != 1) throw VerificationError("Walsh test needs a star graph");
  const VertexIndex c = star_centre(P);
  const auto star = P.vertex_star(c);
  if (static_cast<int>(star.size()) != cfg.k) throw VerificationError("star does not have k edges");
  const Point centre = vertex_point(P, c);
  BrownianConfig bc;
  bc.horizon = cfg.t;
  bc.step = cfg.step > 0.0 ? cfg.step : cfg.t / 100.0;
  struct Draw {
    double d = 0.0;
    int b = 0;
  };
  const auto draws = map_paths<Draw>(cfg.paths, cfg.threads, [&](std::size_t i) {
    Rng rng = path_rng(seed, i);
    const PathSample path = simulate_brownian(P, centre, bc, rng);
    const Point& end = path.points.back();
    const auto d = chart_distance(P, centre, end);
    if (!d) throw VerificationError("path left the star of the centre");
    const int b = static_cast<int>(std::find(star.begin(), star.end(), end.simplex) - star.begin());
    return Draw{*d, b};
  });
  WalshDraws out;
  for (const Draw& d : draws) {
    out.distance.push_back(d.d);
    out.branch.push_back(d.b);
  }
  return out;
}

nlohmann::json walsh_config_json(const WalshConfig& cfg, const char* sampler) {
  return {{"k", cfg.k}, {"t", cfg.t}, {"paths", cfg.paths}, {"sampler", sampler},
          {"step", cfg.step > 0.0 ? cfg.step : cfg.t / 100.0}};
}

}  // namespace

TestReport walsh_moment_test(const WalshConfig& cfg, const Polyhedron* star) {
  if (cfg.paths < 10000) throw VerificationError("insufficient sample size for Walsh moments (need 10^4)");
  const bool exact = cfg.sampler != WalshSampler::brownian;
  const bool brownian = cfg.sampler != WalshSampler::exact;
  if (brownian && !star) throw VerificationError("Brownian Walsh sampler needs a star complex");
  const double sub_level = exact && brownian ? cfg.level / 2.0 : cfg.level;

  std::optional<TestReport> re, rb;
  if (exact) {
    Rng rng(derive_seed(cfg.seed, 0));
    const WalshSample s = sample_walsh_star(cfg.k, cfg.t, cfg.paths, rng);
    re = walsh_moment_check(s.distance, s.branch, cfg.k, cfg.t, sub_level);
  }
  if (brownian) {
    const WalshDraws w = brownian_walsh(*star, cfg, derive_seed(cfg.seed, 1));
    rb = walsh_moment_check(w.distance, w.branch, cfg.k, cfg.t, sub_level);
  }

  TestReport r = exact ? *re : *rb;
  std::ostringstream name;
  name << "walsh_moment[k=" << cfg.k << ",t=" << format_double(cfg.t) << ']';
  r.test = name.str();
  r.level = cfg.level;
  r.seed = cfg.seed;
  r.config = walsh_config_json(cfg, exact && brownian ? "both" : exact ? "exact" : "brownian");
  if (exact && brownian) {
    r.statistic = std::max(re->statistic, rb->statistic);
    r.p_value = bonferroni(std::min(*re->p_value, *rb->p_value), 2);
    r.passed = re->passed && rb->passed;
    r.sample_size = re->sample_size + rb->sample_size;
    r.details = {{"exact", re->details}, {"brownian", rb->details},
                 {"within_3_sigma", re->details["within_3_sigma"].get<bool>() && rb->details["within_3_sigma"].get<bool>()}};
  }
  return r;
}

TestReport branch_probability_test(const Polyhedron& P, FaceId face, const BranchConfig& cfg) {
  const int k = P.branch_count(face);
  if (k < 3 && !(k == 2 && cfg.rule == CrossingRule::uniform))
    throw VerificationError("branch test needs k >= 3 or the uniform crossing rule");
  if (cfg.crossings < 100 * static_cast<std::size_t>(k)) throw VerificationError("too few crossings (need 100 k)");

  const std::vector<double> weights(P.face(face).vertices.size(), 1.0 / static_cast<double>(P.face(face).vertices.size()));
  const Point start = face_point(P, face, weights);
  BrownianConfig bc;
  bc.step = cfg.step;
  bc.horizon = cfg.step * static_cast<double>(cfg.steps_per_path);
  bc.rule = cfg.rule;
  bc.branch_weights = cfg.branch_weights;
  bc.record_choices = true;

  constexpr std::size_t batch = 1000;
  std::vector<long long> counts(k, 0);
  std::size_t total = 0, paths = 0;
  while (total < cfg.crossings) {
    const auto per_path = map_paths<std::vector<long long>>(batch, cfg.threads, [&](std::size_t i) {
      Rng rng = path_rng(cfg.seed, paths + i);
      const PathSample path = simulate_brownian(P, start, bc, rng);
      std::vector<long long> c(k, 0);
      for (const BranchChoice& b : path.choices)
        if (b.face == face) ++c[b.chosen];
      return c;
    });
    for (const auto& c : per_path)
      for (int l = 0; l < k; ++l) {
        counts[l] += c[l];
        total += static_cast<std::size_t>(c[l]);
      }
    paths += batch;
  }

  TestReport r = branch_uniformity_check(counts, cfg.level);
  r.test = "branch_probability[" + P.label(P.face(face)) + "]";
  r.seed = cfg.seed;
  r.config = {{"face", P.label(P.face(face))}, {"k", k},           {"crossings", cfg.crossings},
              {"step", cfg.step},              {"paths", paths},   {"steps_per_path", cfg.steps_per_path},
              {"branch_weights", cfg.branch_weights}};
  return r;
}

TestReport skeleton_avoidance_test(const Polyhedron& P, const Point& start, const SkeletonConfig& cfg) {
  if (P.dimension() != 2) throw VerificationError("skeleton test needs a 2-dimensional complex");
  if (cfg.epsilons.size() < 2) throw VerificationError("skeleton test needs two or more radii");
  std::vector<double> eps = cfg.epsilons;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  BrownianConfig bc;
  bc.step = cfg.step;
  bc.horizon = cfg.horizon;
  struct Occupation {
    bool discarded = false;
    std::vector<double> fraction;
  };
  const auto occ = map_paths<Occupation>(cfg.paths, cfg.threads, [&](std::size_t i) {
    Rng rng = path_rng(cfg.seed, i);
    const PathSample path = simulate_brownian(P, start, bc, rng);
    Occupation o;
    o.discarded = path.discarded;
    o.fraction.assign(eps.size(), 0.0);
    if (o.discarded || path.points.size() < 2) return o;
    for (std::size_t j = 1; j < path.points.size(); ++j) {
      const double d = distance_to_skeleton(P, path.points[j]);
      for (std::size_t e = 0; e < eps.size(); ++e)
        if (d < eps[e]) o.fraction[e] += 1.0;
    }
    for (double& f : o.fraction) f /= static_cast<double>(path.points.size() - 1);
    return o;
  });

  std::size_t discarded = 0, kept = 0;
  std::vector<double> mean(eps.size(), 0.0);
  for (const Occupation& o : occ) {
    if (o.discarded) {
      ++discarded;
      continue;
    }
    ++kept;
    for (std::size_t e = 0; e < eps.size(); ++e) mean[e] += o.fraction[e];
  }
  for (double& m : mean) m /= static_cast<double>(std::max<std::size_t>(kept, 1));
  const double discard_fraction = static_cast<double>(discarded) / static_cast<double>(cfg.paths);

  TestReport r;
  r.test = "skeleton_avoidance";
  r.statistic_name = "slope";
  r.seed = cfg.seed;
  r.sample_size = cfg.paths;
  r.level = 0.0;
  bool ok = discard_fraction < cfg.max_discard;
  std::vector<double> halving;
  const bool positive = std::all_of(mean.begin(), mean.end(), [](double m) { return m > 0.0; });
  if (positive) {
    std::vector<double> lx, ly;
    for (std::size_t e = 0; e < eps.size(); ++e) {
      lx.push_back(std::log(eps[e]));
      ly.push_back(std::log(mean[e]));
    }
    r.statistic = fit_line(lx, ly).slope;
    for (std::size_t e = 1; e < eps.size(); ++e) halving.push_back(mean[e - 1] / mean[e]);
    ok = ok && r.statistic >= cfg.min_slope;
    for (double h : halving) ok = ok && h >= cfg.min_halving;
  } else {
    r.statistic = std::numeric_limits<double>::quiet_NaN();
    ok = false;
  }
  r.passed = ok;
  r.config = {{"epsilons", eps},       {"horizon", cfg.horizon},       {"step", cfg.step},
              {"paths", cfg.paths},    {"min_slope", cfg.min_slope},   {"min_halving", cfg.min_halving},
              {"max_discard", cfg.max_discard}};
  r.details["discarded"] = discarded;
  r.details["discard_fraction"] = discard_fraction;
  r.details["occupation"] = mean;
  r.details["occupation_ratio"] = halving;
  return r;
}

TestReport generator_consistency_test(const Mesh& mesh, const DiscreteField& f, const Point& p,
                                      const GeneratorConfig& cfg, double level) {
  const auto node = mesh.node_at(p);
  if (!node) throw VerificationError("generator test point must be a mesh node");
  const double target = 0.5 * tilde_laplacian(mesh, f, *node);
  GeneratorConfig run = cfg;
  run.mc.confidence = 1.0 - level;
  const Estimate e = estimate_generator_mc(mesh, f, p, run);
  TestReport r;
  r.test = "generator";
  r.statistic_name = "estimate";
  r.statistic = e.mean;
  r.p_value = two_sided_normal_p(z_of(e, target));
  r.ci_low = e.ci_low;
  r.ci_high = e.ci_high;
  r.level = level;
  r.passed = e.covers(target);
  r.sample_size = e.count;
  r.seed = cfg.mc.seed;
  const double step = cfg.step > 0.0 ? cfg.step : cfg.t / 20.0;
  r.config = {{"t", cfg.t}, {"step", step}, {"paths", cfg.mc.paths}, {"mesh_h", mesh.h()}};
  r.details["half_tilde_laplacian"] = target;
  r.details["std_error"] = e.std_error;
  return r;
}

TestReport martingale_test(const Polyhedron& P, const std::function<double(const Point&)>& f, const Point& p0,
                           const Region& U, const MartingaleConfig& cfg) {
  if (cfg.grid.empty()) throw VerificationError("empty martingale grid");
  const double horizon = cfg.horizon > 0.0 ? cfg.horizon : cfg.grid.back();
  std::vector<double> times{0.0};
  for (double t : cfg.grid) {
    if (!(t > times.back())) throw VerificationError("martingale grid must be positive and increasing");
    if (t > horizon * (1.0 + 1e-12)) throw VerificationError("grid outside horizon");
    times.push_back(t);
  }
  BrownianConfig bc;
  bc.step = cfg.step;
  bc.horizon = horizon;
  bc.stop = &U;
  const double f0 = f(p0);
  struct Row {
    bool kept = false;
    std::vector<double> v;
  };
  const auto rows = map_paths<Row>(cfg.mc.paths, cfg.mc.threads, [&](std::size_t i) {
    Rng rng = path_rng(cfg.mc.seed, i);
    const PathSample path = simulate_brownian(P, p0, bc, rng);
    Row row;
    if (path.discarded) return row;
    row.kept = true;
    row.v.push_back(f0);
    for (std::size_t j = 1; j < times.size(); ++j) row.v.push_back(f(point_at_time(path, times[j])));
    return row;
  });
  std::vector<std::vector<double>> values;
  for (const Row& row : rows)
    if (row.kept) values.push_back(row.v);
  TestReport r = martingale_check(values, times, cfg.mode, cfg.level);
  r.seed = cfg.mc.seed;
  r.config = {{"grid", cfg.grid}, {"horizon", horizon}, {"step", cfg.step}, {"paths", cfg.mc.paths},
              {"mode", cfg.mode == MartingaleMode::martingale ? "martingale" : "submartingale"}};
  r.details["discarded"] = cfg.mc.paths - values.size();
  return r;
}

TestReport martingale_test(const DiscreteField& f, const Point& p0, const Region& U, const MartingaleConfig& cfg) {
  return martingale_test(
      f.mesh().polyhedron(), [&f](const Point& p) { return f.evaluate(p); }, p0, U, cfg);
}

TestReport morphism_test(const DiscreteField& phi, const DiscreteField& lambda, const Point& p0, const Region& U,
                         const MorphismConfig& cfg) {
  const Mesh& mesh = phi.mesh();
  const Polyhedron& P = mesh.polyhedron();
  if (lambda.size() != mesh.node_count()) throw VerificationError("dilation not available on this mesh");
  if (cfg.increments < 1 || !(cfg.clock_step > 0.0)) throw VerificationError("invalid clock grid");
  double lambda_min = std::numeric_limits<double>::infinity();
  for (const MeshElement& el : mesh.elements()) {
    double mean = 0.0;
    for (int a = 0; a <= mesh.dimension(); ++a) mean += lambda(el.nodes[a]);
    if (!(mean > 0.0)) throw VerificationError("dilation vanishes on a set of positive measure");
  }
  for (std::size_t i = 0; i < mesh.node_count(); ++i)
    if (lambda(static_cast<int>(i)) > 0.0) lambda_min = std::min(lambda_min, lambda(static_cast<int>(i)));

  const double total_clock = cfg.clock_step * cfg.increments;
  BrownianConfig bc;
  bc.step = cfg.step;
  bc.horizon = (cfg.time_change ? 1.25 * total_clock / lambda_min : total_clock) + 2.0 * cfg.step;
  bc.stop = &U;

  const auto per_path = map_paths<std::vector<double>>(cfg.mc.paths, cfg.mc.threads, [&](std::size_t i) {
    Rng rng = path_rng(cfg.mc.seed, i);
    const PathSample path = simulate_brownian(P, p0, bc, rng);
    std::vector<double> z;
    if (path.discarded) return z;
    double A = 0.0, A_prev = 0.0, Y_prev = phi.evaluate(p0);
    int next = 1;
    for (std::size_t j = 1; j < path.points.size() && next <= cfg.increments; ++j) {
      if (path.exit_time && j + 1 == path.points.size()) break;  // stopped sample
      const double rate = cfg.time_change ? lambda.evaluate(path.points[j - 1]) : 1.0;
      A += rate * (path.times[j] - path.times[j - 1]);
      if (A < next * cfg.clock_step * (1.0 - 1e-9)) continue;
      const double Y = phi.evaluate(path.points[j]);
      z.push_back((Y - Y_prev) / std::sqrt(A - A_prev));
      A_prev = A;
      Y_prev = Y;
      ++next;
    }
    return z;
  });
  std::vector<double> z;
  std::size_t complete = 0;
  for (const auto& v : per_path) {
    z.insert(z.end(), v.begin(), v.end());
    if (static_cast<int>(v.size()) == cfg.increments) ++complete;
  }
  TestReport r = gaussian_increment_check(z, cfg.level);
  r.test = "morphism";
  r.seed = cfg.mc.seed;
  r.config = {{"clock_step", cfg.clock_step}, {"increments", cfg.increments}, {"step", cfg.step},
              {"time_change", cfg.time_change}, {"paths", cfg.mc.paths}};
  r.details["complete_paths"] = complete;
  r.details["lambda_min"] = lambda_min;
  return r;
}

TestReport sampler_consistency_test(const Polyhedron& P, const Point& p0, const SamplerConsistencyConfig& cfg) {
  IsotropicConfig ic;
  ic.eta = cfg.eta;
  ic.horizon = cfg.t;
  BrownianConfig bc;
  bc.step = cfg.step;
  bc.horizon = cfg.t;
  auto distance = [&](const PathSample& path) {
    if (path.discarded) return std::numeric_limits<double>::quiet_NaN();
    const auto d = chart_distance(P, p0, path.points.back());
    if (!d) throw VerificationError("path left the star of the start point");
    return *d;
  };
  const std::uint64_t iso_seed = derive_seed(cfg.seed, 0), bm_seed = derive_seed(cfg.seed, 1);
  const auto iso = map_paths<double>(cfg.paths, cfg.threads, [&](std::size_t i) {
    Rng rng = path_rng(iso_seed, i);
    return distance(simulate_isotropic(P, p0, ic, rng));
  });
  const auto bm = map_paths<double>(cfg.paths, cfg.threads, [&](std::size_t i) {
    Rng rng = path_rng(bm_seed, i);
    return distance(simulate_brownian(P, p0, bc, rng));
  });
  auto finite = [](const std::vector<double>& v) {
    std::vector<double> out;
    for (double x : v)
      if (std::isfinite(x)) out.push_back(x);
    return out;
  };
  const std::vector<double> a = finite(iso), b = finite(bm);
  TestReport r = two_sample_check(a, b, cfg.level);
  r.test = "sampler_consistency";
  r.seed = cfg.seed;
  r.config = {{"t", cfg.t}, {"eta", cfg.eta}, {"step", cfg.step}, {"paths", cfg.paths}};
  r.details["isotropic_mean"] = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
  r.details["brownian_mean"] = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
  return r;
}

// ---------------------------------------------------------------------------
// Calibration

std::vector<Calibration> calibrate(int repetitions, std::uint64_t seed, double level) {
  const std::vector<std::string> names{"walsh_moment", "branch_probability", "generator", "martingale",
                                       "submartingale", "morphism", "sampler_consistency"};
  std::vector<Calibration> out;
  for (std::size_t test = 0; test < names.size(); ++test) {
    Calibration c{names[test], repetitions, 0};
    const std::uint64_t master = derive_seed(seed, 1000 + test);
    const auto rejected = map_paths<int>(static_cast<std::size_t>(repetitions), 1, [&](std::size_t rep) {
      Rng rng = path_rng(master, rep);
      std::normal_distribution<double> gauss(0.0, 1.0);
      TestReport r;
      switch (test) {
        case 0: {
          const WalshSample s = sample_walsh_star(3, 0.01, 10000, rng);
          r = walsh_moment_check(s.distance, s.branch, 3, 0.01, level);
          break;
        }
        case 1: {
          std::vector<long long> counts(3, 0);
          std::uniform_int_distribution<int> pick(0, 2);
          for (int i = 0; i < 30000; ++i) ++counts[pick(rng)];
          r = branch_uniformity_check(counts, level);
          break;
        }
        case 2: {
          // Stopped-free generator values on a book spine with page weights (1, 1, 4).
          const double t = 0.005, w[3] = {1.0, 1.0, 4.0};
          std::uniform_int_distribution<int> pick(0, 2);
          std::vector<double> v(10000);
          for (double& x : v) {
            const double d = std::sqrt(t) * gauss(rng);
            x = w[pick(rng)] * d * d / t;
          }
          r = mean_coverage_check(v, 2.0, level);
          break;
        }
        case 3:
        case 4: {
          const double times[] = {0.0, 0.005, 0.01, 0.02};
          std::vector<std::vector<double>> rows(10000, std::vector<double>(4));
          for (auto& row : rows) {
            double w = 0.0;
            for (int j = 0; j < 4; ++j) {
              if (j > 0) w += std::sqrt(times[j] - times[j - 1]) * gauss(rng);
              row[j] = test == 3 ? 0.5 + w : (0.5 + w) * (0.5 + w);
            }
          }
          r = martingale_check(rows, times, test == 3 ? MartingaleMode::martingale : MartingaleMode::submartingale,
                               level);
          break;
        }
        case 5: {
          std::vector<double> z(40000);
          for (double& x : z) x = gauss(rng);
          r = gaussian_increment_check(z, level);
          break;
        }
        default: {
          std::vector<double> a(10000), b(10000);
          for (double& x : a) x = std::abs(0.1 * gauss(rng));
          for (double& x : b) x = std::abs(0.1 * gauss(rng));
          r = two_sample_check(a, b, level);
          break;
        }
      }
      return r.passed ? 0 : 1;
    });
    for (int x : rejected) c.rejections += x;
    out.push_back(c);
  }
  return out;
}

}  // namespace polybm
