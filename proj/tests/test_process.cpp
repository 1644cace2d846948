#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numbers>
#include <numeric>

#include "polybm/errors.hpp"
#include "polybm/geometry.hpp"
#include "polybm/process.hpp"
#include "polybm/random.hpp"
#include "polybm/stats.hpp"
#include "support.hpp"

using namespace polybm;
using polybm::testing::bundled;

namespace {

double position_on_interval(const Polyhedron& P, const Point& p) { return P.chart(p.simplex).to_chart(p.bary)[0]; }

template <class F>
std::vector<PathSample> run(std::size_t n, std::uint64_t seed, F&& simulate, unsigned threads = 1) {
  return map_paths<PathSample>(n, threads, [&](std::size_t i) {
    Rng rng = path_rng(seed, i);
    return simulate(rng);
  });
}

Estimate mean_of(const std::vector<double>& v) { return estimate(v, 0.99); }

}  // namespace

TEST(Isotropic, IntervalVarianceApproachesT) {
  const Polyhedron P = bundled("interval");
  IsotropicConfig cfg;
  cfg.eta = 0.01;
  cfg.horizon = 0.01;
  const Point mid{0, {0.5, 0.5, 0}};
  const auto paths = run(100000, 21, [&](Rng& rng) { return simulate_isotropic(P, mid, cfg, rng); });
  std::vector<double> sq;
  for (const auto& p : paths) {
    const double x = position_on_interval(P, p.points.back()) - 0.5;
    sq.push_back(x * x);
  }
  EXPECT_NEAR(mean_of(sq).mean, 0.01, 0.05 * 0.01);
}

TEST(Isotropic, DoublingRateDoublesRenewals) {
  const Polyhedron P = bundled("interval");
  IsotropicConfig cfg;
  cfg.eta = 0.1;
  cfg.horizon = 0.05;
  const Point mid{0, {0.5, 0.5, 0}};
  auto renewals = [&](double rate, std::uint64_t seed) {
    cfg.rate = rate;
    std::vector<double> r;
    for (const auto& p : run(20000, seed, [&](Rng& rng) { return simulate_isotropic(P, mid, cfg, rng); }))
      r.push_back(static_cast<double>(p.renewals));
    return mean_of(r);
  };
  const Estimate one = renewals(1.0, 22), two = renewals(2.0, 23);
  const double diff = two.mean - 2.0 * one.mean;
  const double se = std::hypot(two.std_error, 2.0 * one.std_error);
  EXPECT_LE(std::abs(diff), 3.0 * se);
}

TEST(Isotropic, StarCentreOccupationIsUniform) {
  const Polyhedron P = bundled("star_3");
  IsotropicConfig cfg;
  cfg.eta = 0.01;
  cfg.horizon = 0.01;
  const Point c = vertex_point(P, *P.find_vertex("c"));
  std::vector<long long> counts(3, 0);
  for (const auto& p : run(30000, 24, [&](Rng& rng) { return simulate_isotropic(P, c, cfg, rng); }))
    ++counts[p.points.back().simplex];
  const std::vector<double> probs(3, 1.0 / 3.0);
  EXPECT_GT(chi_square_gof(counts, probs).p_value, 0.01);
}

TEST(Isotropic, RestartMatchesSingleRun) {
  const Polyhedron P = bundled("interval");
  IsotropicConfig cfg;
  cfg.eta = 0.05;
  const Point start{0, {0.5, 0.5, 0}};
  std::vector<double> single, restarted;
  const std::size_t n = 20000;
  for (std::size_t i = 0; i < n; ++i) {
    Rng a = path_rng(25, i), b = path_rng(26, i);
    cfg.horizon = 0.02;
    single.push_back(position_on_interval(P, simulate_isotropic(P, start, cfg, a).points.back()));
    cfg.horizon = 0.01;
    const PathSample first = simulate_isotropic(P, start, cfg, b);
    const PathSample second = simulate_isotropic_from(P, *first.final_state, cfg, b);
    restarted.push_back(position_on_interval(P, second.points.back()));
  }
  EXPECT_GT(ks_two_sample(single, restarted).p_value, 0.01);
}

TEST(Brownian, FlatSquareCovariance) {
  const Polyhedron P = bundled("square");
  BrownianConfig cfg;
  cfg.step = 1e-3;
  cfg.horizon = 0.02;
  // Centre of the square: on the diagonal a-c, midpoint.
  const Point centre{0, {0.5, 0.0, 0.5}};
  ASSERT_EQ(P.vertex_name(P.maximal(0).vertices[0]), "a");
  ASSERT_EQ(P.vertex_name(P.maximal(0).vertices[2]), "c");
  std::map<std::string, Vec2> where{{"a", {0, 0}}, {"b", {1, 0}}, {"c", {1, 1}}, {"d", {0, 1}}};
  std::vector<double> xx, yy, xy;
  for (const auto& p : run(100000, 27, [&](Rng& rng) { return simulate_brownian(P, centre, cfg, rng); })) {
    const Point& q = p.points.back();
    double x = -0.5, y = -0.5;
    for (int i = 0; i < 3; ++i) {
      const Vec2 v = where.at(P.vertex_name(P.maximal(q.simplex).vertices[i]));
      x += q.bary[i] * v[0];
      y += q.bary[i] * v[1];
    }
    xx.push_back(x * x);
    yy.push_back(y * y);
    xy.push_back(x * y);
  }
  EXPECT_NEAR(mean_of(xx).mean, 0.02, 0.03 * 0.02);
  EXPECT_NEAR(mean_of(yy).mean, 0.02, 0.03 * 0.02);
  EXPECT_NEAR(mean_of(xy).mean, 0.0, 0.03 * 0.02);
}

TEST(Brownian, MeanExitTimeOfCentredInterval) {
  // Three segments of lengths 0.2, 0.6, 0.2; U is the middle one, entered at its midpoint.
  const auto doc = nlohmann::json::parse(R"({"dimension": 1, "vertices": ["a", "b", "c", "d"],
      "simplices": [["a", "b"], ["b", "c"], ["c", "d"]],
      "edge_lengths": {"a-b": 0.2, "b-c": 0.6, "c-d": 0.2}})");
  const Polyhedron P = build_complex(parse_complex_description(doc));
  const SimplexId middle = *P.find_simplex({*P.find_vertex("b"), *P.find_vertex("c")});
  const SimplexId only[] = {middle};
  const Region U = Region::of(P, only);
  BrownianConfig cfg;
  cfg.step = 1e-5;
  cfg.horizon = 2.0;
  cfg.stop = &U;
  const Point start{middle, {0.5, 0.5, 0}};
  std::vector<double> tau;
  for (const auto& p : run(5000, 28, [&](Rng& rng) { return simulate_brownian(P, start, cfg, rng); })) {
    ASSERT_TRUE(p.exit_time);
    const StoppedPath s = stop_at_exit(P, p, U);
    EXPECT_TRUE(s.exited);
    EXPECT_NEAR(s.tau, *p.exit_time, 1e-12);
    tau.push_back(s.tau);
  }
  const Estimate e = mean_of(tau);
  EXPECT_LE(std::abs(e.mean - 0.09), 3.0 * e.std_error);
}

TEST(Brownian, BookSpineTangentialVariance) {
  const Polyhedron P = bundled("book_3");
  const PageCoordinates pc(P, most_branched_face(P));
  BrownianConfig cfg;
  cfg.step = 1e-4;
  cfg.horizon = 0.01;
  const Point start = *pc.point(0, 0.5, 0.0);
  std::vector<std::vector<double>> by_page(3);
  std::vector<double> all;
  for (const auto& p : run(30000, 29, [&](Rng& rng) { return simulate_brownian(P, start, cfg, rng); })) {
    ASSERT_FALSE(p.discarded);
    const auto c = pc(p.points.back());
    const double y = c.tangential - 0.5;
    by_page[c.page].push_back(y);
    all.push_back(y * y);
  }
  EXPECT_NEAR(mean_of(all).mean, 0.01, 0.05 * 0.01);

  // Bartlett's test for equal variances across the page labels.
  double N = 0.0, pooled = 0.0, sum_log = 0.0, sum_inv = 0.0;
  for (const auto& g : by_page) {
    const double n = static_cast<double>(g.size());
    const double m = std::accumulate(g.begin(), g.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : g) ss += (v - m) * (v - m);
    const double s2 = ss / (n - 1.0);
    N += n;
    pooled += ss;
    sum_log += (n - 1.0) * std::log(s2);
    sum_inv += 1.0 / (n - 1.0);
  }
  const double k = 3.0;
  pooled /= N - k;
  const double T = ((N - k) * std::log(pooled) - sum_log) / (1.0 + (sum_inv - 1.0 / (N - k)) / (3.0 * (k - 1.0)));
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(k - 1.0), T));
  EXPECT_GT(p, 0.01);
}

TEST(Brownian, DiscardsAreRare) {
  for (const char* name : {"book_2", "book_3", "book_5", "square"}) {
    const Polyhedron P = bundled(name);
    const FaceId f = most_branched_face(P);
    const double w[] = {0.3, 0.7};
    const Point start = face_point(P, f, w);
    BrownianConfig cfg;
    cfg.step = 1e-4;
    cfg.horizon = 0.05;
    std::size_t discarded = 0;
    for (const auto& p : run(2000, 30, [&](Rng& rng) { return simulate_brownian(P, start, cfg, rng); }))
      discarded += p.discarded;
    EXPECT_LT(static_cast<double>(discarded) / 2000.0, 1e-3) << name;
  }
}

TEST(Brownian, IdenticalAcrossThreadCounts) {
  const Polyhedron P = bundled("book_3");
  const PageCoordinates pc(P, most_branched_face(P));
  BrownianConfig cfg;
  cfg.step = 1e-3;
  cfg.horizon = 0.05;
  const Point start = *pc.point(1, 0.4, 0.1);
  auto sim = [&](Rng& rng) { return simulate_brownian(P, start, cfg, rng); };
  const auto a = run(300, 31, sim, 1), b = run(300, 31, sim, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].times, b[i].times);
    ASSERT_EQ(a[i].points.size(), b[i].points.size());
    for (std::size_t j = 0; j < a[i].points.size(); ++j) {
      EXPECT_EQ(a[i].points[j].simplex, b[i].points[j].simplex);
      EXPECT_EQ(a[i].points[j].bary, b[i].points[j].bary);
    }
  }
}

TEST(Brownian, InvalidInputsRejected) {
  const Polyhedron P = bundled("book_3");
  Rng rng(1);
  BrownianConfig cfg;
  cfg.step = 0.0;
  EXPECT_THROW((void)simulate_brownian(P, Point{0, {0.2, 0.3, 0.5}}, cfg, rng), SimulationError);
  cfg.step = 1e-3;
  EXPECT_THROW((void)simulate_brownian(P, vertex_point(P, 0), cfg, rng), SimulationError);
}

TEST(Walsh, RestrictedMomentsK3) {
  Rng rng(32);
  const WalshSample s = sample_walsh_star(3, 0.01, 100000, rng);
  const double first = std::sqrt(2.0 * 0.01 / std::numbers::pi) / 3.0;
  EXPECT_NEAR(first, 0.026596, 5e-7);
  for (int l = 0; l < 3; ++l) {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < s.distance.size(); ++i) {
      const bool on = s.branch[i] == l;
      a.push_back(on ? s.distance[i] : 0.0);
      b.push_back(on ? s.distance[i] * s.distance[i] : 0.0);
    }
    const Estimate ea = mean_of(a), eb = mean_of(b);
    EXPECT_LE(std::abs(ea.mean - first), 3.0 * ea.std_error);
    EXPECT_LE(std::abs(eb.mean - 0.01 / 3.0), 3.0 * eb.std_error);
  }
}

TEST(Walsh, RestrictedMomentsK2) {
  Rng rng(33);
  const WalshSample s = sample_walsh_star(2, 0.04, 100000, rng);
  const double first = std::sqrt(2.0 * 0.04 / std::numbers::pi) / 2.0;
  EXPECT_NEAR(first, 0.0797885, 5e-7);
  for (int l = 0; l < 2; ++l) {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < s.distance.size(); ++i) {
      const bool on = s.branch[i] == l;
      a.push_back(on ? s.distance[i] : 0.0);
      b.push_back(on ? s.distance[i] * s.distance[i] : 0.0);
    }
    EXPECT_LE(std::abs(mean_of(a).mean - first), 3.0 * mean_of(a).std_error);
    EXPECT_LE(std::abs(mean_of(b).mean - 0.02), 3.0 * mean_of(b).std_error);
  }
}

TEST(Walsh, FlagsDrawsBeyondEdgeAndRejectsK1) {
  Rng rng(34);
  const WalshSample s = sample_walsh_star(3, 1.0, 1000, rng, 0.5);
  EXPECT_GT(s.beyond_edge, 0u);
  EXPECT_THROW((void)sample_walsh_star(1, 0.01, 10, rng), SimulationError);
}

TEST(StopAtExit, InsidePathIsCensored) {
  const Polyhedron P = bundled("interval");
  PathSample path;
  for (int i = 0; i <= 10; ++i) {
    path.times.push_back(0.01 * i);
    path.points.push_back(Point{0, {0.5 + 0.01 * i, 0.5 - 0.01 * i, 0}});
  }
  const StoppedPath s = stop_at_exit(P, path, Region::whole(P));
  EXPECT_FALSE(s.exited);
  EXPECT_DOUBLE_EQ(s.tau, 0.1);
  EXPECT_EQ(s.path.points.size(), path.points.size());
}

TEST(StopAtExit, ExitBracketedBySamples) {
  const auto doc = nlohmann::json::parse(R"({"dimension": 1, "vertices": ["a", "b", "c"],
      "simplices": [["a", "b"], ["b", "c"]], "edge_lengths": {"a-b": 1.0, "b-c": 1.0}})");
  const Polyhedron P = build_complex(parse_complex_description(doc));
  const SimplexId first[] = {0};
  const Region U = Region::of(P, first);
  PathSample path;
  // Walk from a towards b; the 5th sample (index 4) sits in the second edge.
  const double x[] = {0.2, 0.4, 0.6, 0.8, 1.1, 1.3};
  for (int i = 0; i < 6; ++i) {
    path.times.push_back(0.1 * i);
    path.points.push_back(x[i] < 1.0 ? Point{0, {1.0 - x[i], x[i], 0}} : Point{1, {2.0 - x[i], x[i] - 1.0, 0}});
  }
  const StoppedPath s = stop_at_exit(P, path, U);
  EXPECT_TRUE(s.exited);
  EXPECT_GT(s.tau, 0.3);
  EXPECT_LT(s.tau, 0.4);
  EXPECT_NEAR(s.tau, 0.3 + 0.1 * (0.2 / 0.3), 1e-12);
  EXPECT_EQ(s.path.points.size(), 4u);
}
