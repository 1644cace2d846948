#include <algorithm>
#include <cmath>

#include "polybm/errors.hpp"
#include "polybm/geometry.hpp"
#include "polybm/io.hpp"
#include "polybm/verify.hpp"

namespace polybm {

namespace {

Polyhedron bundled(const SuiteConfig& cfg, const std::string& name) {
  return load_polyhedron(cfg.data_dir / "complexes" / (name + ".json"));
}

std::vector<double> times_or(const SuiteConfig& cfg, std::vector<double> fallback) {
  return cfg.grid.empty() ? fallback : cfg.grid;
}

MonteCarlo mc_of(const SuiteConfig& cfg, std::size_t paths, std::uint64_t salt) {
  return MonteCarlo{paths, derive_seed(cfg.seed, salt), cfg.threads, 1.0 - cfg.level};
}

// Book geometry shared by several suites: page coordinates around the spine.
struct Book {
  Polyhedron P;
  FaceId spine;
  PageCoordinates pages;
  Mesh mesh;

  Book(Polyhedron poly, double h)
      : P(std::move(poly)), spine(most_branched_face(P)), pages(P, spine), mesh(build_mesh(P, h)) {}

  Point at(int page, double y, double xn) const {
    auto p = pages.point(page, y, xn);
    if (!p) throw VerificationError("point outside the book");
    return *p;
  }
  double y(const Point& p) const { return pages(p).tangential; }
  double xn(const Point& p) const { return pages(p).normal; }
};

void run_walsh(const SuiteConfig& cfg, std::vector<TestReport>& out) {
  std::vector<std::pair<Polyhedron, double>> cases;
  if (cfg.complex) {
    cases.emplace_back(load_polyhedron(*cfg.complex), cfg.grid.empty() ? 0.01 : cfg.grid.front());
  } else {
    cases.emplace_back(bundled(cfg, "star_2"), 0.04);
    cases.emplace_back(bundled(cfg, "star_3"), 0.01);
    cases.emplace_back(bundled(cfg, "star_5"), 0.01);
  }
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const Polyhedron& star = cases[i].first;
    if (star.dimension() != 1) throw VerificationError("Walsh suite needs a star graph");
    WalshConfig w;
    w.k = 0;
    for (VertexIndex v = 0; v < static_cast<VertexIndex>(star.vertex_count()); ++v)
      w.k = std::max(w.k, static_cast<int>(star.vertex_star(v).size()));
    w.t = cases[i].second;
    w.paths = cfg.paths;
    w.step = cfg.step;
    w.seed = derive_seed(cfg.seed, 100 + i);
    w.threads = cfg.threads;
    w.level = cfg.level;
    out.push_back(walsh_moment_test(w, &star));
  }
}

void run_branch(const SuiteConfig& cfg, std::vector<TestReport>& out) {
  std::vector<std::pair<std::string, Polyhedron>> cases;
  if (cfg.complex) {
    cases.emplace_back(cfg.complex->stem().string(), load_polyhedron(*cfg.complex));
  } else {
    for (const char* name : {"star_3", "star_5", "book_3"}) cases.emplace_back(name, bundled(cfg, name));
  }
  BranchConfig b;
  b.threads = cfg.threads;
  b.level = cfg.level;
  if (cfg.step > 0.0) b.step = cfg.step;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const Polyhedron& P = cases[i].second;
    b.seed = derive_seed(cfg.seed, 200 + i);
    TestReport r = branch_probability_test(P, most_branched_face(P), b);
    r.test = "branch_probability[" + cases[i].first + "]";
    out.push_back(r);
  }
  // Power check: a biased sampler must be rejected decisively.
  const Polyhedron& P = cases.back().second;
  const FaceId f = most_branched_face(P);
  const int k = P.branch_count(f);
  if (k >= 3) {
    BranchConfig biased = b;
    biased.seed = derive_seed(cfg.seed, 299);
    biased.branch_weights.assign(k, 0.5 / (k - 1));
    biased.branch_weights[0] = 0.5;
    biased.level = 1e-6;
    TestReport r = branch_probability_test(P, f, biased);
    r.test = "branch_probability_power[" + cases.back().first + "]";
    r.expected_pass = false;
    out.push_back(r);
  }
}

void run_skeleton(const SuiteConfig& cfg, std::vector<TestReport>& out) {
  const Polyhedron P = cfg.complex ? load_polyhedron(*cfg.complex) : bundled(cfg, "book_3");
  const FaceId spine = most_branched_face(P);
  const PageCoordinates pages(P, spine);
  auto start = P.branch_count(spine) >= 2 ? pages.point(0, 0.25, 0.0) : std::nullopt;
  if (!start) throw VerificationError("skeleton suite needs a face with two or more branches");
  SkeletonConfig s;
  s.paths = std::min<std::size_t>(cfg.paths, 10000);
  s.seed = derive_seed(cfg.seed, 300);
  s.threads = cfg.threads;
  if (cfg.step > 0.0) s.step = cfg.step;
  TestReport r = skeleton_avoidance_test(P, *start, s);
  r.test = "skeleton_avoidance[" + (cfg.complex ? cfg.complex->stem().string() : std::string("book_3")) + "]";
  out.push_back(r);
}

void run_generator(const SuiteConfig& cfg, std::vector<TestReport>& out) {
  const std::vector<double> times = times_or(cfg, {0.005, 0.0025});
  auto configure = [&](double t, std::uint64_t salt) {
    GeneratorConfig g;
    g.t = t;
    g.step = cfg.step;
    g.mc = mc_of(cfg, cfg.paths, salt);
    return g;
  };

  const Polyhedron I = bundled(cfg, "interval");
  const Mesh mi = build_mesh(I, cfg.mesh_h);
  const DiscreteField quad = DiscreteField::from_function(mi, [&](const Point& p) {
    const double x = I.chart(p.simplex).to_chart(p.bary)[0] - I.chart(0).to_chart({0.5, 0.5, 0.0})[0];
    return x * x;
  });
  const Point mid{0, {0.5, 0.5, 0.0}};

  const Book book(bundled(cfg, "book_3"), cfg.mesh_h);
  const double weight[] = {1.0, 1.0, 4.0, 1.0, 1.0};
  const DiscreteField xn2 = DiscreteField::from_function(book.mesh, [&](const Point& p) {
    const double x = book.xn(p);
    return x * x;
  });
  const DiscreteField mixed = DiscreteField::from_function(book.mesh, [&](const Point& p) {
    const auto c = book.pages(p);
    return weight[c.page % 5] * c.normal * c.normal;
  });
  const DiscreteField xn = DiscreteField::from_function(book.mesh, [&](const Point& p) { return book.xn(p); });
  const Point spine = book.at(0, 0.5, 0.0);

  std::uint64_t salt = 400;
  for (double t : times) {
    struct Case {
      const char* name;
      const Mesh* mesh;
      const DiscreteField* f;
      Point p;
    };
    for (const Case& c : {Case{"interval_quadratic", &mi, &quad, mid}, Case{"book_3_spine_xn2", &book.mesh, &xn2, spine},
                          Case{"book_3_spine_mixed_xn2", &book.mesh, &mixed, spine}}) {
      TestReport r = generator_consistency_test(*c.mesh, *c.f, c.p, configure(t, salt++), cfg.level);
      r.test = std::string("generator[") + c.name + ",t=" + format_double(t) + "]";
      out.push_back(r);
    }
  }

  // A function violating the zero normal trace condition must be refused.
  TestReport r;
  r.test = "generator_domain[book_3_spine_xn]";
  r.statistic_name = "normal_trace_sum";
  r.statistic = normal_trace_sum(book.mesh, xn, *book.mesh.node_at(spine));
  r.level = cfg.level;
  r.seed = cfg.seed;
  r.expected_pass = false;
  r.config = {{"t", times.front()}, {"mesh_h", book.mesh.h()}};
  try {
    (void)estimate_generator_mc(book.mesh, xn, spine, configure(times.front(), salt++));
    r.passed = true;
  } catch (const OperatorError& e) {
    r.passed = false;
    r.details["error"] = e.what();
  }
  out.push_back(r);
}

void run_martingale(const SuiteConfig& cfg, std::vector<TestReport>& out) {
  const Book book(bundled(cfg, "book_3"), cfg.mesh_h);
  const Mesh& mesh = book.mesh;
  const DiscreteField harmonic = solve_dirichlet(mesh, boundary_data(mesh, [&](const Point& p) { return book.y(p); }));
  const Region whole = Region::whole(book.P);
  MartingaleConfig m;
  m.grid = times_or(cfg, {0.005, 0.01, 0.02});
  m.level = cfg.level;
  if (cfg.step > 0.0) m.step = cfg.step;

  m.mc = mc_of(cfg, cfg.paths, 500);
  TestReport r = martingale_test(harmonic, book.at(0, 0.5, 0.0), whole, m);
  r.test = "martingale[book_3_harmonic]";
  out.push_back(r);

  // Bump perturbation off the spine; its drift is half the tilde Laplacian.
  const Point centre = book.at(0, 0.4, 0.3);
  const auto [cy, cx] = std::pair{0.4, 0.3};
  std::vector<double> bumped(harmonic.values().begin(), harmonic.values().end());
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    const auto c = book.pages(mesh.node(static_cast<int>(i)).location);
    if (c.page != 0) continue;
    const double r2 = ((c.tangential - cy) * (c.tangential - cy) + (c.normal - cx) * (c.normal - cx)) / 0.04;
    if (r2 < 1.0) bumped[i] += 0.2 * (1.0 - r2) * (1.0 - r2);
  }
  const DiscreteField perturbed(mesh, bumped);
  const int centre_node = *mesh.node_at(centre);
  const double drift = 0.5 * tilde_laplacian(mesh, perturbed, centre_node);
  m.mc = mc_of(cfg, cfg.paths, 501);
  TestReport rb = martingale_test(perturbed, centre, whole, m);
  rb.test = "martingale_power[book_3_bump]";
  rb.expected_pass = false;
  const double t1 = m.grid.front();
  const double se = rb.details["grid"][1]["std_error"].get<double>();
  const std::size_t pairs = (m.grid.size() + 1) * m.grid.size() / 2;
  const double q = normal_upper_quantile(cfg.level / (2.0 * static_cast<double>(pairs)));
  rb.details["predicted_drift"] = drift;
  rb.details["predicted_power"] = se > 0.0 ? normal_cdf(std::abs(drift) * t1 / se - q) : 1.0;
  out.push_back(rb);

  // Convex tester y^2 on the harmonic map y, watched while y stays in U2.
  ConvexTester tester;
  tester.U1 = {{0.2}, {0.8}};
  tester.U2 = {{0.1}, {0.9}};
  tester.U3 = {{0.0}, {1.0}};
  tester.f = [](std::span<const double> y) { return y[0] * y[0]; };
  Rng rng(derive_seed(cfg.seed, 502));
  if (!tester.certify(rng)) throw VerificationError("convex tester failed its certificate");
  Region inside = whole;
  inside.within = [&](const Point& p) {
    const double v = harmonic.evaluate(p);
    return tester.U2.contains(std::span<const double>(&v, 1));
  };
  m.mode = MartingaleMode::submartingale;
  m.mc = mc_of(cfg, cfg.paths, 503);
  TestReport rs = martingale_test(
      book.P,
      [&](const Point& p) {
        const double v = harmonic.evaluate(p);
        return tester.f(std::span<const double>(&v, 1));
      },
      book.at(0, 0.5, 0.0), inside, m);
  rs.test = "submartingale[book_3_y2_of_y]";
  rs.details["slope_covers_one"] = *rs.ci_low <= 1.0 && 1.0 <= *rs.ci_high;
  out.push_back(rs);
}

void run_morphism(const SuiteConfig& cfg, std::vector<TestReport>& out) {
  const Book book(bundled(cfg, "book_3"), cfg.mesh_h);
  const Mesh& mesh = book.mesh;
  const Region whole = Region::whole(book.P);
  const Point p0 = book.at(0, 0.5, 0.0);
  const DiscreteField y = DiscreteField::from_function(mesh, [&](const Point& p) { return book.y(p); });
  const DiscreteField xn = DiscreteField::from_function(mesh, [&](const Point& p) { return book.xn(p); });
  MorphismConfig m;
  m.level = cfg.level;
  if (cfg.step > 0.0) m.step = cfg.step;

  struct Case {
    std::string name;
    DiscreteField phi;
    bool time_change;
    bool expect;
    double level;
  };
  const std::vector<Case> cases{
      {"y", y, true, true, cfg.level},
      {"2y", y.scaled(2.0), true, true, cfg.level},
      {"2y_raw", y.scaled(2.0), false, false, cfg.level},
      {"xn", xn, true, false, 1e-4},
  };
  std::uint64_t salt = 600;
  for (const Case& c : cases) {
    const DilationResult dil = compute_dilation(mesh, c.phi.nodal());
    m.time_change = c.time_change;
    m.level = c.level;
    m.mc = mc_of(cfg, std::min<std::size_t>(cfg.paths, 10000), salt++);
    TestReport r = morphism_test(c.phi, dil.lambda, p0, whole, m);
    r.test = "morphism[" + c.name + "]";
    r.expected_pass = c.expect;
    r.details["morphism_candidate"] = dil.morphism_candidate;
    r.details["dilation_residual"] = dil.max_residual;
    out.push_back(r);
  }
}

void run_sampler(const SuiteConfig& cfg, std::vector<TestReport>& out) {
  const Polyhedron P = cfg.complex ? load_polyhedron(*cfg.complex) : bundled(cfg, "star_3");
  if (P.dimension() != 1) throw VerificationError("sampler suite needs a star graph");
  VertexIndex c = 0;
  for (VertexIndex v = 0; v < static_cast<VertexIndex>(P.vertex_count()); ++v)
    if (P.vertex_star(v).size() > P.vertex_star(c).size()) c = v;
  SamplerConsistencyConfig s;
  s.eta = cfg.eta;
  s.paths = std::min<std::size_t>(cfg.paths, 10000);
  s.seed = derive_seed(cfg.seed, 700);
  s.threads = cfg.threads;
  s.level = cfg.level;
  if (cfg.step > 0.0) s.step = cfg.step;
  TestReport r = sampler_consistency_test(P, vertex_point(P, c), s);
  r.test = "sampler_consistency[" + (cfg.complex ? cfg.complex->stem().string() : std::string("star_3")) + "]";
  out.push_back(r);
}

void run_calibration(const SuiteConfig& cfg, std::vector<TestReport>& out) {
  constexpr int reps = 200, allowed = 7;
  for (const Calibration& c : calibrate(reps, derive_seed(cfg.seed, 800), cfg.level)) {
    TestReport r;
    r.test = "calibration[" + c.test + "]";
    r.statistic_name = "rejections";
    r.statistic = c.rejections;
    r.level = cfg.level;
    r.passed = c.rejections <= allowed;
    r.sample_size = static_cast<std::size_t>(c.repetitions);
    r.seed = cfg.seed;
    r.config = {{"repetitions", reps}, {"allowed", allowed}};
    out.push_back(r);
  }
}

}  // namespace

std::vector<TestReport> run_suite(const std::string& name, const SuiteConfig& cfg) {
  using Runner = void (*)(const SuiteConfig&, std::vector<TestReport>&);
  const std::vector<std::pair<std::string, Runner>> suites{
      {"walsh", run_walsh},           {"branch", run_branch},     {"skeleton", run_skeleton},
      {"generator", run_generator},   {"martingale", run_martingale}, {"morphism", run_morphism},
      {"sampler", run_sampler},       {"calibration", run_calibration}};
  std::vector<TestReport> out;
  bool found = false;
  for (const auto& [suite, run] : suites) {
    if (name != "all" && name != suite) continue;
    found = true;
    // Complex overrides only make sense for the single-complex suites.
    SuiteConfig local = cfg;
    if (name == "all") local.complex.reset();
    run(local, out);
  }
  if (!found) throw VerificationError("unknown suite '" + name + "'");
  return out;
}

}  // namespace polybm
