#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polybm/complex.hpp"
#include "polybm/errors.hpp"
#include "polybm/geometry.hpp"
#include "polybm/harmonic.hpp"
#include "polybm/io.hpp"
#include "polybm/mesh.hpp"
#include "polybm/process.hpp"
#include "polybm/random.hpp"
#include "polybm/verify.hpp"

namespace fs = std::filesystem;
using namespace polybm;

namespace {

enum Exit { ok = 0, parse_error = 1, not_admissible = 2, simulation_failed = 3, solve_failed = 4, verification_failed = 5 };

struct RunConfig {
  std::string command;
  std::optional<fs::path> complex;
  std::optional<fs::path> bc;
  std::uint64_t seed = 7;
  std::optional<std::size_t> n;
  double eta = 0.01;
  double step = 0.0;
  std::vector<double> grid;
  double mesh_h = 0.01;
  std::optional<fs::path> out;
  double level = 0.01;
  unsigned threads = 1;
  bool plots = false;
  std::string suite = "all";
  std::string sampler = "brownian";
  std::string start;
  double horizon = 0.01;

  nlohmann::json to_json() const {
    nlohmann::json j{{"command", command}, {"seed", seed},   {"eta", eta},       {"step", step},
                     {"grid", grid},       {"mesh_h", mesh_h}, {"level", level}};
    if (complex) j["complex"] = complex->filename().string();
    if (bc) j["bc"] = bc->filename().string();
    if (n) j["n"] = *n;
    if (command == "verify") j["suite"] = suite;
    if (command == "simulate") {
      j["sampler"] = sampler;
      j["start"] = start;
      j["horizon"] = horizon;
    }
    return j;
  }
};

// Thrown for inputs that parse but describe a non-admissible complex.
struct NotAdmissible : Error {
  using Error::Error;
};

fs::path data_dir() {
  if (const char* env = std::getenv("POLYBM_DATA_DIR")) return env;
  return POLYBM_DATA_DIR;
}

fs::path resolve_complex(const fs::path& p) {
  if (fs::exists(p)) return p;
  const fs::path bundled = data_dir() / "complexes" / p;
  if (fs::exists(bundled)) return bundled;
  const fs::path with_ext = data_dir() / "complexes" / (p.string() + ".json");
  if (fs::exists(with_ext)) return with_ext;
  return p;
}

fs::path resolve_bc(const fs::path& p) {
  if (fs::exists(p)) return p;
  const fs::path bundled = data_dir() / "bc" / p;
  return fs::exists(bundled) ? bundled : p;
}

Polyhedron admissible_complex(const RunConfig& cfg) {
  if (!cfg.complex) throw ComplexError("--complex is required for " + cfg.command);
  Polyhedron P = load_polyhedron(resolve_complex(*cfg.complex));
  const AdmissibilityReport report = validate_admissible(P);
  if (!report.admissible()) throw NotAdmissible(report.to_text());
  return P;
}

// Writes to <out>/<name> when --out is set, otherwise to stdout.
void emit(const RunConfig& cfg, const std::string& name, const std::string& text) {
  if (!cfg.out) {
    std::cout << text;
    return;
  }
  fs::create_directories(*cfg.out);
  std::ofstream file(*cfg.out / name, std::ios::binary);
  if (!file) throw Error("cannot write " + (*cfg.out / name).string());
  file << text;
}

// ---------------------------------------------------------------------------
// SVG

std::string svg_points(const std::vector<double>& xs, const std::vector<double>& ys, const std::vector<double>& err,
                       const std::optional<double>& reference, const std::string& title, const std::string& xlabel) {
  const double W = 480, H = 320, L = 60, R = 20, T = 30, B = 40;
  double lo = reference.value_or(ys.front()), hi = lo;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    lo = std::min(lo, ys[i] - err[i]);
    hi = std::max(hi, ys[i] + err[i]);
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.1 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double xmin = *std::min_element(xs.begin(), xs.end()), xmax = *std::max_element(xs.begin(), xs.end());
  const double xspan = xmax > xmin ? xmax - xmin : 1.0;
  auto px = [&](double x) { return L + (x - xmin) / xspan * (W - L - R); };
  auto py = [&](double y) { return T + (hi - y) / (hi - lo) * (H - T - B); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << L << "\" y=\"20\" font-size=\"13\">" << title << "</text>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << (W / 2) << "\" y=\"" << H - 8 << "\" font-size=\"11\">" << xlabel << "</text>\n";
  s << "<text x=\"4\" y=\"" << T + 10 << "\" font-size=\"10\">" << format_double(hi) << "</text>\n";
  s << "<text x=\"4\" y=\"" << H - B << "\" font-size=\"10\">" << format_double(lo) << "</text>\n";
  if (reference) {
    s << "<line x1=\"" << L << "\" y1=\"" << py(*reference) << "\" x2=\"" << W - R << "\" y2=\"" << py(*reference)
      << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = px(xs[i]);
    s << "<line x1=\"" << x << "\" y1=\"" << py(ys[i] - err[i]) << "\" x2=\"" << x << "\" y2=\"" << py(ys[i] + err[i])
      << "\" stroke=\"steelblue\"/>\n";
    s << "<circle cx=\"" << x << "\" cy=\"" << py(ys[i]) << "\" r=\"3\" fill=\"steelblue\"/>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string file_stem(const std::string& test) {
  std::string s;
  for (char c : test) s += std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' ? c : '_';
  return s;
}

void write_plots(const RunConfig& cfg, const TestReport& r) {
  if (!cfg.plots || !cfg.out) return;
  const fs::path dir = *cfg.out / "plots";
  fs::create_directories(dir);
  auto save = [&](const std::string& suffix, const std::string& svg) {
    std::ofstream(dir / (file_stem(r.test) + suffix + ".svg"), std::ios::binary) << svg;
  };
  if (r.details.contains("grid")) {
    std::vector<double> t, m, e;
    for (const auto& g : r.details["grid"]) {
      t.push_back(g["t"].get<double>());
      m.push_back(g["mean"].get<double>());
      e.push_back(2.0 * g["std_error"].get<double>());
    }
    save("", svg_points(t, m, e, m.front(), r.test + ": mean of f along the grid (2 SE)", "t"));
  }
  auto moments = [&](const nlohmann::json& d, const std::string& suffix) {
    if (!d.contains("branches")) return;
    std::vector<double> b, m1, e1, m2, e2;
    for (const auto& x : d["branches"]) {
      b.push_back(x["branch"].get<double>());
      m1.push_back(x["first_moment"].get<double>());
      e1.push_back(3.0 * x["first_std_error"].get<double>());
      m2.push_back(x["second_moment"].get<double>());
      e2.push_back(3.0 * x["second_std_error"].get<double>());
    }
    save(suffix + "_first", svg_points(b, m1, e1, d["first_target"].get<double>(), r.test + ": E[d 1{branch}] (3 SE)", "branch"));
    save(suffix + "_second", svg_points(b, m2, e2, d["second_target"].get<double>(), r.test + ": E[d^2 1{branch}] (3 SE)", "branch"));
  };
  moments(r.details, "");
  if (r.details.contains("exact")) moments(r.details["exact"], "_exact");
  if (r.details.contains("brownian")) moments(r.details["brownian"], "_brownian");
}

// ---------------------------------------------------------------------------
// Commands

int cmd_validate(const RunConfig& cfg) {
  if (!cfg.complex) throw ComplexError("--complex is required for validate");
  const Polyhedron P = load_polyhedron(resolve_complex(*cfg.complex));
  const AdmissibilityReport report = validate_admissible(P);
  std::ostringstream s;
  write_header(s, cfg.to_json(), cfg.seed);
  s << report.to_text();
  emit(cfg, "validate.txt", s.str());
  if (cfg.out) std::cout << (report.admissible() ? "admissible\n" : report.to_text());
  return report.admissible() ? ok : not_admissible;
}

Point default_start(const Polyhedron& P) {
  const FaceId f = most_branched_face(P);
  const std::size_t m = P.face(f).vertices.size();
  const std::vector<double> w(m, 1.0 / static_cast<double>(m));
  return face_point(P, f, w);
}

int cmd_simulate(const RunConfig& cfg) {
  const Polyhedron P = admissible_complex(cfg);
  const Point p0 = cfg.start.empty() ? default_start(P) : parse_point(P, cfg.start);
  const std::size_t n = cfg.n.value_or(100);
  const double step = cfg.step > 0.0 ? cfg.step : 1e-4;
  const double horizon = cfg.grid.empty() ? cfg.horizon : cfg.grid.back();
  std::vector<PathSample> paths;
  if (cfg.sampler == "isotropic") {
    IsotropicConfig ic;
    ic.eta = cfg.eta;
    ic.horizon = horizon;
    paths = map_paths<PathSample>(n, cfg.threads, [&](std::size_t i) {
      Rng rng = path_rng(cfg.seed, i);
      return simulate_isotropic(P, p0, ic, rng);
    });
  } else {
    BrownianConfig bc;
    bc.step = step;
    bc.horizon = horizon;
    paths = map_paths<PathSample>(n, cfg.threads, [&](std::size_t i) {
      Rng rng = path_rng(cfg.seed, i);
      return simulate_brownian(P, p0, bc, rng);
    });
  }
  std::ostringstream s;
  write_paths_csv(s, P, paths, cfg.to_json(), cfg.seed);
  emit(cfg, "paths.csv", s.str());
  if (cfg.out) {
    const auto discarded = std::count_if(paths.begin(), paths.end(), [](const PathSample& p) { return p.discarded; });
    std::cout << "simulated " << n << " paths, " << discarded << " discarded\n";
  }
  return ok;
}

int cmd_solve(const RunConfig& cfg) {
  const Polyhedron P = admissible_complex(cfg);
  if (!cfg.bc) throw ComplexError("--bc is required for solve");
  const Mesh mesh = build_mesh(P, cfg.mesh_h);
  const BoundaryCondition bc = load_boundary_condition(mesh, resolve_bc(*cfg.bc));
  const int m = bc.components();
  const DiscreteField f = m == 1 ? solve_dirichlet(mesh, bc) : solve_harmonic_map_flat(mesh, bc, m);
  std::ostringstream s;
  write_field_csv(s, f, cfg.to_json(), cfg.seed);
  emit(cfg, "field.csv", s.str());
  if (cfg.out)
    std::cout << "solved " << mesh.node_count() << " nodes, energy " << format_double(dirichlet_energy(mesh, f)) << '\n';
  return ok;
}

SuiteConfig suite_config(const RunConfig& cfg) {
  SuiteConfig s;
  s.data_dir = data_dir();
  if (cfg.complex) s.complex = resolve_complex(*cfg.complex);
  s.seed = cfg.seed;
  s.paths = cfg.n.value_or(100000);
  s.eta = cfg.eta;
  s.step = cfg.step;
  s.grid = cfg.grid;
  s.mesh_h = cfg.mesh_h;
  s.level = cfg.level;
  s.threads = cfg.threads;
  return s;
}

int cmd_verify(const RunConfig& cfg) {
  if (cfg.complex) (void)admissible_complex(cfg);
  const std::vector<TestReport> reports = run_suite(cfg.suite, suite_config(cfg));
  nlohmann::json doc{{"config", cfg.to_json()}, {"seed", cfg.seed}, {"reports", nlohmann::json::array()}};
  std::ostringstream text, lines;
  write_header(text, cfg.to_json(), cfg.seed);
  bool all_ok = true;
  for (const TestReport& r : reports) {
    doc["reports"].push_back(r.to_json());
    text << r.to_text() << '\n';
    lines << r.summary() << '\n';
    all_ok = all_ok && r.as_expected();
    write_plots(cfg, r);
  }
  if (cfg.out) {
    emit(cfg, "report.json", doc.dump(2) + "\n");
    emit(cfg, "report.txt", text.str());
    std::cout << lines.str();
  } else {
    std::cout << "# config: " << cfg.to_json().dump() << "\n# seed: " << cfg.seed << '\n' << lines.str();
  }
  return all_ok ? ok : verification_failed;
}

int cmd_moments(const RunConfig& cfg) {
  const Polyhedron P = load_polyhedron(resolve_complex(cfg.complex.value_or("star_3.json")));
  if (P.dimension() != 1) throw ComplexError("moments needs a star graph");
  WalshConfig w;
  w.k = 0;
  for (VertexIndex v = 0; v < static_cast<VertexIndex>(P.vertex_count()); ++v)
    w.k = std::max(w.k, static_cast<int>(P.vertex_star(v).size()));
  w.t = cfg.grid.empty() ? 0.01 : cfg.grid.front();
  w.paths = cfg.n.value_or(100000);
  w.step = cfg.step;
  w.seed = cfg.seed;
  w.threads = cfg.threads;
  w.level = cfg.level;
  const TestReport r = walsh_moment_test(w, &P);
  std::ostringstream s;
  write_header(s, cfg.to_json(), cfg.seed);
  s << "sampler,branch,moment,estimate,std_error,target,z\n";
  for (const char* sampler : {"exact", "brownian"}) {
    const auto& d = r.details[sampler];
    for (const auto& b : d["branches"]) {
      for (const char* order : {"first", "second"}) {
        s << sampler << ',' << b["branch"].get<int>() << ',' << order << ','
          << format_double(b[std::string(order) + "_moment"].get<double>()) << ','
          << format_double(b[std::string(order) + "_std_error"].get<double>()) << ','
          << format_double(d[std::string(order) + "_target"].get<double>()) << ','
          << format_double(b[std::string(order) + "_z"].get<double>()) << '\n';
      }
    }
  }
  emit(cfg, "moments.csv", s.str());
  write_plots(cfg, r);
  if (cfg.out) std::cout << r.summary() << '\n';
  return r.details["within_3_sigma"].get<bool>() ? ok : verification_failed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Brownian motion, harmonic maps and their verification on polyhedra"};
  RunConfig cfg;
  std::size_t n = 0;
  app.add_option("command", cfg.command, "validate, simulate, solve, verify or moments")
      ->required()
      ->check(CLI::IsMember({"validate", "simulate", "solve", "verify", "moments"}));
  app.add_option("--complex", cfg.complex, "complex JSON file (or bundled name)");
  app.add_option("--bc", cfg.bc, "boundary condition JSON file");
  app.add_option("--seed", cfg.seed, "master seed");
  auto* n_opt = app.add_option("--n", n, "number of paths")->check(CLI::PositiveNumber);
  app.add_option("--eta", cfg.eta, "isotropic process scale")->check(CLI::Range(1e-12, 1.0));
  app.add_option("--step", cfg.step, "Brownian step")->check(CLI::PositiveNumber);
  app.add_option("--grid", cfg.grid, "time grid t1,t2,...")->delimiter(',')->check(CLI::PositiveNumber);
  app.add_option("--mesh-h", cfg.mesh_h, "mesh size")->check(CLI::PositiveNumber);
  app.add_option("--out", cfg.out, "output directory");
  app.add_option("--level", cfg.level, "significance level")->check(CLI::Range(1e-15, 0.5));
  app.add_option("--threads", cfg.threads, "worker threads")->check(CLI::Range(1u, 1024u));
  app.add_flag("--plots", cfg.plots, "write SVG plots next to the reports");
  app.add_option("--suite", cfg.suite, "verification suite")
      ->check(CLI::IsMember({"walsh", "branch", "skeleton", "generator", "martingale", "morphism", "sampler",
                             "calibration", "all"}));
  app.add_option("--sampler", cfg.sampler, "simulate: brownian or isotropic")
      ->check(CLI::IsMember({"brownian", "isotropic"}));
  app.add_option("--start", cfg.start, "simulate: start point (vertex or edge:a-b:s)");
  app.add_option("--horizon", cfg.horizon, "simulate: time horizon")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return parse_error;
  }
  if (n_opt->count() > 0) cfg.n = n;
  std::sort(cfg.grid.begin(), cfg.grid.end());

  try {
    if (cfg.command == "validate") return cmd_validate(cfg);
    if (cfg.command == "simulate") return cmd_simulate(cfg);
    if (cfg.command == "solve") return cmd_solve(cfg);
    if (cfg.command == "verify") return cmd_verify(cfg);
    return cmd_moments(cfg);
  } catch (const NotAdmissible& e) {
    std::cerr << "not admissible:\n" << e.what();
    return not_admissible;
  } catch (const ComplexError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return parse_error;
  } catch (const SimulationError& e) {
    std::cerr << "simulation error: " << e.what() << '\n';
    return simulation_failed;
  } catch (const GeometryError& e) {
    std::cerr << "simulation error: " << e.what() << '\n';
    return simulation_failed;
  } catch (const SolveError& e) {
    std::cerr << "solve error: " << e.what() << '\n';
    return solve_failed;
  } catch (const OperatorError& e) {
    std::cerr << "solve error: " << e.what() << '\n';
    return solve_failed;
  } catch (const VerificationError& e) {
    std::cerr << "verification error: " << e.what() << '\n';
    return verification_failed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return verification_failed;
  }
}
