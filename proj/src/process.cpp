#include "polybm/process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polybm/errors.hpp"

namespace polybm {

// ---------------------------------------------------------------------------
// Region

Region Region::whole(const Polyhedron& P) {
  Region r;
  r.member_.assign(P.maximal_count(), true);
  return r;
}

Region Region::of(const Polyhedron& P, std::span<const SimplexId> simplices) {
  Region r;
  r.member_.assign(P.maximal_count(), false);
  for (SimplexId s : simplices) r.member_.at(s) = true;
  return r;
}

Region Region::star(const Polyhedron& P, const Point& p) {
  const Location loc = locate(P, p);
  if (loc.stratum == Stratum::interior) {
    const SimplexId s[] = {p.simplex};
    return of(P, s);
  }
  if (loc.stratum == Stratum::face) return of(P, P.adjacent(loc.face));
  return of(P, P.vertex_star(loc.vertex));
}

bool Region::face_internal(const Polyhedron& P, FaceId f) const {
  auto adj = P.adjacent(f);
  if (adj.size() < 2) return false;
  return std::all_of(adj.begin(), adj.end(), [&](SimplexId s) { return has_simplex(s); });
}

bool Region::contains(const Polyhedron& P, const Point& p) const {
  const Location loc = locate(P, p);
  bool inside = false;
  switch (loc.stratum) {
    case Stratum::interior:
      inside = has_simplex(p.simplex);
      break;
    case Stratum::face:
      inside = face_internal(P, loc.face);
      break;
    case Stratum::skeleton:
      inside = false;
      break;
  }
  return inside && (!within || within(p));
}

// ---------------------------------------------------------------------------
// Samplers

double isotropic_speed(int dimension, double rate) { return std::sqrt(0.5 * rate * dimension); }

PathSample simulate_isotropic(const Polyhedron& P, const Point& p0, const IsotropicConfig& cfg, Rng& rng) {
  if (locate(P, p0).stratum == Stratum::skeleton) throw SimulationError("start point on the (n-2)-skeleton");
  const FlowState start = sample_link_direction(P, p0, rng);
  return simulate_isotropic_from(P, start, cfg, rng);
}

PathSample simulate_isotropic_from(const Polyhedron& P, const FlowState& start, const IsotropicConfig& cfg, Rng& rng) {
  if (!(cfg.eta > 0.0 && cfg.eta <= 1.0)) throw SimulationError("eta must lie in (0, 1]");
  if (!(cfg.horizon > 0.0)) throw SimulationError("horizon must be positive");
  if (!(cfg.rate > 0.0)) throw SimulationError("rate must be positive");

  PathSample path;
  const double scale = cfg.eta * cfg.eta;
  const double internal_end = cfg.horizon / scale;
  const double speed = isotropic_speed(P.dimension(), cfg.rate) * cfg.eta;
  std::exponential_distribution<double> holding(cfg.rate);
  StepOptions opt;
  opt.rule = cfg.rule;

  FlowState state = start;
  path.times.push_back(0.0);
  path.points.push_back(state.position);
  double clock = 0.0;
  try {
    for (;;) {
      const double next = std::min(clock + holding(rng), internal_end);
      if (next <= clock) continue;
      state = geodesic_step(P, state, speed * (next - clock), rng, opt).state;
      clock = next;
      const bool done = clock >= internal_end;
      path.times.push_back(done ? cfg.horizon : scale * clock);
      path.points.push_back(state.position);
      if (done) break;
      ++path.renewals;
      const double elapsed = state.elapsed;
      state = sample_link_direction(P, state.position, rng);
      state.elapsed = elapsed;
    }
  } catch (const CodimensionTwoHit&) {
    path.discarded = true;
  }
  path.final_state = state;
  return path;
}

PathSample simulate_brownian(const Polyhedron& P, const Point& p0, const BrownianConfig& cfg, Rng& rng) {
  if (!(cfg.step > 0.0)) throw SimulationError("step must be positive");
  if (!(cfg.horizon > 0.0)) throw SimulationError("horizon must be positive");
  if (locate(P, p0).stratum == Stratum::skeleton) throw SimulationError("start point on the (n-2)-skeleton");
  const int n = P.dimension();

  PathSample path;
  StepOptions opt;
  opt.rule = cfg.rule;
  opt.branch_weights = cfg.branch_weights;
  if (cfg.record_choices) opt.choices = &path.choices;
  if (cfg.stop) {
    const Region* U = cfg.stop;
    opt.stop_at = [&P, U](FaceId f, SimplexId) { return !U->face_internal(P, f); };
  }

  FlowState state;
  state.position = p0;
  path.times.push_back(0.0);
  path.points.push_back(p0);
  const auto steps = static_cast<std::size_t>(std::ceil(cfg.horizon / cfg.step - 1e-9));
  path.times.reserve(steps + 1);
  path.points.reserve(steps + 1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double t = 0.0;
  try {
    for (std::size_t i = 1; i <= steps; ++i) {
      const double t_next = i == steps ? cfg.horizon : static_cast<double>(i) * cfg.step;
      const double dt = t_next - t;
      const double sd = std::sqrt(dt);
      Vec2 z{gauss(rng) * sd, n == 2 ? gauss(rng) * sd : 0.0};
      const double len = std::hypot(z[0], z[1]);
      if (len > 0.0) {
        state.direction = {z[0] / len, z[1] / len};
        const StepResult r = geodesic_step(P, state, len, rng, opt);
        state = r.state;
        if (r.stopped) {
          const double tau = t + dt * (r.travelled / len);
          path.exit_time = tau;
          path.times.push_back(std::max(tau, std::nextafter(t, 1.0)));
          path.points.push_back(state.position);
          break;
        }
      }
      t = t_next;
      path.times.push_back(t);
      path.points.push_back(state.position);
      if (cfg.stop && cfg.stop->within && !cfg.stop->within(state.position)) {
        path.exit_time = t;
        break;
      }
    }
  } catch (const CodimensionTwoHit&) {
    path.discarded = true;
  }
  path.final_state = state;
  return path;
}

WalshSample sample_walsh_star(int k, double t, std::size_t n, Rng& rng, double edge_length) {
  if (k < 2) throw SimulationError("Walsh star needs k >= 2");
  if (!(t > 0.0)) throw SimulationError("time must be positive");
  WalshSample out;
  out.distance.reserve(n);
  out.branch.reserve(n);
  std::normal_distribution<double> gauss(0.0, std::sqrt(t));
  std::uniform_int_distribution<int> label(0, k - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::abs(gauss(rng));
    out.distance.push_back(d);
    out.branch.push_back(label(rng));
    if (d > edge_length) ++out.beyond_edge;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stopping

namespace {

// Chart distance from p to the part of the boundary of U visible from p's
// host simplex: faces that U does not contain when p is inside, faces that
// lead back into U when p is outside.
double boundary_margin(const Polyhedron& P, const Region& U, const Point& p, bool inside) {
  const Chart& c = P.chart(p.simplex);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= P.dimension(); ++i) {
    const FaceId f = P.opposite_face(p.simplex, i);
    bool relevant;
    if (inside) {
      relevant = !U.face_internal(P, f);
    } else {
      auto adj = P.adjacent(f);
      relevant = std::any_of(adj.begin(), adj.end(), [&](SimplexId s) { return U.has_simplex(s); });
    }
    if (!relevant) continue;
    best = std::min(best, p.bary[i] / std::hypot(c.gradient[i][0], c.gradient[i][1]));
  }
  return std::isfinite(best) ? best : 0.0;
}

}  // namespace

StoppedPath stop_at_exit(const Polyhedron& P, const PathSample& path, const Region& U) {
  StoppedPath out;
  out.path.seed = path.seed;
  out.path.discarded = path.discarded;
  out.tau = path.times.empty() ? 0.0 : path.times.back();
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    if (U.contains(P, path.points[i])) {
      out.path.times.push_back(path.times[i]);
      out.path.points.push_back(path.points[i]);
      continue;
    }
    if (i == 0) throw SimulationError("path does not start inside the region");
    const double m_in = boundary_margin(P, U, path.points[i - 1], true);
    const double m_out = boundary_margin(P, U, path.points[i], false);
    const double frac = (m_in + m_out) > 0.0 ? m_in / (m_in + m_out) : 1.0;
    out.tau = path.times[i - 1] + frac * (path.times[i] - path.times[i - 1]);
    out.exited = true;
    out.path.exit_time = out.tau;
    break;
  }
  return out;
}

const Point& point_at_time(const PathSample& path, double t) {
  if (path.times.empty()) throw SimulationError("empty path");
  auto it = std::upper_bound(path.times.begin(), path.times.end(), t + 1e-12);
  const std::size_t idx = it == path.times.begin() ? 0 : static_cast<std::size_t>(it - path.times.begin()) - 1;
  return path.points[idx];
}

}  // namespace polybm
