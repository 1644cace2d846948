#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "polybm/errors.hpp"
#include "polybm/geometry.hpp"
#include "polybm/harmonic.hpp"
#include "polybm/io.hpp"
#include "polybm/operators.hpp"
#include "support.hpp"

using namespace polybm;
using polybm::testing::bundled;
using polybm::testing::data_dir;
using polybm::testing::edge_x;
using polybm::testing::square_xy;

namespace {

struct Book {
  Polyhedron P = bundled("book_3");
  PageCoordinates pc{P, most_branched_face(P)};

  double y(const Point& p) const { return pc(p).tangential; }
  double xn(const Point& p) const { return pc(p).normal; }
};

double max_nodal_error(const DiscreteField& u, const std::function<double(const Point&)>& exact) {
  double worst = 0.0;
  const Mesh& m = u.mesh();
  for (std::size_t i = 0; i < m.node_count(); ++i)
    worst = std::max(worst, std::abs(u(static_cast<int>(i)) - exact(m.node(static_cast<int>(i)).location)));
  return worst;
}

}  // namespace

TEST(Dirichlet, TripodFromFile) {
  const Polyhedron P = bundled("star_3");
  for (double h : {0.1, 0.01}) {
    const Mesh m = build_mesh(P, h);
    const BoundaryCondition bc = load_boundary_condition(m, data_dir() / "bc" / "tripod_bc.json");
    const DiscreteField u = solve_dirichlet(m, bc);
    EXPECT_NEAR(u(m.vertex_node(*P.find_vertex("c"))), 1.0, 1e-10);
    const Point mid = parse_point(P, "edge:c-v1:0.5");
    EXPECT_NEAR(u.evaluate(mid), 2.0, 1e-10);
  }
}

TEST(Dirichlet, KirchhoffAtTripodCentre) {
  const Polyhedron P = bundled("star_3");
  const Mesh m = build_mesh(P, 0.05);
  const DiscreteField u = solve_dirichlet(m, load_boundary_condition(m, data_dir() / "bc" / "tripod_bc.json"));
  const int c = m.vertex_node(*P.find_vertex("c"));
  EXPECT_NEAR(normal_trace_sum(m, u, c), 0.0, 10 * m.h() * max_gradient(m, u));
  EXPECT_TRUE(check_generator_domain(m, u).member);
}

TEST(Dirichlet, SquareHarmonicQuadratic) {
  const Polyhedron P = bundled("square");
  auto g = [&](const Point& p) {
    const Vec2 x = square_xy(P, p);
    return x[0] * x[0] - x[1] * x[1];
  };
  const Mesh m = build_mesh(P, 0.05);
  const DiscreteField u = solve_dirichlet(m, boundary_data(m, g));
  EXPECT_LE(max_nodal_error(u, g), m.h() * m.h());
}

TEST(Dirichlet, SquareQuarticConverges) {
  const Polyhedron P = bundled("square");
  auto g = [&](const Point& p) {
    const Vec2 x = square_xy(P, p);
    const double a = x[0] * x[0], b = x[1] * x[1];
    return a * a - 6 * a * b + b * b;
  };
  auto err = [&](double h) {
    const Mesh m = build_mesh(P, h);
    return max_nodal_error(solve_dirichlet(m, boundary_data(m, g)), g);
  };
  const double e1 = err(0.1), e2 = err(0.05), e3 = err(0.025);
  EXPECT_GE(std::log2(e1 / e2), 1.9);
  EXPECT_GE(std::log2(e2 / e3), 1.9);
}

TEST(Dirichlet, BookReproducesTangentialCoordinate) {
  const Book b;
  const Mesh m = build_mesh(b.P, 0.05);
  auto y = [&](const Point& p) { return b.y(p); };
  const DiscreteField u = solve_dirichlet(m, boundary_data(m, y));
  EXPECT_LE(max_nodal_error(u, y), 1e-10);
}

TEST(Dirichlet, MaximumPrincipleAndMinimalEnergy) {
  const Book b;
  const Mesh m = build_mesh(b.P, 0.1);
  auto g = [&](const Point& p) {
    const auto c = b.pc(p);
    return std::sin(3.0 * c.tangential) + (c.page == 1 ? c.normal : 0.0);
  };
  const BoundaryCondition bc = boundary_data(m, g);
  const DiscreteField u = solve_dirichlet(m, bc);
  double lo = 1e300, hi = -1e300;
  for (const auto& [node, v] : bc.values) {
    lo = std::min(lo, v[0]);
    hi = std::max(hi, v[0]);
  }
  for (double v : u.values()) {
    EXPECT_GE(v, lo - 1e-12);
    EXPECT_LE(v, hi + 1e-12);
  }

  const double e0 = dirichlet_energy(m, u);
  const std::vector<bool> fixed = bc.mask(m);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g01(0.0, 0.05);
  for (int trial = 0; trial < 100; ++trial) {
    DiscreteField w = u;
    for (std::size_t i = 0; i < m.node_count(); ++i)
      if (!fixed[i]) w(static_cast<int>(i)) += g01(rng);
    EXPECT_GE(dirichlet_energy(m, w), e0 - 1e-12);
  }
}

TEST(Dirichlet, Errors) {
  const Polyhedron P = bundled("star_3");
  const Mesh m = build_mesh(P, 0.25);
  EXPECT_THROW((void)solve_dirichlet(m, BoundaryCondition{}), SolveError);

  BoundaryCondition on_centre;
  on_centre.values[m.vertex_node(*P.find_vertex("c"))] = {1.0};
  EXPECT_THROW((void)solve_dirichlet(m, on_centre), SolveError);
  on_centre.allow_singular_nodes = true;
  const DiscreteField u = solve_dirichlet(m, on_centre);
  for (double v : u.values()) EXPECT_NEAR(v, 1.0, 1e-12);

  const auto doc = nlohmann::json::parse(R"({"dimension": 1, "vertices": ["a", "b", "c", "d"],
      "simplices": [["a", "b"], ["c", "d"]], "edge_lengths": {"a-b": 1.0, "c-d": 1.0}})");
  const Polyhedron two = build_complex(parse_complex_description(doc));
  const Mesh m2 = build_mesh(two, 0.25);
  BoundaryCondition one_side;
  one_side.values[m2.vertex_node(*two.find_vertex("a"))] = {0.0};
  one_side.values[m2.vertex_node(*two.find_vertex("b"))] = {1.0};
  try {
    (void)solve_dirichlet(m2, one_side);
    FAIL() << "expected SolveError";
  } catch (const SolveError& e) {
    EXPECT_NE(std::string(e.what()).find("disconnected"), std::string::npos);
  }
}

TEST(HarmonicMap, FlatTargetIsComponentwise) {
  const Book b;
  const Mesh m = build_mesh(b.P, 0.1);
  auto g0 = [&](const Point& p) { return std::cos(2.0 * b.y(p)) + b.xn(p); };
  auto g1 = [&](const Point& p) { return b.y(p) * b.xn(p); };
  const DiscreteField map = solve_harmonic_map_flat(m, boundary_data(m, {g0, g1}), 2);
  const DiscreteField u0 = solve_dirichlet(m, boundary_data(m, g0));
  const DiscreteField u1 = solve_dirichlet(m, boundary_data(m, g1));
  ASSERT_EQ(map.components(), 2);
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    EXPECT_NEAR(map(static_cast<int>(i), 0), u0(static_cast<int>(i)), 1e-12);
    EXPECT_NEAR(map(static_cast<int>(i), 1), u1(static_cast<int>(i)), 1e-12);
  }
  const DiscreteField single = solve_harmonic_map_flat(m, boundary_data(m, g0), 1);
  for (std::size_t i = 0; i < m.node_count(); ++i)
    EXPECT_NEAR(single(static_cast<int>(i)), u0(static_cast<int>(i)), 1e-12);
}

TEST(HarmonicMap, ConstantMapHasNoEnergy) {
  const Polyhedron P = bundled("square");
  const Mesh m = build_mesh(P, 0.1);
  const DiscreteField c = solve_harmonic_map_flat(
      m, boundary_data(m, {[](const Point&) { return 2.0; }, [](const Point&) { return -1.0; }}), 2);
  EXPECT_NEAR(dirichlet_energy(m, c.component(0)) + dirichlet_energy(m, c.component(1)), 0.0, 1e-20);
}

TEST(WeakResidual, FlatSolutionAndPerturbation) {
  const Book b;
  const Mesh m = build_mesh(b.P, 0.1);
  auto g0 = [&](const Point& p) { return std::sin(2.0 * b.y(p)) * (1.0 + b.xn(p)); };
  auto g1 = [&](const Point& p) { return b.y(p); };
  DiscreteField phi = solve_harmonic_map_flat(m, boundary_data(m, {g0, g1}), 2);
  const TargetManifold R2 = TargetManifold::euclidean(2);
  EXPECT_LE(weakly_harmonic_residual(m, phi, R2).max_abs, 1e-8);

  const auto K = stiffness_matrix(m);
  int probe = -1;
  for (std::size_t i = 0; i < m.node_count(); ++i)
    if (m.node(static_cast<int>(i)).kind == NodeClass::interior) {
      probe = static_cast<int>(i);
      break;
    }
  ASSERT_GE(probe, 0);
  phi(probe, 0) += 0.1;
  const WeakResidual r = weakly_harmonic_residual(m, phi, R2);
  EXPECT_NEAR(std::abs(r.residual(probe, 0)), 0.1 * K.coeff(probe, probe), 1e-8);
  EXPECT_NEAR(r.residual(probe, 1), 0.0, 1e-8);
}

TEST(WeakResidual, HyperbolicConstantAndChart) {
  const Polyhedron P = bundled("square");
  const Mesh m = build_mesh(P, 0.1);
  const TargetManifold H = TargetManifold::hyperbolic_half_plane();
  DiscreteField c(m, 2);
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    c(static_cast<int>(i), 0) = 0.3;
    c(static_cast<int>(i), 1) = 1.5;
  }
  EXPECT_NEAR(weakly_harmonic_residual(m, c, H).max_abs, 0.0, 1e-14);
  c(0, 1) = -0.2;
  EXPECT_THROW((void)weakly_harmonic_residual(m, c, H), OperatorError);
  EXPECT_THROW((void)weakly_harmonic_residual(m, c.component(0), H), OperatorError);
}

TEST(Dilation, TangentialCoordinateAndScaling) {
  const Book b;
  const Mesh m = build_mesh(b.P, 0.05);
  const DiscreteField y = DiscreteField::from_function(m, [&](const Point& p) { return b.y(p); }).nodal();
  const DilationResult d1 = compute_dilation(m, y);
  EXPECT_TRUE(d1.morphism_candidate);
  for (double v : d1.lambda.values()) EXPECT_NEAR(v, 1.0, 1e-10);

  const DilationResult d2 = compute_dilation(m, y.scaled(2.0));
  EXPECT_TRUE(d2.morphism_candidate);
  for (double v : d2.lambda.values()) EXPECT_NEAR(v, 4.0, 1e-10);

  const DiscreteField g = DiscreteField::from_function(m, [&](const Point& p) {
    return std::sin(b.y(p)) + 0.5 * b.xn(p) * b.xn(p);
  }).nodal();
  const DilationResult dg = compute_dilation(m, g);
  const DilationResult dg3 = compute_dilation(m, g.scaled(3.0));
  for (std::size_t i = 0; i < m.node_count(); ++i)
    EXPECT_NEAR(dg3.lambda(static_cast<int>(i)), 9.0 * dg.lambda(static_cast<int>(i)),
                1e-12 * std::max(1.0, dg3.lambda(static_cast<int>(i))));
}

TEST(Dilation, NormalCoordinateIsNotAMorphism) {
  const Book b;
  const Mesh m = build_mesh(b.P, 0.05);
  const DiscreteField xn = DiscreteField::from_function(m, [&](const Point& p) { return b.xn(p); }).nodal();
  const DilationResult d = compute_dilation(m, xn);
  EXPECT_FALSE(d.morphism_candidate);
  EXPECT_GT(d.max_residual, 1.0);
}

TEST(Pullback, ComposesNodally) {
  const Polyhedron P = bundled("interval");
  const Mesh m = build_mesh(P, 0.1);
  const DiscreteField x = DiscreteField::from_function(m, [&](const Point& p) { return edge_x(P, p); }).nodal();
  for (const TargetFunction& v : default_test_functions()) {
    const DiscreteField w = pullback(x, v);
    for (std::size_t i = 0; i < m.node_count(); ++i) EXPECT_DOUBLE_EQ(w(static_cast<int>(i)), v.value(x(static_cast<int>(i))));
  }
  TargetFunction log_v{"log", [](double s) { return std::log(s); }, [](double s) { return -1.0 / (s * s); },
                       [](double s) { return s > 0.0; }};
  EXPECT_THROW((void)pullback(x, log_v), OperatorError);
}

TEST(ConvexTester, CertifiesConvexAndRejectsConcave) {
  auto box = [](double lo, double hi) { return ConvexTester::Box{{lo}, {hi}}; };
  ConvexTester T{box(0.2, 0.8), box(0.1, 0.9), box(0.0, 1.0), [](std::span<const double> y) { return y[0] * y[0]; }};
  Rng rng(3);
  EXPECT_TRUE(T.certify(rng));
  T.f = [](std::span<const double> y) { return -y[0] * y[0]; };
  EXPECT_FALSE(T.certify(rng));
  T.f = [](std::span<const double> y) { return y[0] * y[0]; };
  T.U1 = box(0.0, 0.95);
  EXPECT_FALSE(T.certify(rng));
}
