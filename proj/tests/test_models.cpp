#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace vesselnet;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

BloodFlowParams unit_blood_flow(double mu = 0.0) {
  BloodFlowParams p;
  p.rho = 1.0;
  p.mu = mu;
  p.beta = 1.0;
  p.p0 = 1.0;
  p.a0 = ConstantArea{1.0};
  return p;
}

// sin(pi x) cos(t)
Field sin_x_cos_t(double offset = 0.0) {
  return Field{offset, {FieldTerm{1.0, SinFactor{pi, 0.0}, CosFactor{1.0, 0.0}}}};
}

// cos(pi x) sin(t)
Field cos_x_sin_t(double amp = 1.0) { return Field{0.0, {FieldTerm{amp, CosFactor{pi, 0.0}, SinFactor{1.0, 0.0}}}}; }

std::vector<std::pair<double, double>> random_points(std::mt19937_64& g, int count) {
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < count; ++i) pts.emplace_back(testing::uniform(g, 0.0, 1.0), testing::uniform(g, 0.0, 2.0));
  return pts;
}

}  // namespace

TEST_CASE("blood-flow coefficients at the reference state", "[models][blood_flow]") {
  const BloodFlowModel m(unit_blood_flow());
  CHECK(m.area(0.3, 1.0) == 1.0);
  const Coefficients co = m.eval(0.3, 0.0, 1.0, 0.0);
  CHECK(co == Coefficients{1.0, 1.0, 0.0, 0.0, 0.0});
}

TEST_CASE("blood-flow coefficients with flow", "[models][blood_flow]") {
  const Coefficients co = BloodFlowModel(unit_blood_flow()).eval(0.5, 0.0, 1.0, 1.0);
  CHECK(co.a == 1.0);
  CHECK(co.b == 0.0);
  CHECK(co.c == 1.0);
  CHECK(co.f == 0.0);
  CHECK(co.g == 0.0);
}

TEST_CASE("blood-flow viscous term", "[models][blood_flow]") {
  const Coefficients co = BloodFlowModel(unit_blood_flow(1.0 / (8.0 * pi))).eval(0.5, 0.0, 1.0, 1.0);
  CHECK_THAT(co.g, WithinAbs(-1.0, 1e-15));
}

TEST_CASE("blood-flow coefficients against direct formulas", "[models][blood_flow]") {
  BloodFlowParams p;
  p.rho = 1.06;
  p.mu = 0.035;
  p.beta = 0.7;
  p.p0 = 1.3;
  p.a0 = LinearTaper{1.2, -0.3};
  const BloodFlowModel m(p);
  auto g = testing::rng(5);
  for (int i = 0; i < 200; ++i) {
    const double x = testing::uniform(g, 0, 1), P = testing::uniform(g, 0.5, 4), Q = testing::uniform(g, -2, 2);
    const double A = 1.2 - 0.3 * x + 0.7 * std::log(P / 1.3);
    const double AP = 0.7 / P;
    const Coefficients co = m.eval(x, 0.0, P, Q);
    CHECK_THAT(co.a, WithinRel(P / 0.7, 1e-14));
    CHECK_THAT(co.b, WithinRel(A / 1.06 - Q * Q * AP / (A * A), 1e-12));
    CHECK_THAT(co.c, WithinRel(Q / A, 1e-14));
    CHECK_THAT(co.g, WithinAbs(Q * Q * (-0.3) / (A * A) - 8 * pi * 0.035 * Q / (1.06 * A), 1e-13));
    CHECK(co.f == 0.0);
  }
}

TEST_CASE("blood-flow domain errors carry the location", "[models][blood_flow]") {
  const BloodFlowModel m(unit_blood_flow());
  try {
    m.eval(0.25, 0.5, 0.0, 0.0);
    FAIL("expected a DomainError");
  } catch (const DomainError& err) {
    CHECK(err.x() == 0.25);
    CHECK(err.t() == 0.5);
    CHECK(err.pressure() == 0.0);
  }
  CHECK_THROWS_AS(m.eval(0.25, 0.5, -1.0, 0.0), DomainError);
  // ln(P) = -1 collapses a unit reference area.
  CHECK_THROWS_AS(m.eval(0.25, 0.5, std::exp(-1.0), 0.0), DomainError);
  CHECK_NOTHROW(m.eval(0.25, 0.5, std::exp(-0.99), 0.0));

  BloodFlowParams bounded = unit_blood_flow();
  bounded.p_min = 0.5;
  CHECK_THROWS_AS(BloodFlowModel(bounded).eval(0.0, 0.0, 0.49, 0.0), DomainError);

  BloodFlowParams bad = unit_blood_flow();
  bad.rho = 0.0;
  CHECK_THROWS_AS(BloodFlowModel(bad), std::invalid_argument);
  bad = unit_blood_flow();
  bad.mu = -1.0;
  CHECK_THROWS_AS(BloodFlowModel(bad), std::invalid_argument);
}

TEST_CASE("blood-flow model is hyperbolic wherever admissible", "[models][blood_flow][property]") {
  auto g = testing::rng(17);
  BloodFlowParams p;
  p.rho = 1.0;
  p.mu = 0.01;
  p.beta = 0.5;
  p.p0 = 1.0;
  p.a0 = SplineArea{{0.0, 0.3, 0.7, 1.0}, {1.0, 0.9, 0.85, 0.8}};
  const BloodFlowModel m(p);
  for (int i = 0; i < 10000; ++i) {
    const double x = testing::uniform(g, 0, 1), P = testing::uniform(g, 0.2, 10), Q = testing::uniform(g, -5, 5);
    const Coefficients co = m.eval(x, 0.0, P, Q);
    const double A = m.area(x, P);
    const double disc = co.c * co.c + co.a * co.b;
    REQUIRE(disc > 0.0);
    CHECK_THAT(disc, WithinAbs(A / (p.rho * p.beta / P), 1e-13 * (co.c * co.c + std::abs(co.a * co.b))));
  }
}

TEST_CASE("linear constant model", "[models][linear]") {
  const LinearConstantModel unit(LinearParams{1, 1, 0, 0, 0});
  CHECK(unit.eval(0.1, 7.0, 3.0, -2.0) == Coefficients{1, 1, 0, 0, 0});
  const LinearConstantModel m(LinearParams{2, 0.5, 0.1, 0.3, -0.4});
  CHECK(m.eval(0.9, 1.0, 0.0, 0.0) == Coefficients{2, 0.5, 0.1, 0.3, -0.4});
  CHECK_THROWS_AS(LinearConstantModel(LinearParams{0, 1, 0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(LinearConstantModel(LinearParams{-1, 1, 0, 0, 0}), std::invalid_argument);
}

TEST_CASE("linear model evaluation is bit-identical across calls", "[models][linear][property]") {
  const LinearConstantModel m(LinearParams{1.7, 0.3, -0.2, 0.11, 0.05});
  auto g = testing::rng(23);
  const Coefficients first = m.eval(0.0, 0.0, 0.0, 0.0);
  for (int i = 0; i < 1000; ++i) {
    const Coefficients co = m.eval(testing::uniform(g, 0, 1), testing::uniform(g, 0, 9), testing::uniform(g, -9, 9),
                                   testing::uniform(g, -9, 9));
    CHECK(std::memcmp(&co, &first, sizeof co) == 0);
  }
}

TEST_CASE("area profiles", "[models][area]") {
  CHECK(AreaProfile(ConstantArea{2.0}).value(0.4) == 2.0);
  CHECK(AreaProfile(ConstantArea{2.0}).derivative(0.4) == 0.0);
  const AreaProfile taper(LinearTaper{1.0, -0.2});
  CHECK(taper.value(0.5) == 0.9);
  CHECK(taper.derivative(0.5) == -0.2);
  CHECK_THROWS_AS(AreaProfile(LinearTaper{1.0, -1.0}), std::invalid_argument);
  CHECK_THROWS_AS(AreaProfile(SplineArea{{0.0, 0.0}, {1.0, 1.0}}), std::invalid_argument);

  SECTION("two-point spline is the chord") {
    const AreaProfile s(SplineArea{{0.0, 1.0}, {1.0, 0.5}});
    CHECK_THAT(s.value(0.3), WithinAbs(0.85, 1e-15));
    CHECK_THAT(s.derivative(0.3), WithinAbs(-0.5, 1e-15));
  }
  SECTION("spline interpolates and is C1") {
    const std::vector<double> xs = {0.0, 0.2, 0.5, 0.8, 1.0};
    const std::vector<double> as = {1.0, 0.95, 0.9, 0.82, 0.8};
    const AreaProfile s(SplineArea{xs, as});
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK_THAT(s.value(xs[i]), WithinAbs(as[i], 1e-14));
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
      CHECK_THAT(s.derivative(xs[i] - 1e-12), WithinAbs(s.derivative(xs[i] + 1e-12), 1e-9));
    }
    // Analytic derivative against a centered difference.
    for (double x : {0.05, 0.33, 0.61, 0.97}) {
      const double step = 1e-6;
      CHECK_THAT(s.derivative(x), WithinAbs((s.value(x + step) - s.value(x - step)) / (2 * step), 1e-8));
    }
  }
  SECTION("natural spline reproduces a straight line exactly") {
    const AreaProfile s(SplineArea{{0.0, 0.25, 0.6, 1.0}, {1.0, 0.95, 0.88, 0.8}});
    for (double x : {0.1, 0.4, 0.9}) {
      CHECK_THAT(s.value(x), WithinAbs(1.0 - 0.2 * x, 1e-14));
      CHECK_THAT(s.derivative(x), WithinAbs(-0.2, 1e-13));
    }
  }
}

TEST_CASE("manufactured forcing for constant fields vanishes", "[models][manufactured]") {
  const ManufacturedModel m(std::make_shared<LinearConstantModel>(LinearParams{1, 1, 0, 0, 0}), Field::constant(3.0),
                            Field::constant(0.0));
  const auto [f, g] = m.forcing(0.4, 0.7);
  CHECK(f == 0.0);
  CHECK(g == 0.0);
}

TEST_CASE("manufactured forcing for a separable field", "[models][manufactured]") {
  const ManufacturedModel m(std::make_shared<LinearConstantModel>(LinearParams{1, 1, 0, 0, 0}), sin_x_cos_t(),
                            Field::constant(0.0));
  auto g = testing::rng(29);
  for (int i = 0; i < 100; ++i) {
    const double x = testing::uniform(g, 0, 1), t = testing::uniform(g, 0, 3);
    const Coefficients co = m.eval(x, t, 0.0, 0.0);
    CHECK_THAT(co.f, WithinAbs(-std::sin(pi * x) * std::sin(t), 1e-15));
    CHECK_THAT(co.g, WithinAbs(pi * std::cos(pi * x) * std::cos(t), 1e-14));
    CHECK(co.a == 1.0);
    CHECK(co.b == 1.0);
  }
}

TEST_CASE("manufactured residual vanishes for every base model", "[models][manufactured][property]") {
  auto g = testing::rng(31);
  const auto pts = random_points(g, 1000);
  BloodFlowParams taper;
  taper.rho = 1.0;
  taper.mu = 0.01;
  taper.beta = 1.0;
  taper.p0 = 1.0;
  taper.a0 = LinearTaper{1.0, -0.2};
  BloodFlowParams spline = taper;
  spline.a0 = SplineArea{{0.0, 0.5, 1.0}, {1.2, 1.0, 0.9}};
  const std::vector<ModelPtr> bases = {
      std::make_shared<LinearConstantModel>(LinearParams{1, 1, 0, 0, 0}),
      std::make_shared<LinearConstantModel>(LinearParams{2, 0.5, 0.1, 0.3, -0.4}),
      std::make_shared<BloodFlowModel>(taper),
      std::make_shared<BloodFlowModel>(spline),
  };
  for (std::size_t i = 0; i < bases.size(); ++i) {
    INFO("base " << i);
    const ManufacturedModel m(bases[i], sin_x_cos_t(2.0), cos_x_sin_t());
    CHECK(manufactured_residual(m, pts) < 1e-12);
  }
}

TEST_CASE("manufactured forcing matches a hand derivation on the blood-flow model", "[models][manufactured]") {
  BloodFlowParams p = unit_blood_flow(0.01);
  p.a0 = LinearTaper{1.0, -0.2};
  const auto base = std::make_shared<BloodFlowModel>(p);
  const ManufacturedModel m(base, sin_x_cos_t(2.0), cos_x_sin_t());
  auto g = testing::rng(37);
  for (int i = 0; i < 100; ++i) {
    const double x = testing::uniform(g, 0, 1), t = testing::uniform(g, 0, 2);
    const double P = 2.0 + std::sin(pi * x) * std::cos(t), Q = std::cos(pi * x) * std::sin(t);
    const double Pt = -std::sin(pi * x) * std::sin(t), Px = pi * std::cos(pi * x) * std::cos(t);
    const double Qt = std::cos(pi * x) * std::cos(t), Qx = -pi * std::sin(pi * x) * std::sin(t);
    const double A = 1.0 - 0.2 * x + std::log(P);
    const double AP = 1.0 / P;
    const double a = 1.0 / AP, b = A - Q * Q * AP / (A * A), c = Q / A;
    const Coefficients co = m.eval(x, t, 5.0, 5.0);
    CHECK_THAT(co.f, WithinAbs(Pt + a * Qx, 1e-13));
    CHECK_THAT(co.g, WithinAbs(Qt + b * Px + 2 * c * Qx, 1e-13));
  }
}

TEST_CASE("model factory", "[models]") {
  CHECK(dynamic_cast<const LinearConstantModel*>(make_model(LinearParams{}).get()) != nullptr);
  CHECK(dynamic_cast<const BloodFlowModel*>(make_model(unit_blood_flow()).get()) != nullptr);
  CHECK_THROWS_AS(manufactured_wrap(nullptr, Field{}, Field{}), std::invalid_argument);
}
