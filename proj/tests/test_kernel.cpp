#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>
#include <vector>

#include "polycal/kernel.hpp"
#include "polycal/numerics.hpp"
#include "polycal/scalar_field.hpp"

using namespace polycal;

namespace {

const QuadSpec kSpec = QuadSpec::finite_rule();
const double kPi = std::acos(-1.0);

// Gaussian average of e^{-a eta^2} has the closed form below.
double gauss_heat(double a, double x, double t) {
  return std::exp(-a * x * x / (1.0 + 4.0 * a * t)) / std::sqrt(1.0 + 4.0 * a * t);
}

}  // namespace

TEST_CASE("reflected kernel values and mass") {
  CHECK(g0(0.0, 0.0, 1.0) == doctest::Approx(1.0 / std::sqrt(kPi)).epsilon(1e-14));

  // far from the axis the reflected term is exponentially negligible
  const double direct = 1.0 / (2.0 * std::sqrt(kPi * 1e-4));
  CHECK(g0(3.0, 3.0, 1e-4) == doctest::Approx(direct).epsilon(1e-15));

  const double mass = integrate_gaussian_tail([](double s) { return g0(1.3, s, 0.7); },
                                              0.7, 1.3, QuadSpec::tail_rule());
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("weight collapses to the closed form on the axis") {
  // x = 0: scaled kernel factor is 1, (4t)^gamma = 1 at t = 1/4
  const double got = weight(0.25, 0.0, 1.0, 0.25);
  CHECK(got == doctest::Approx(2.0 * std::exp(-1.0) / gamma_fn(1.25)).epsilon(1e-14));

  // s = 0 kills the s^{2 gamma + 1} factor
  CHECK(weight(0.3, 1.0, 0.0, 1.0) == 0.0);
}

TEST_CASE("weight agrees with the textbook product form at moderate argument") {
  const double g = 0.3, x = 1.2, s = 0.8, t = 0.5;
  const double z = x * s / (2.0 * t);
  const double textbook = std::pow(x, -g) * std::pow(s, g + 1.0) *
                          std::exp(-(x * x + s * s) / (4.0 * t)) * std::exp(z) *
                          bessel_i_scaled(g, z) / (2.0 * t);
  CHECK(weight(g, x, s, t) == doctest::Approx(textbook).epsilon(1e-13));
}

TEST_CASE("weight carries unit mass across the parameter grid") {
  for (double g : {-0.4, 0.0, 0.4})
    for (double x : {0.0, 0.5, 1.3, 2.7, 5.0})
      for (double t : {0.1, 1.0, 10.0}) {
        const double mass = integrate_gaussian_tail(
            [&](double s) { return weight(g, x, s, t); }, t, x, QuadSpec::tail_rule(),
            2.0 * g + 1.0);
        CAPTURE(g); CAPTURE(x); CAPTURE(t);
        CHECK(std::abs(mass - 1.0) <= 1e-10);
      }
}

TEST_CASE("weight is nonnegative on a randomized grid") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> dg(-0.49, 0.49);
  std::uniform_real_distribution<double> dx(0.0, 6.0);
  std::uniform_real_distribution<double> dt(0.05, 10.0);
  for (int i = 0; i < 10000; ++i) {
    const double w = weight(dg(rng), dx(rng), dx(rng), dt(rng));
    REQUIRE(std::isfinite(w));
    REQUIRE(w >= 0.0);
  }
}

TEST_CASE("weight approaches the reflected kernel at the parameter edge") {
  // gamma -> -1/2 collapses the scaled kernel factor to (1 + e^{-2z})/2.
  // s starts off the axis: the s^{2 gamma + 1} factor vanishes identically at
  // s = 0 for gamma > -1/2, so the limit cannot hold on that edge point.
  double worst = 0.0;
  for (double x = 0.0; x <= 3.0; x += 0.3)
    for (double s = 0.3; s <= 3.0; s += 0.3)
      worst = std::max(worst, std::abs(weight(-0.499, x, s, 1.0) - g0(x, s, 1.0)));
  CHECK(worst <= 2e-2);
}

TEST_CASE("weight acts as a delta family as t shrinks") {
  const double x = 0.7;
  const double target = std::exp(-x * x);
  std::array<double, 3> err{};
  const std::array<double, 3> ts{1e-2, 1e-3, 1e-4};
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double smeared = integrate_gaussian_tail(
        [&](double s) { return weight(0.25, x, s, ts[i]) * std::exp(-s * s); }, ts[i], x,
        QuadSpec::tail_rule(), 1.5);
    err[i] = std::abs(smeared - target);
  }
  const double order01 = std::log10(err[0] / err[1]);
  const double order12 = std::log10(err[1] / err[2]);
  CHECK(order01 >= 0.9); CHECK(order01 <= 1.1);
  CHECK(order12 >= 0.9); CHECK(order12 <= 1.1);
}

TEST_CASE("weight stays finite at extreme kernel arguments") {
  const double x = std::sqrt(2e6), s = std::sqrt(2e6), t = 1.0;  // xs/2t = 1e6
  const double w = weight(0.25, x, s, t);
  CHECK(std::isfinite(w));
  CHECK(w > 0.0);
}

TEST_CASE("axis weights multiply into the product weight") {
  KernelWeight kw(GammaVec({0.25, -0.1}, true));
  const std::array<double, 2> x{1.0, 0.4}, s{0.7, 1.1};
  const double p = kw.product(x, s, 0.8);
  CHECK(p == doctest::Approx(kw.axis_weight(0, 1.0, 0.7, 0.8) *
                             kw.axis_weight(1, 0.4, 1.1, 0.8)).epsilon(1e-15));
  CHECK_THROWS_AS(KernelWeight(GammaVec({0.25})), std::invalid_argument);
}

TEST_CASE("gaussian-damped Bessel product integral matches its closed form") {
  CHECK(std::abs(weber_sonine_residual(0.25, 1.0, 1.0, 1.0, kSpec)) <= 1e-8);
  CHECK(std::abs(weber_sonine_residual(-0.25, 0.5, 2.0, 0.5, kSpec)) <= 1e-8);
  // both sides vanish together as s -> 0 for positive order
  CHECK(std::abs(weber_sonine_residual(0.25, 1.0, 1e-3, 1.0, kSpec)) <= 1e-8);
}

TEST_CASE("heat average matches Gaussian closed forms") {
  const ScalarField f = make_gauss_poly_1d({1.0}, 1.0);
  const std::array<double, 1> pt{0.5};
  CHECK(heat_average(f, pt, 1.0, kSpec) ==
        doctest::Approx(gauss_heat(1.0, 0.5, 1.0)).epsilon(1e-10));

  // second moment grows linearly in time
  const ScalarField sq = make_gauss_poly_1d({0.0, 1.0}, 0.0);
  const std::array<double, 1> p2{0.9};
  CHECK(heat_average(sq, p2, 0.7, kSpec) ==
        doctest::Approx(0.81 + 2.0 * 0.7).epsilon(1e-10));

  const ScalarField f2 = make_product({make_gauss_poly_1d({1.0}, 1.0),
                                       make_gauss_poly_1d({1.0}, 0.5)});
  const std::array<double, 2> q{0.5, 1.2};
  CHECK(heat_average(f2, q, 0.6, kSpec) ==
        doctest::Approx(gauss_heat(1.0, 0.5, 0.6) * gauss_heat(0.5, 1.2, 0.6))
            .epsilon(1e-10));
}

TEST_CASE("two-step heat averages compose into one") {
  const ScalarField f = make_gauss_poly_1d({1.0}, 1.0);
  const std::array<double, 1> pt{0.5};
  CHECK(std::abs(semigroup_residual(f, pt, 1.0, 0.4, kSpec)) <= 1e-8);

  const ScalarField one = make_constant(1, 1.0);
  CHECK(std::abs(semigroup_residual(one, pt, 1.0, 0.3, kSpec)) <= 1e-10);

  const ScalarField sq = make_gauss_poly_1d({0.0, 1.0}, 0.0);
  CHECK(std::abs(semigroup_residual(sq, pt, 0.8, 0.5, kSpec)) <= 1e-8);

  CHECK(std::abs(semigroup_integrated_residual(f, pt, 1.0, kSpec)) <= 1e-8);
}

TEST_CASE("argument validation") {
  CHECK_THROWS_AS(g0(1.0, 1.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(g0(-1.0, 1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(weight(0.5, 1.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(weight(-0.5, 1.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(weight(0.25, 1.0, 1.0, -1.0), std::domain_error);
  CHECK_THROWS_AS(weber_sonine_residual(-0.6, 1.0, 1.0, 1.0, kSpec), std::invalid_argument);
  CHECK_THROWS_AS(weber_sonine_residual(0.25, 0.0, 1.0, 1.0, kSpec), std::domain_error);

  const ScalarField f = make_gauss_poly_1d({1.0}, 1.0);
  const std::array<double, 1> pt{0.5};
  const std::array<double, 2> wide{0.5, 0.5};
  CHECK_THROWS_AS(heat_average(f, wide, 1.0, kSpec), std::invalid_argument);
  CHECK_THROWS_AS(heat_average(f, pt, 0.0, kSpec), std::domain_error);
  CHECK_THROWS_AS(semigroup_residual(f, pt, 1.0, 1.0, kSpec), std::invalid_argument);
  CHECK_THROWS_AS(semigroup_residual(f, pt, 1.0, 0.0, kSpec), std::invalid_argument);

  const ScalarField odd = make_from_callable(
      1, false, [](std::span<const double> x) { return x[0]; });
  CHECK_THROWS_AS(heat_average(odd, pt, 1.0, kSpec), std::invalid_argument);
}

TEST_CASE("kernel evaluation is bitwise deterministic") {
  const double a = weight(0.25, 1.1, 0.8, 0.4);
  const double b = weight(0.25, 1.1, 0.8, 0.4);
  CHECK(std::memcmp(&a, &b, sizeof a) == 0);
  const double r1 = weber_sonine_residual(0.25, 1.0, 1.0, 1.0, kSpec);
  const double r2 = weber_sonine_residual(0.25, 1.0, 1.0, 1.0, kSpec);
  CHECK(std::memcmp(&r1, &r2, sizeof r1) == 0);
}
