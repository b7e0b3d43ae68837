#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

#include "polycal/ek_ops.hpp"
#include "polycal/numerics.hpp"
#include "polycal/scalar_field.hpp"

using namespace polycal;

namespace {

const QuadSpec kSpec = QuadSpec::finite_rule();

ScalarField monomial_1d(int beta) {
  std::vector<double> coeffs(beta + 1, 0.0);
  coeffs[beta] = 1.0;  // x^{2 beta}
  return make_gauss_poly_1d(coeffs, 0.0);
}

ScalarField gaussian_1d() { return make_gauss_poly_1d({1.0}, 1.0); }

EKParams params1(double a, double e, double l) { return EKParams({a}, {e}, {l}); }

}  // namespace

TEST_CASE("forward transform reproduces the power-law eigenvalues") {
  // On x^{2 beta} the transform acts as multiplication by
  // Gamma(eta+beta+1) / Gamma(eta+alpha+beta+1).
  for (double a : {0.25, 0.5, 0.75})
    for (double e : {-0.5, 0.0, 1.0})
      for (int beta : {0, 1, 2}) {
        const ScalarField f = monomial_1d(beta);
        const double factor = gamma_fn(e + beta + 1.0) / gamma_fn(e + a + beta + 1.0);
        for (double x : {0.5, 1.0, 2.0}) {
          const std::array<double, 1> pt{x};
          const double got = ek_apply(params1(a, e, 0.0), f, pt, kSpec);
          const double want = factor * std::pow(x, 2 * beta);
          CAPTURE(a); CAPTURE(e); CAPTURE(beta); CAPTURE(x);
          CHECK(got == doctest::Approx(want).epsilon(1e-9));
        }
      }
}

TEST_CASE("forward transform of the constant is a Gamma ratio, independent of x") {
  const ScalarField one = make_constant(1, 1.0);
  const std::array<double, 1> p1{2.0}, p2{0.5};
  const double v1 = ek_apply(params1(0.6, 0.25, 0.0), one, p1, kSpec);
  const double v2 = ek_apply(params1(0.6, 0.25, 0.0), one, p2, kSpec);
  CHECK(v1 == doctest::Approx(0.958536129511781547127).epsilon(1e-11));  // G(1.25)/G(1.85)
  CHECK(v1 == doctest::Approx(v2).epsilon(1e-11));

  // named example: alpha=0.75, eta=-0.5, beta=1, x=1 -> G(1.5)/G(2.25)
  const std::array<double, 1> unit{1.0};
  const double named = ek_apply(params1(0.75, -0.5, 0.0), monomial_1d(1), unit, kSpec);
  CHECK(named == doctest::Approx(0.7821928539575390381052).epsilon(1e-11));
}

TEST_CASE("two-axis transform of a separable field factors into 1D results") {
  const ScalarField f2 = make_product({monomial_1d(1), monomial_1d(1)});
  const EKParams params({0.5, 0.5}, {-0.5, -0.5}, {0.0, 0.0});
  const std::array<double, 2> pt{1.0, 1.0};
  const double got = ek_apply(params, f2, pt, kSpec);
  CHECK(got == doctest::Approx(0.7853981633974483096157).epsilon(1e-10));  // (G(1.5)/G(2))^2

  const std::array<double, 1> unit{1.0};
  const double one_axis = ek_apply(params1(0.5, -0.5, 0.0), monomial_1d(1), unit, kSpec);
  CHECK(got == doctest::Approx(one_axis * one_axis).epsilon(1e-10));
}

TEST_CASE("generalized forward transform matches the frozen reference") {
  // alpha=0.6, eta=-0.5, lambda=0.5, f=e^{-t^2}, x=1; reference computed from
  // the untransformed integral form in extended precision.
  const std::array<double, 1> pt{1.0};
  const double got = ek_apply(params1(0.6, -0.5, 0.5), gaussian_1d(), pt, kSpec);
  CHECK(got == doctest::Approx(1.167728779304332210629).epsilon(1e-10));
}

TEST_CASE("plain inverse reproduces the reciprocal power-law eigenvalues") {
  const std::array<double, 1> unit{1.0};
  const double named =
      ek_inverse_plain(params1(0.75, -0.5, 0.0), monomial_1d(1), unit, kSpec);
  CHECK(named == doctest::Approx(1.278457090141460839514).epsilon(1e-11));  // G(2.25)/G(1.5)

  for (double a : {0.25, 0.6})
    for (double e : {-0.5, 0.5})
      for (int beta : {1, 2}) {
        const double factor = gamma_fn(e + a + beta + 1.0) / gamma_fn(e + beta + 1.0);
        for (double x : {0.5, 1.5}) {
          const std::array<double, 1> pt{x};
          const double got =
              ek_inverse_plain(params1(a, e, 0.0), monomial_1d(beta), pt, kSpec);
          CAPTURE(a); CAPTURE(e); CAPTURE(beta); CAPTURE(x);
          CHECK(got == doctest::Approx(factor * std::pow(x, 2 * beta)).epsilon(1e-9));
        }
      }

  const ScalarField one = make_constant(1, 1.0);
  const std::array<double, 1> p1{0.8};
  const double flat = ek_inverse_plain(params1(0.3, 0.0, 0.0), one, p1, kSpec);
  CHECK(flat == doctest::Approx(0.8974706963062771884938).epsilon(1e-11));  // G(1.3)
}

TEST_CASE("generalized inverse matches the frozen reference") {
  // Same parameters as the forward anchor; reference validated against the
  // exact power-law form and a full extended-precision round trip.
  const std::array<double, 1> pt{1.0};
  const double got = ek_inverse_generalized(params1(0.6, -0.5, 0.5), gaussian_1d(), pt, kSpec);
  CHECK(got == doctest::Approx(-0.04360565492398097368594).epsilon(1e-9));
}

TEST_CASE("plain round-trip restores the field") {
  const EKParams params = params1(0.75, -0.5, 0.0);
  const ScalarField forward = ek_transform_field(params, gaussian_1d(), kSpec);
  const std::array<double, 1> pt{0.7};
  const double back = ek_inverse_plain(params, forward, pt, kSpec);
  CHECK(back == doctest::Approx(std::exp(-0.49)).epsilon(1e-8));

  // second catalog entry, polynomial times gaussian with eta above the edge
  const EKParams params2 = params1(0.4, 0.25, 0.0);
  const ScalarField f2 = make_gauss_poly_1d({1.0, -0.5}, 0.8);
  const ScalarField fwd2 = ek_transform_field(params2, f2, kSpec);
  const std::array<double, 1> pt2{1.1};
  CHECK(ek_inverse_plain(params2, fwd2, pt2, kSpec) ==
        doctest::Approx(f2(1.1)).epsilon(1e-8));
}

TEST_CASE("generalized round-trip restores the field") {
  const EKParams params = params1(0.6, -0.5, 0.5);
  const ScalarField forward = ek_transform_field(params, gaussian_1d(), kSpec);
  const std::array<double, 1> pt{1.0};
  const double back = ek_inverse_generalized(params, forward, pt, kSpec);
  CHECK(back == doctest::Approx(std::exp(-1.0)).epsilon(1e-7));
}

TEST_CASE("generalized inverse at lambda zero collapses to the plain inverse") {
  const std::array<double, 1> pt{1.3};
  const ScalarField f = monomial_1d(1);
  const double plain = ek_inverse_plain(params1(0.5, 0.0, 0.0), f, pt, kSpec);
  const double general = ek_inverse_generalized(params1(0.5, 0.0, 0.0), f, pt, kSpec);
  CHECK(general == doctest::Approx(plain).epsilon(1e-10));
}

TEST_CASE("inverse of the zero field vanishes") {
  const std::array<double, 1> pt{0.9};
  CHECK(ek_inverse_generalized(params1(0.5, -0.5, 0.7), make_constant(1, 0.0), pt, kSpec) ==
        0.0);
}

TEST_CASE("transform is linear") {
  const ScalarField f = gaussian_1d();
  const ScalarField g = monomial_1d(1);
  const ScalarField combo = make_linear_combination({2.0, -3.0}, {f, g});
  const EKParams params = params1(0.6, 0.0, 0.4);
  const std::array<double, 1> pt{0.8};
  const double lhs = ek_apply(params, combo, pt, kSpec);
  const double rhs =
      2.0 * ek_apply(params, f, pt, kSpec) - 3.0 * ek_apply(params, g, pt, kSpec);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("small lambda continuity") {
  const ScalarField f = gaussian_1d();
  const std::array<double, 1> pt{1.0};
  const double at_zero = ek_apply(params1(0.5, -0.5, 0.0), f, pt, kSpec);
  const double near_zero = ek_apply(params1(0.5, -0.5, 1e-6), f, pt, kSpec);
  CHECK(std::abs(near_zero - at_zero) <= 1e-8);
}

TEST_CASE("one-axis commutation residual vanishes") {
  const std::array<double, 1> pt{1.0};
  const double r1 =
      intertwine_residual(params1(0.6, -0.5, 0.3), gaussian_1d(), 0, 1, pt, kSpec);
  CHECK(std::abs(r1) <= 1e-6);

  const double rz =
      intertwine_residual(params1(0.6, -0.5, 0.3), make_constant(1, 0.0), 0, 1, pt, kSpec);
  CHECK(rz == 0.0);

  const double r2 =
      intertwine_residual(params1(0.6, -0.5, 0.0), gaussian_1d(), 0, 2, pt, kSpec);
  CHECK(std::abs(r2) <= 1e-5);
}

TEST_CASE("summed commutation residual vanishes") {
  const EKParams params({0.6, 0.4}, {-0.5, -0.5}, {0.0, 0.0});
  const ScalarField f2 = make_product({gaussian_1d(), gaussian_1d()});
  const std::array<double, 2> pt{1.0, 0.75};
  CHECK(std::abs(intertwine_sum_residual(params, f2, 1, pt, kSpec)) <= 1e-6);

  const ScalarField c2 = make_constant(2, 3.0);
  CHECK(std::abs(intertwine_sum_residual(params, c2, 1, pt, kSpec)) <= 1e-8);

  const std::array<double, 1> pt1{1.0};
  const double rq2 =
      intertwine_sum_residual(params1(0.6, -0.5, 0.4), gaussian_1d(), 2, pt1, kSpec);
  CHECK(std::abs(rq2) <= 1e-5);
}

TEST_CASE("inverse commutation residual vanishes") {
  const std::array<double, 1> pt{1.0};
  const double r1 =
      inverse_intertwine_residual(params1(0.75, -0.5, 0.0), gaussian_1d(), 1, pt, kSpec);
  CHECK(std::abs(r1) <= 1e-5);

  const double rz = inverse_intertwine_residual(params1(0.75, -0.5, 0.0),
                                                make_constant(1, 0.0), 1, pt, kSpec);
  CHECK(rz == 0.0);

  // polynomial case, both sides exact up to quadrature
  const double rp =
      inverse_intertwine_residual(params1(0.75, -0.5, 0.0), monomial_1d(2), 1, pt, kSpec);
  CHECK(std::abs(rp) <= 1e-8);
}

TEST_CASE("parameter and point validation") {
  CHECK_THROWS_AS(EKParams({}, {}, {}), std::invalid_argument);
  CHECK_THROWS_AS(EKParams({0.5, 0.5, 0.5, 0.5}, {0, 0, 0, 0}, {0, 0, 0, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(EKParams({0.5}, {0.0, 0.0}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(EKParams({0.0}, {0.0}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(EKParams({0.5}, {-0.6}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(EKParams({0.5}, {0.0}, {-1.0}), std::invalid_argument);
  CHECK_THROWS_AS(params1(1.5, 0.0, 0.0).require_invertible(), std::invalid_argument);

  const ScalarField f = gaussian_1d();
  const std::array<double, 1> origin{0.0};
  CHECK_THROWS_AS(ek_apply(params1(0.5, 0.0, 0.0), f, origin, kSpec), std::domain_error);
  const std::array<double, 2> wide{1.0, 1.0};
  CHECK_THROWS_AS(ek_apply(params1(0.5, 0.0, 0.0), f, wide, kSpec), std::invalid_argument);

  const std::array<double, 1> pt{1.0};
  CHECK_THROWS_AS(ek_inverse_plain(params1(0.5, 0.0, 0.5), f, pt, kSpec),
                  std::invalid_argument);
  CHECK_THROWS_AS(ek_inverse_plain(params1(1.2, 0.0, 0.0), f, pt, kSpec),
                  std::invalid_argument);
  CHECK_THROWS_AS(inverse_intertwine_residual(params1(0.5, 0.0, 0.0), f, 1, pt, kSpec),
                  std::invalid_argument);
  CHECK_THROWS_AS(inverse_intertwine_residual(params1(0.5, -0.5, 0.3), f, 1, pt, kSpec),
                  std::invalid_argument);
  CHECK_THROWS_AS(intertwine_residual(params1(0.5, 0.0, 0.0), f, 1, 1, pt, kSpec),
                  std::invalid_argument);
  CHECK_THROWS_AS(intertwine_residual(params1(0.5, 0.0, 0.0), f, 0, 0, pt, kSpec),
                  std::invalid_argument);

  const ScalarField f2 = make_constant(2, 1.0);
  CHECK_THROWS_AS(ek_transform_field(params1(0.5, 0.0, 0.0), f2, kSpec),
                  std::invalid_argument);
}

TEST_CASE("repeated evaluation is bitwise deterministic") {
  const std::array<double, 1> pt{0.9};
  const double a = ek_apply(params1(0.6, -0.5, 0.5), gaussian_1d(), pt, kSpec);
  const double b = ek_apply(params1(0.6, -0.5, 0.5), gaussian_1d(), pt, kSpec);
  CHECK(std::memcmp(&a, &b, sizeof a) == 0);
}
