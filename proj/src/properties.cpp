#include "polycal/properties.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iterator>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <thread>

#include "polycal/bessel_diffop.hpp"
#include "polycal/ek_ops.hpp"
#include "polycal/fd_oracle.hpp"
#include "polycal/kernel.hpp"
#include "polycal/numerics.hpp"
#include "polycal/scalar_field.hpp"
#include "polycal/solver.hpp"

namespace polycal {
namespace {

struct Answer {
  double measured = 0.0;
  std::string detail;
};

using PropertyFn = Answer (*)(std::mt19937_64*);

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Multiplies a probe coordinate by a factor in [0.97, 1.03]; identity when
// no generator is supplied. Every property draws from its own generator in
// a fixed loop order, so jittered grids are reproducible per seed.
double jit(std::mt19937_64* rng, double x) {
  if (rng == nullptr) return x;
  const double u = static_cast<double>((*rng)() >> 11) * 0x1p-53;
  return x * (0.97 + 0.06 * u);
}

EKParams params1(double a, double e, double l) { return EKParams({a}, {e}, {l}); }

ScalarField gaussian(double a) { return make_gauss_poly_1d({1.0}, a); }

ScalarField monomial(int beta) {
  std::vector<double> coeffs(static_cast<std::size_t>(beta) + 1, 0.0);
  coeffs.back() = 1.0;
  return make_gauss_poly_1d(coeffs, 0.0);
}

const QuadSpec kSpec = QuadSpec::finite_rule(1e-10);

// --- fractional transform identities ---------------------------------------

Answer p_eigenrelation(std::mt19937_64* rng) {
  // On x^{2 beta} the forward transform multiplies by
  // Gamma(eta+beta+1) / Gamma(eta+alpha+beta+1).
  Answer a;
  for (double alpha : {0.25, 0.5, 0.75})
    for (double eta : {-0.5, 0.0, 1.0})
      for (int beta : {0, 1, 2}) {
        const ScalarField f = monomial(beta);
        const double factor = gamma_fn(eta + beta + 1.0) / gamma_fn(eta + alpha + beta + 1.0);
        for (double x0 : {0.5, 1.0, 2.0}) {
          const double x = jit(rng, x0);
          const std::array<double, 1> pt{x};
          const double got = ek_apply(params1(alpha, eta, 0.0), f, pt, kSpec);
          const double want = factor * std::pow(x, 2 * beta);
          a.measured = std::max(a.measured, std::abs(got - want) / std::abs(want));
        }
      }
  a.detail = "27 parameter combos x 3 points";
  return a;
}

Answer p_roundtrip_plain(std::mt19937_64* rng) {
  struct Entry {
    EKParams params;
    ScalarField f;
  };
  const Entry entries[] = {
      {params1(0.75, -0.5, 0.0), gaussian(1.0)},
      {params1(0.4, 0.25, 0.0), make_gauss_poly_1d({1.0, -0.5}, 0.8)},
  };
  Answer a;
  for (const Entry& entry : entries) {
    const ScalarField forward = ek_transform_field(entry.params, entry.f, kSpec);
    for (double x0 : {0.3, 0.7, 1.1, 1.8, 2.2}) {
      const double x = jit(rng, x0);
      const std::array<double, 1> pt{x};
      const double back = ek_inverse_plain(entry.params, forward, pt, kSpec);
      a.measured = std::max(a.measured, std::abs(back - entry.f(x)) / std::abs(entry.f(x)));
    }
  }
  a.detail = "2 fields x 5 points";
  return a;
}

Answer p_roundtrip_generalized(std::mt19937_64* rng) {
  struct Entry {
    EKParams params;
    ScalarField f;
  };
  const Entry entries[] = {
      {params1(0.6, -0.5, 0.5), gaussian(1.0)},
      {params1(0.5, 0.0, 0.3), make_gauss_poly_1d({1.0, 0.25}, 0.6)},
  };
  Answer a;
  for (const Entry& entry : entries) {
    const ScalarField forward = ek_transform_field(entry.params, entry.f, kSpec);
    for (double x0 : {0.4, 0.7, 1.0, 1.5, 2.0}) {
      const double x = jit(rng, x0);
      const std::array<double, 1> pt{x};
      const double back = ek_inverse_generalized(entry.params, forward, pt, kSpec);
      a.measured = std::max(a.measured, std::abs(back - entry.f(x)) / std::abs(entry.f(x)));
    }
  }
  a.detail = "2 fields x 5 points";
  return a;
}

std::vector<ScalarField> catalog_1d() {
  std::vector<ScalarField> fields;
  fields.push_back(gaussian(1.0));
  fields.push_back(make_gauss_poly_1d({1.0, 0.3}, 0.7));
  fields.push_back(make_gauss_poly_1d({2.0, -0.4}, 1.2));
  return fields;
}

Answer p_intertwine_one_axis(std::mt19937_64* rng) {
  Answer a;
  for (const ScalarField& f : catalog_1d())
    for (double x0 : {0.6, 1.0, 1.5}) {
      const std::array<double, 1> pt{jit(rng, x0)};
      const double r = intertwine_residual(params1(0.6, -0.5, 0.3), f, 0, 1, pt, kSpec);
      a.measured = std::max(a.measured, std::abs(r));
    }
  a.detail = "alpha 0.6, lambda 0.3, 3 fields x 3 points";
  return a;
}

Answer p_intertwine_power2(std::mt19937_64* rng) {
  Answer a;
  for (const ScalarField& f : catalog_1d())
    for (double x0 : {0.6, 1.0, 1.5}) {
      const std::array<double, 1> pt{jit(rng, x0)};
      const double r = intertwine_residual(params1(0.6, -0.5, 0.0), f, 0, 2, pt, kSpec);
      a.measured = std::max(a.measured, std::abs(r));
    }
  a.detail = "operator power 2, 3 fields x 3 points";
  return a;
}

Answer p_intertwine_sum_q1(std::mt19937_64* rng) {
  const EKParams params({0.6, 0.4}, {-0.5, -0.5}, {0.0, 0.0});
  std::vector<ScalarField> fields;
  fields.push_back(make_product({gaussian(1.0), gaussian(1.0)}));
  fields.push_back(make_product({gaussian(1.0), make_gauss_poly_1d({1.0, 0.3}, 0.7)}));
  fields.push_back(make_product({make_gauss_poly_1d({1.0, -0.5}, 0.8), gaussian(0.6)}));
  const double grid[3][2] = {{1.0, 0.75}, {0.6, 1.2}, {1.4, 0.5}};
  Answer a;
  for (const ScalarField& f : fields)
    for (const auto& p : grid) {
      const std::array<double, 2> pt{jit(rng, p[0]), jit(rng, p[1])};
      a.measured = std::max(a.measured, std::abs(intertwine_sum_residual(params, f, 1, pt, kSpec)));
    }
  a.detail = "two axes, 3 fields x 3 points";
  return a;
}

Answer p_intertwine_sum_q2(std::mt19937_64* rng) {
  Answer a;
  for (const ScalarField& f : catalog_1d())
    for (double x0 : {0.7, 1.0, 1.4}) {
      const std::array<double, 1> pt{jit(rng, x0)};
      const double r = intertwine_sum_residual(params1(0.6, -0.5, 0.4), f, 2, pt, kSpec);
      a.measured = std::max(a.measured, std::abs(r));
    }
  a.detail = "q = 2, lambda 0.4, 3 fields x 3 points";
  return a;
}

Answer p_intertwine_inverse(std::mt19937_64* rng) {
  std::vector<ScalarField> fields;
  fields.push_back(gaussian(1.0));
  fields.push_back(monomial(2));
  fields.push_back(make_gauss_poly_1d({1.0, -0.5}, 0.8));
  Answer a;
  for (const ScalarField& f : fields)
    for (double x0 : {0.6, 1.0, 1.5}) {
      const std::array<double, 1> pt{jit(rng, x0)};
      const double r = inverse_intertwine_residual(params1(0.75, -0.5, 0.0), f, 1, pt, kSpec);
      a.measured = std::max(a.measured, std::abs(r));
    }
  a.detail = "inverse side, p = 1, 3 fields x 3 points";
  return a;
}

// --- kernel identities ------------------------------------------------------

Answer p_kernel_mass(std::mt19937_64*) {
  const QuadSpec mass_spec = QuadSpec::tail_rule(1e-12, 12, 1e-13);
  Answer a;
  for (double g : {-0.4, 0.0, 0.4})
    for (double x : {0.0, 0.5, 1.0, 2.0, 4.0})
      for (double t : {0.1, 1.0, 4.0}) {
        const double mass = integrate_gaussian_tail(
            [g, x, t](double s) { return weight(g, x, s, t); }, t, x, mass_spec,
            2.0 * g + 1.0);
        a.measured = std::max(a.measured, std::abs(mass - 1.0));
      }
  a.detail = "45 (gamma, x, t) combos";
  return a;
}

Answer p_weber_sonine(std::mt19937_64* rng) {
  const double grid[3][3] = {{1.0, 1.0, 1.0}, {0.5, 2.0, 0.5}, {2.0, 0.7, 0.25}};
  Answer a;
  for (double nu : {-0.25, 0.25, 0.45})
    for (const auto& p : grid) {
      const double r =
          weber_sonine_residual(nu, jit(rng, p[0]), jit(rng, p[1]), p[2], kSpec);
      a.measured = std::max(a.measured, std::abs(r));
    }
  a.detail = "9 (nu, x, s, t) combos";
  return a;
}

std::vector<ScalarField> average_catalog() {
  std::vector<ScalarField> fields;
  fields.push_back(gaussian(1.0));
  fields.push_back(make_gauss_poly_1d({1.0, -0.5}, 0.8));
  fields.push_back(make_gauss_poly_1d({0.0, 0.0, 1.0}, 1.0));
  return fields;
}

Answer p_semigroup(std::mt19937_64* rng) {
  Answer a;
  const double t = 0.8;
  for (const ScalarField& f : average_catalog()) {
    const std::array<double, 1> pt{jit(rng, 0.9)};
    for (double frac : {0.2, 0.5, 0.8})
      a.measured =
          std::max(a.measured, std::abs(semigroup_residual(f, pt, t, frac * t, kSpec)));
  }
  a.detail = "3 fields x 3 split times";
  return a;
}

Answer p_semigroup_integrated(std::mt19937_64* rng) {
  Answer a;
  for (const ScalarField& f : average_catalog()) {
    const std::array<double, 1> pt{jit(rng, 0.9)};
    a.measured =
        std::max(a.measured, std::abs(semigroup_integrated_residual(f, pt, 0.8, kSpec)));
  }
  a.detail = "3 fields, integrated split";
  return a;
}

Answer p_classical_limit(std::mt19937_64*) {
  // s starts off the axis: the s^{2 gamma + 1} factor vanishes at s = 0 for
  // every gamma > -1/2, so the limit cannot hold on that edge point.
  Answer a;
  for (double x = 0.0; x <= 3.0; x += 0.3)
    for (double s = 0.3; s <= 3.0; s += 0.3)
      a.measured = std::max(a.measured, std::abs(weight(-0.499, x, s, 1.0) - g0(x, s, 1.0)));
  a.detail = "gamma -0.499 against the reflected kernel, t = 1";
  return a;
}

// --- closed-form solution catalog -------------------------------------------

Answer p_exact_catalog(std::mt19937_64* rng) {
  Answer a;
  const auto unit_source = [](std::span<const double>, double) { return 1.0; };
  const auto quad_source = [](std::span<const double> x, double) { return x[0] * x[0]; };
  for (double g : {-0.4, 0.25}) {
    const double c = 4.0 * g + 4.0;
    struct Case {
      SolutionEvaluator u;
      std::function<double(double, double)> exact;
    };
    std::vector<Case> cases;
    cases.push_back({solve_homogeneous(ProblemSpec(1, 1, GammaVec({g}, true), {make_constant(1, 1.0)}), kSpec),
                     [](double, double) { return 1.0; }});
    cases.push_back({solve_homogeneous(ProblemSpec(1, 1, GammaVec({g}, true), {monomial(1)}), kSpec),
                     [c](double x, double t) { return x * x + c * t; }});
    cases.push_back({solve_homogeneous(ProblemSpec(1, 2, GammaVec({g}, true),
                                                   {make_constant(1, 0.0), make_constant(1, 1.0)}),
                                       kSpec),
                     [](double, double t) { return t; }});
    cases.push_back({solve_inhomogeneous(ProblemSpec(1, 1, GammaVec({g}, true),
                                                     {make_constant(1, 0.0)}, unit_source),
                                         kSpec),
                     [](double, double t) { return t; }});
    cases.push_back({solve_inhomogeneous(ProblemSpec(1, 2, GammaVec({g}, true),
                                                     {make_constant(1, 0.0), make_constant(1, 0.0)},
                                                     unit_source),
                                         kSpec),
                     [](double, double t) { return 0.5 * t * t; }});
    cases.push_back({solve_inhomogeneous(ProblemSpec(1, 1, GammaVec({g}, true),
                                                     {make_constant(1, 0.0)}, quad_source),
                                         kSpec),
                     [c](double x, double t) { return x * x * t + 0.5 * c * t * t; }});
    for (const Case& cs : cases)
      for (double x0 : {0.0, 0.75, 1.5, 3.0}) {
        const double x = x0 > 0.0 ? jit(rng, x0) : 0.0;
        const std::array<double, 1> pt{x};
        for (double t : {0.01, 0.7, 2.0})
          a.measured =
              std::max(a.measured, std::abs(cs.u.value(pt, t) - cs.exact(x, t)));
      }
  }
  a.detail = "6 closed forms x 2 gammas x 12 grid points";
  return a;
}

// --- independent residual checks --------------------------------------------

// Shared verification reports: built once per process, read by several
// properties. Magic statics keep concurrent construction safe.
const ResidualReport& residual_m1() {
  static const ResidualReport report = [] {
    ProblemSpec problem(1, 1, GammaVec({0.25}, true), {gaussian(1.0)});
    const SolutionEvaluator u = solve_homogeneous(std::move(problem), QuadSpec::finite_rule(1e-9));
    ProbeSpec probes;
    probes.points = {{0.4}, {0.9}, {1.6}, {2.4}};
    probes.times = {0.3, 0.8, 1.5};
    return verify(u, probes);
  }();
  return report;
}

const ResidualReport& residual_m2() {
  static const ResidualReport report = [] {
    // The gaussian pair fails the sufficient axis-flatness conditions for
    // m = 2, but the closed form still solves the equation; skip the guard
    // and let the residual speak.
    ProblemSpec problem(1, 2, GammaVec({0.25}, true), {gaussian(1.0), gaussian(0.5)});
    const SolutionEvaluator u = solve_homogeneous(std::move(problem), QuadSpec::finite_rule(1e-9),
                                                  /*allow_invalid=*/true);
    ProbeSpec probes;
    probes.points = {{0.4}, {0.9}, {1.6}, {2.4}};
    probes.times = {0.3, 0.8, 1.5};
    return verify(u, probes);
  }();
  return report;
}

Answer p_residual_m1(std::mt19937_64*) {
  const ResidualReport& r = residual_m1();
  return {r.max_pde, "rms " + num(r.rms_pde) + ", max initial " + num(r.max_initial)};
}

Answer p_residual_m2(std::mt19937_64*) {
  const ResidualReport& r = residual_m2();
  return {r.max_pde, "rms " + num(r.rms_pde) + ", max initial " + num(r.max_initial)};
}

Answer p_initial_order(std::mt19937_64* rng) {
  // First-order attainment in t for smooth data: |u(x, t) - phi_0(x)| ~ t.
  const ScalarField phi = gaussian(1.0);
  const SolutionEvaluator u =
      solve_homogeneous(ProblemSpec(1, 1, GammaVec({0.25}, true), {phi}), kSpec);
  const std::array<double, 1> pt{jit(rng, 0.8)};
  const double d1 = std::abs(u.value(pt, 1e-2) - phi(pt[0]));
  const double d2 = std::abs(u.value(pt, 1e-3) - phi(pt[0]));
  const double order = std::log10(d1 / d2);
  return {std::abs(order - 1.0), "empirical order " + num(order)};
}

Answer p_boundary(std::mt19937_64*) {
  const double worst = std::max(residual_m1().max_boundary, residual_m2().max_boundary);
  return {worst, "odd derivative at the axis, m = 1 and m = 2"};
}

// --- transmutation route ------------------------------------------------------

// Natural-right, clamped-left cubic spline on a uniform grid. The clamped
// left end encodes evenness (zero slope at the axis).
struct CubicTable {
  double x0 = 0.0;
  double h = 0.0;
  std::vector<double> val;
  std::vector<double> mom;

  double operator()(double x) const {
    const std::size_t n = val.size() - 1;
    double s = (x - x0) / h;
    s = std::clamp(s, 0.0, static_cast<double>(n) - 1e-12);
    const std::size_t i = static_cast<std::size_t>(s);
    const double xl = x0 + static_cast<double>(i) * h;
    const double a = xl + h - x;
    const double b = x - xl;
    return mom[i] * a * a * a / (6.0 * h) + mom[i + 1] * b * b * b / (6.0 * h) +
           (val[i] / h - mom[i] * h / 6.0) * a + (val[i + 1] / h - mom[i + 1] * h / 6.0) * b;
  }
};

CubicTable make_table(double x0, double h, std::vector<double> val) {
  const std::size_t count = val.size();
  std::vector<double> sub(count, 0.0), diag(count, 0.0), upper(count, 0.0), rhs(count, 0.0);
  diag[0] = 2.0;
  upper[0] = 1.0;
  rhs[0] = 6.0 / h * ((val[1] - val[0]) / h);
  for (std::size_t i = 1; i + 1 < count; ++i) {
    sub[i] = 1.0;
    diag[i] = 4.0;
    upper[i] = 1.0;
    rhs[i] = 6.0 * (val[i + 1] - 2.0 * val[i] + val[i - 1]) / (h * h);
  }
  diag[count - 1] = 1.0;
  for (std::size_t i = 1; i < count; ++i) {
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  std::vector<double> mom(count, 0.0);
  mom[count - 1] = rhs[count - 1] / diag[count - 1];
  for (std::size_t i = count - 1; i-- > 0;)
    mom[i] = (rhs[i] - upper[i] * mom[i + 1]) / diag[i];
  return {x0, h, std::move(val), std::move(mom)};
}

Answer p_transmutation(std::mt19937_64* rng) {
  // Route A: solve directly. Route B: lower the data with the inverse
  // transform, run the classical Gaussian average, lift with the forward
  // transform. The two must agree wherever both are defined.
  const double g = 0.25;
  const double t = 0.25;
  const EKParams params({g + 0.5}, {-0.5}, {0.0});
  const ScalarField phi = gaussian(1.0);
  const SolutionEvaluator direct =
      solve_homogeneous(ProblemSpec(1, 1, GammaVec({g}, true), {phi}), kSpec);

  // Lowered data decays only algebraically, but the Gaussian average at
  // t = 0.25 is blind past s ~ 13; tabulate on [0, 14] and spline.
  const QuadSpec tab_spec = QuadSpec::finite_rule(1e-10);
  const double h = 0.01;
  const double x_max = 14.0;
  const std::size_t count = static_cast<std::size_t>(x_max / h) + 1;
  std::vector<double> val(count, 0.0);
  for (std::size_t i = 1; i < count; ++i) {
    const std::array<double, 1> pt{static_cast<double>(i) * h};
    val[i] = ek_inverse_plain(params, phi, pt, tab_spec);
  }
  // the inverse needs x > 0; fill the axis by even quadratic extrapolation
  val[0] = (4.0 * val[1] - val[2]) / 3.0;
  const CubicTable table = make_table(0.0, h, std::move(val));
  const ScalarField lowered =
      make_from_callable(1, true, [table, x_max](std::span<const double> p) {
        const double r = std::abs(p[0]);
        return r >= x_max ? 0.0 : table(r);
      });
  const ScalarField classical =
      make_from_callable(1, true, [lowered, t](std::span<const double> p) {
        return heat_average(lowered, p, t, QuadSpec::finite_rule(1e-9));
      });

  Answer a;
  for (int i = 1; i <= 10; ++i) {
    const std::array<double, 1> pt{jit(rng, 0.2 * i)};
    const double lifted = ek_apply(params, classical, pt, QuadSpec::finite_rule(1e-8));
    a.measured = std::max(a.measured, std::abs(lifted - direct.value(pt, t)));
  }
  a.detail = "lower, average, lift against the direct solver, 10 points";
  return a;
}

// --- finite-difference cross-validation ---------------------------------------

Answer p_oracle_gap_m1(std::mt19937_64*) {
  ProblemSpec problem(1, 1, GammaVec({0.25}, true), {gaussian(1.0)});
  const Grid1D grid(10.0, 2048, 1e-4, 0.5);
  const FDSolution fd = fd_solve(problem, grid);
  const SolutionEvaluator u = solve_homogeneous(std::move(problem), QuadSpec::finite_rule(1e-9));
  Answer a;
  for (std::size_t i = 0; i < fd.x.size(); i += 64) {
    if (fd.x[i] > 5.0) break;
    const std::array<double, 1> pt{fd.x[i]};
    a.measured = std::max(a.measured, std::abs(fd.final_frame[i] - u.value(pt, grid.t_final)));
  }
  a.detail = "2048 nodes, dt 1e-4, horizon 0.5";
  return a;
}

Answer p_oracle_gap_m2(std::mt19937_64*) {
  ProblemSpec problem(1, 2, GammaVec({0.25}, true), {gaussian(1.0), gaussian(0.5)});
  const Grid1D grid(10.0, 2048, 1e-4, 0.5);
  const FDSolution fd = fd_solve(problem, grid);
  const SolutionEvaluator u = solve_homogeneous(std::move(problem), QuadSpec::finite_rule(1e-9),
                                                /*allow_invalid=*/true);
  Answer a;
  for (std::size_t i = 0; i < fd.x.size(); i += 64) {
    if (fd.x[i] > 5.0) break;
    const std::array<double, 1> pt{fd.x[i]};
    a.measured = std::max(a.measured, std::abs(fd.final_frame[i] - u.value(pt, grid.t_final)));
  }
  a.detail = "second-order cascade on the same grid";
  return a;
}

Answer p_oracle_order_time(std::mt19937_64*) {
  ProblemSpec problem(1, 1, GammaVec({0.25}, true), {gaussian(1.0)});
  const std::vector<Grid1D> grids{Grid1D(8.0, 1024, 0.05, 0.5), Grid1D(8.0, 1024, 0.025, 0.5),
                                  Grid1D(8.0, 1024, 0.0125, 0.5)};
  const ConvergenceStudy study =
      convergence_study(problem, grids, QuadSpec::finite_rule(1e-9));
  return {std::abs(study.observed_order - 2.0), "time step order " + num(study.observed_order)};
}

Answer p_oracle_order_space(std::mt19937_64*) {
  ProblemSpec problem(1, 1, GammaVec({0.25}, true), {gaussian(1.0)});
  const std::vector<Grid1D> grids{Grid1D(8.0, 128, 1e-4, 0.5), Grid1D(8.0, 256, 1e-4, 0.5),
                                  Grid1D(8.0, 512, 1e-4, 0.5)};
  const ConvergenceStudy study =
      convergence_study(problem, grids, QuadSpec::finite_rule(1e-9));
  return {std::abs(study.observed_order - 2.0), "mesh width order " + num(study.observed_order)};
}

// --- registry ----------------------------------------------------------------

struct Row {
  const char* name;
  double tolerance;
  PropertyFn fn;
};

constexpr Row kRows[] = {
    {"ek.eigenrelation", 1e-9, p_eigenrelation},
    {"ek.roundtrip.plain", 1e-8, p_roundtrip_plain},
    {"ek.roundtrip.generalized", 1e-7, p_roundtrip_generalized},
    {"intertwine.one_axis", 1e-6, p_intertwine_one_axis},
    {"intertwine.one_axis.power2", 1e-5, p_intertwine_power2},
    {"intertwine.sum.q1", 1e-5, p_intertwine_sum_q1},
    {"intertwine.sum.q2", 1e-5, p_intertwine_sum_q2},
    {"intertwine.inverse", 1e-5, p_intertwine_inverse},
    {"kernel.mass", 1e-10, p_kernel_mass},
    {"kernel.weber_sonine", 1e-8, p_weber_sonine},
    {"kernel.semigroup", 1e-8, p_semigroup},
    {"kernel.semigroup.integrated", 1e-8, p_semigroup_integrated},
    {"kernel.classical_limit", 2e-2, p_classical_limit},
    {"solution.exact_catalog", 1e-8, p_exact_catalog},
    {"solution.residual.m1", 1e-4, p_residual_m1},
    {"solution.residual.m2", 1e-4, p_residual_m2},
    {"solution.initial_order", 0.1, p_initial_order},
    {"solution.boundary", 1e-7, p_boundary},
    {"solution.transmutation", 1e-6, p_transmutation},
    {"oracle.gap.m1", 1e-3, p_oracle_gap_m1},
    {"oracle.gap.m2", 3e-3, p_oracle_gap_m2},
    {"oracle.order.time", 0.2, p_oracle_order_time},
    {"oracle.order.space", 0.2, p_oracle_order_space},
};

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

bool glob_match(const std::string& pattern, const std::string& name) {
  std::size_t p = 0, n = 0;
  std::size_t star = std::string::npos, mark = 0;
  while (n < name.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
      ++p;
      ++n;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = n;
    } else if (star != std::string::npos) {
      p = star + 1;
      n = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

std::vector<std::string> property_names() {
  std::vector<std::string> names;
  for (const Row& row : kRows) names.emplace_back(row.name);
  return names;
}

SuiteReport run_property_suite(const SuiteOptions& options) {
  if (options.jobs < 1) throw std::invalid_argument("run_property_suite: jobs must be >= 1");
  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < std::size(kRows); ++i)
    if (glob_match(options.filter, kRows[i].name)) selected.push_back(i);

  SuiteReport report;
  report.results.resize(selected.size());
  const std::uint64_t eval0 = quadrature_evaluations();
  const auto t0 = std::chrono::steady_clock::now();

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= selected.size()) return;
      const Row& row = kRows[selected[slot]];
      PropertyResult& out = report.results[slot];
      out.name = row.name;
      out.tolerance = row.tolerance;
      if (const auto it = options.tolerances.find(out.name); it != options.tolerances.end())
        out.tolerance = it->second;
      Answer answer;
      try {
        std::mt19937_64 rng;
        std::mt19937_64* rng_ptr = nullptr;
        if (options.seed) {
          rng.seed(*options.seed ^ fnv1a(out.name));
          rng_ptr = &rng;
        }
        answer = row.fn(rng_ptr);
      } catch (const std::exception& e) {
        answer.measured = std::numeric_limits<double>::infinity();
        answer.detail = std::string("error: ") + e.what();
      }
      out.measured = answer.measured;
      out.detail = std::move(answer.detail);
      out.pass = out.measured <= out.tolerance;
    }
  };

  const int thread_count = std::min<int>(options.jobs, static_cast<int>(selected.size()));
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(thread_count));
    for (int i = 0; i < thread_count; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  for (const PropertyResult& r : report.results)
    if (!r.pass) ++report.failed;
  report.evaluations = quadrature_evaluations() - eval0;
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace polycal
