#include "polycal/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace polycal {

namespace {

void check_time(double t) {
  if (!(t > 0.0)) throw std::domain_error("kernel: t must be > 0");
}

void check_half_line(double x, double s) {
  if (!(x >= 0.0) || !(s >= 0.0))
    throw std::domain_error("kernel: spatial arguments must be >= 0");
}

}  // namespace

double g0(double x, double s, double t) {
  check_time(t);
  check_half_line(x, s);
  const double q = 4.0 * t;
  const double front = 1.0 / (2.0 * std::sqrt(std::acos(-1.0) * t));
  return front * (std::exp(-(s - x) * (s - x) / q) + std::exp(-(s + x) * (s + x) / q));
}

double weight(double gamma, double x, double s, double t) {
  if (!(gamma > -0.5) || !(gamma < 0.5))
    throw std::invalid_argument("kernel weight: gamma must lie in (-1/2, 1/2)");
  check_time(t);
  check_half_line(x, s);
  const double front =
      std::pow(s, 2.0 * gamma + 1.0) / (2.0 * t * std::pow(4.0 * t, gamma) * gamma_fn(gamma + 1.0));
  const double gauss = std::exp(-(x - s) * (x - s) / (4.0 * t));
  return front * gauss * bessel_clifford_i_scaled(gamma, x * s / (2.0 * t));
}

KernelWeight::KernelWeight(GammaVec g) : gamma(std::move(g)) {
  if (!gamma.strict)
    throw std::invalid_argument("kernel weight: strict singularity regime required");
}

double KernelWeight::axis_weight(int j, double x, double s, double t) const {
  if (j < 0 || j >= gamma.dim())
    throw std::invalid_argument("kernel weight: axis out of range");
  return weight(gamma.gamma[j], x, s, t);
}

double KernelWeight::product(std::span<const double> x, std::span<const double> s,
                             double t) const {
  if (static_cast<int>(x.size()) != gamma.dim() || x.size() != s.size())
    throw std::invalid_argument("kernel weight: dimension mismatch");
  double w = 1.0;
  for (int j = 0; j < gamma.dim(); ++j) w *= weight(gamma.gamma[j], x[j], s[j], t);
  return w;
}

double weber_sonine_residual(double nu, double x, double s, double t,
                             const QuadSpec& spec) {
  if (!(nu > -0.5)) throw std::invalid_argument("weber-sonine: nu must be > -1/2");
  if (!(x > 0.0) || !(s > 0.0)) throw std::domain_error("weber-sonine: x, s must be > 0");
  check_time(t);
  spec.validate();

  // Clifford form of the integrand: every factor stays finite near l = 0
  // even for nu < 0, where the raw J_nu factors individually diverge.
  const double cliff_front = std::pow(s * x / 4.0, nu) / std::pow(gamma_fn(nu + 1.0), 2);
  auto integrand = [&](double l) {
    return cliff_front * std::pow(l, 2.0 * nu + 1.0) * std::exp(-t * l * l) *
           bessel_clifford_j(nu, s * l) * bessel_clifford_j(nu, x * l);
  };

  const double l_max = std::sqrt(std::log(1e14) / t) + 2.0;
  const double period = 2.0 * std::acos(-1.0) / std::min(x, s);
  const double panel = std::min(period / 10.0, l_max);

  // leading double-exponential panel absorbs the l^{2nu+1} endpoint factor
  double lhs = integrate_finite(integrand, 0.0, panel, 2.0 * nu + 1.0, 0.0, spec);

  if (panel < l_max) {
    const auto& [nodes, weights] = gauss_legendre(12);
    auto composite = [&](int m) {
      const double h = (l_max - panel) / m;
      double acc = 0.0;
      for (int i = 0; i < m; ++i) {
        const double mid = panel + (i + 0.5) * h;
        double part = 0.0;
        for (std::size_t q = 0; q < nodes.size(); ++q)
          part += weights[q] * integrand(mid + 0.5 * h * nodes[q]);
        acc += 0.5 * h * part;
      }
      return acc;
    };
    int m = std::max(1, static_cast<int>(std::ceil((l_max - panel) / panel)));
    double tail = composite(m);
    double change = std::abs(tail);
    bool converged = false;
    for (int level = 0; level < spec.max_level; ++level) {
      m *= 2;
      const double refined = composite(m);
      change = std::abs(refined - tail);
      tail = refined;
      if (change <= spec.rel_tol * std::max(std::abs(lhs + tail), 1e-300)) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw QuadratureError("weber-sonine: oscillatory tail did not converge", lhs + tail,
                            change);
    lhs += tail;
  }

  const double rhs = std::exp(-(x - s) * (x - s) / (4.0 * t)) *
                     bessel_i_scaled(nu, x * s / (2.0 * t)) / (2.0 * t);
  return lhs - rhs;
}

double heat_average(const ScalarField& g, std::span<const double> x, double t,
                    const QuadSpec& spec) {
  check_time(t);
  if (!g) throw std::invalid_argument("heat average: empty field");
  if (static_cast<int>(x.size()) != g.dim())
    throw std::invalid_argument("heat average: point dimension mismatch");
  if (!g.even())
    throw std::invalid_argument("heat average: field must be even (reflected average)");
  for (double c : x)
    if (!(c >= 0.0)) throw std::domain_error("heat average: coordinates must be >= 0");

  const int n = g.dim();
  std::vector<double> pt(n, 0.0);
  std::function<double(int)> over_axis = [&](int axis) -> double {
    if (axis == n) return g(pt);
    auto f = [&](double s) {
      pt[axis] = s;
      return g0(x[axis], s, t) * over_axis(axis + 1);
    };
    return integrate_gaussian_tail(f, t, x[axis], spec);
  };
  return over_axis(0);
}

namespace {

double iterated_average(const ScalarField& g, std::span<const double> x, double t,
                        double tau, const QuadSpec& spec) {
  const ScalarField inner = make_from_callable(
      g.dim(), true,
      [g, tau, spec](std::span<const double> y) { return heat_average(g, y, tau, spec); });
  return heat_average(inner, x, t - tau, spec);
}

}  // namespace

double semigroup_residual(const ScalarField& g, std::span<const double> x, double t,
                          double tau, const QuadSpec& spec) {
  check_time(t);
  if (!(tau > 0.0) || !(tau < t))
    throw std::invalid_argument("semigroup residual: tau must lie in (0, t)");
  return iterated_average(g, x, t, tau, spec) - heat_average(g, x, t, spec);
}

double semigroup_integrated_residual(const ScalarField& g, std::span<const double> x,
                                     double t, const QuadSpec& spec) {
  check_time(t);
  const auto& [nodes, weights] = gauss_legendre(8);
  double acc = 0.0;
  for (std::size_t q = 0; q < nodes.size(); ++q) {
    const double tau = 0.5 * t * (nodes[q] + 1.0);
    acc += weights[q] * iterated_average(g, x, t, tau, spec);
  }
  return 0.5 * t * acc - t * heat_average(g, x, t, spec);
}

}  // namespace polycal
