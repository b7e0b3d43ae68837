#include "polycal/solver.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace polycal {

namespace {

// Weighted spatial average: nested per-axis Gaussian-tail integrals of
// base(s) * prod_j w(gamma_j, x_j, s_j, t); zero_exponent declares the
// s^{2 gamma + 1} axis behavior of the weight.
double weighted_average(const std::function<double(std::span<const double>)>& base,
                        const KernelWeight& kernel, std::span<const double> x, double t,
                        const QuadSpec& spec) {
  const int n = kernel.gamma.dim();
  std::vector<double> pt(n, 0.0);
  std::function<double(int)> over_axis = [&](int axis) -> double {
    if (axis == n) return base(pt);
    auto f = [&](double s) {
      pt[axis] = s;
      return kernel.axis_weight(axis, x[axis], s, t) * over_axis(axis + 1);
    };
    return integrate_gaussian_tail(f, t, x[axis], spec,
                                   2.0 * kernel.gamma.gamma[axis] + 1.0);
  };
  return over_axis(0);
}

std::vector<double> reflected(std::span<const double> x) {
  std::vector<double> r(x.begin(), x.end());
  for (double& c : r) c = std::abs(c);
  return r;
}

}  // namespace

SolutionEvaluator::SolutionEvaluator(ProblemSpec problem, QuadSpec spec, SolveMode mode)
    : problem_(std::move(problem)), kernel_(problem_.gamma), spec_(spec), mode_(mode) {
  if (mode_ != SolveMode::inhomogeneous)
    for (int k = 0; k < problem_.m; ++k) fks_.push_back(assemble_fk(problem_, k));
}

double SolutionEvaluator::homogeneous_part(std::span<const double> x, double t,
                                           const QuadSpec& spec) const {
  double sum = 0.0;
  double t_pow = 1.0;  // t^k / k!
  for (int k = 0; k < problem_.m; ++k) {
    if (k > 0) t_pow *= t / k;
    const ScalarField& fk = fks_[k];
    sum += t_pow * weighted_average([&](std::span<const double> s) { return fk(s); },
                                    kernel_, x, t, spec);
  }
  return sum;
}

double SolutionEvaluator::source_part(std::span<const double> x, double t,
                                      const QuadSpec& spec) const {
  if (!problem_.source || t == 0.0) return 0.0;
  const int m = problem_.m;
  double front = 1.0;  // 1 / (m-1)!
  for (int k = 2; k < m; ++k) front /= k;

  // slice average A(x, tau, sigma) with tau = t - sigma
  auto slice = [&](double sigma) {
    const double tau = t - sigma;
    return weighted_average(
        [&](std::span<const double> s) { return problem_.source(s, tau); }, kernel_, x,
        sigma, spec);
  };
  auto integrand = [&](double sigma) {
    return front * std::pow(sigma, m - 1) * slice(sigma);
  };

  const auto& [nodes, weights] = gauss_legendre(12);
  auto composite = [&](int panels) {
    const double h = t / panels;
    double acc = 0.0;
    for (int i = 0; i < panels; ++i) {
      const double mid = (i + 0.5) * h;
      double part = 0.0;
      for (std::size_t q = 0; q < nodes.size(); ++q)
        part += weights[q] * integrand(mid + 0.5 * h * nodes[q]);
      acc += 0.5 * h * part;
    }
    return acc;
  };

  int panels = 2;
  double value = composite(panels);
  double change = std::abs(value);
  for (int level = 0; level < spec.max_level; ++level) {
    panels *= 2;
    const double refined = composite(panels);
    change = std::abs(refined - value);
    value = refined;
    if (change <= spec.rel_tol * std::max(std::abs(value), 1e-30)) return value;
  }
  throw QuadratureError("source time integral did not converge", value, change);
}

double SolutionEvaluator::value(std::span<const double> x, double t) const {
  return value(x, t, spec_);
}

double SolutionEvaluator::value(std::span<const double> x, double t,
                                const QuadSpec& spec) const {
  if (static_cast<int>(x.size()) != problem_.n)
    throw std::invalid_argument("solution evaluator: point dimension mismatch");
  if (!(t >= 0.0)) throw std::domain_error("solution evaluator: t must be >= 0");
  const std::vector<double> pt = reflected(x);

  if (t == 0.0)
    return mode_ == SolveMode::inhomogeneous ? 0.0 : problem_.phis[0](pt);

  double v = 0.0;
  if (mode_ != SolveMode::inhomogeneous) v += homogeneous_part(pt, t, spec);
  if (mode_ != SolveMode::homogeneous) v += source_part(pt, t, spec);
  return v;
}

namespace {

void require_valid_data(const ProblemSpec& problem, bool allow_invalid) {
  const ValidationReport report = validate_initial_data(problem);
  if (report.pass || allow_invalid) return;
  std::ostringstream msg;
  msg << "initial data fails compatibility: " << report.violations.size() << " violation(s)";
  if (!report.violations.empty()) msg << "; first: " << report.violations.front().what;
  throw std::invalid_argument(msg.str());
}

void require_even_source(const ProblemSpec& problem) {
  if (!problem.source)
    throw std::invalid_argument("source evaluator: problem has no source term");
  if (!problem.source_even)
    throw std::invalid_argument("source evaluator: source must be declared even");
}

}  // namespace

SolutionEvaluator solve_homogeneous(ProblemSpec problem, const QuadSpec& spec,
                                    bool allow_invalid) {
  spec.validate();
  require_valid_data(problem, allow_invalid);
  return SolutionEvaluator(std::move(problem), spec, SolveMode::homogeneous);
}

SolutionEvaluator solve_inhomogeneous(ProblemSpec problem, const QuadSpec& spec) {
  spec.validate();
  require_even_source(problem);
  return SolutionEvaluator(std::move(problem), spec, SolveMode::inhomogeneous);
}

SolutionEvaluator solve_full(ProblemSpec problem, const QuadSpec& spec, bool allow_invalid) {
  spec.validate();
  require_valid_data(problem, allow_invalid);
  if (problem.source) require_even_source(problem);
  return SolutionEvaluator(std::move(problem), spec, SolveMode::combined);
}

namespace {

// 4th-order central stencils on offsets -2..2 (first, second derivative)
// and -3..3 (third, fourth), as raw coefficient tables.
constexpr std::array<double, 5> kC1{1.0, -8.0, 0.0, 8.0, -1.0};        // /(12 h)
constexpr std::array<double, 5> kC2{-1.0, 16.0, -30.0, 16.0, -1.0};    // /(12 h^2)
constexpr std::array<double, 7> kC3{1.0, -8.0, 13.0, 0.0, -13.0, 8.0, -1.0};    // /(8 h^3)
constexpr std::array<double, 7> kC4{-1.0, 12.0, -39.0, 56.0, -39.0, 12.0, -1.0};  // /(6 h^4)

using Sampler = std::function<double(std::span<const double>, double)>;

// Per-axis B stencil: value-sample weights over offsets -2..2.
std::array<double, 5> b_row(double gamma, double x, double h) {
  std::array<double, 5> w{};
  for (int i = 0; i < 5; ++i)
    w[i] = kC2[i] / (12.0 * h * h) + (2.0 * gamma + 1.0) / x * kC1[i] / (12.0 * h);
  return w;
}

// Per-axis B^2 stencil from the expanded term table
//   u'''' + 2(2g+1)/x u''' + (2g+1)(2g-1)/x^2 u'' + (2g+1)(1-2g)/x^3 u'.
std::array<double, 7> b2_row(double gamma, double x, double h) {
  const double a = 2.0 * gamma + 1.0;
  std::array<double, 7> w{};
  for (int i = 0; i < 7; ++i) {
    w[i] = kC4[i] / (6.0 * h * h * h * h) + 2.0 * a / x * kC3[i] / (8.0 * h * h * h);
    if (i >= 1 && i <= 5) {
      w[i] += a * (2.0 * gamma - 1.0) / (x * x) * kC2[i - 1] / (12.0 * h * h);
      w[i] += a * (1.0 - 2.0 * gamma) / (x * x * x) * kC1[i - 1] / (12.0 * h);
    }
  }
  return w;
}

double delta_b_stencil(const Sampler& u, const std::vector<double>& gamma,
                       std::span<const double> x, double t, double h) {
  std::vector<double> pt(x.begin(), x.end());
  double sum = 0.0;
  for (std::size_t j = 0; j < gamma.size(); ++j) {
    const auto row = b_row(gamma[j], x[j], h);
    for (int i = -2; i <= 2; ++i) {
      pt[j] = x[j] + i * h;
      sum += row[i + 2] * u(pt, t);
    }
    pt[j] = x[j];
  }
  return sum;
}

double delta_b2_stencil(const Sampler& u, const std::vector<double>& gamma,
                        std::span<const double> x, double t, double h) {
  const int n = static_cast<int>(gamma.size());
  std::vector<double> pt(x.begin(), x.end());
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    const auto row = b2_row(gamma[j], x[j], h);
    for (int i = -3; i <= 3; ++i) {
      pt[j] = x[j] + i * h;
      sum += row[i + 3] * u(pt, t);
    }
    pt[j] = x[j];
  }
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      const auto rj = b_row(gamma[j], x[j], h);
      const auto rk = b_row(gamma[k], x[k], h);
      for (int a = -2; a <= 2; ++a)
        for (int b = -2; b <= 2; ++b) {
          pt[j] = x[j] + a * h;
          pt[k] = x[k] + b * h;
          sum += 2.0 * rj[a + 2] * rk[b + 2] * u(pt, t);
        }
      pt[j] = x[j];
      pt[k] = x[k];
    }
  return sum;
}

}  // namespace

ResidualReport verify(const SolutionEvaluator& evaluator, const ProbeSpec& probes) {
  const ProblemSpec& problem = evaluator.problem();
  const int n = problem.n;
  const int m = problem.m;
  if (m > 2) throw std::invalid_argument("verify: residual stencils support m <= 2");
  if (n > 2) throw std::invalid_argument("verify: supports n <= 2");
  for (const auto& p : probes.points) {
    if (static_cast<int>(p.size()) != n)
      throw std::invalid_argument("verify: probe dimension mismatch");
    for (double c : p)
      if (!(c > 0.0)) throw std::invalid_argument("verify: probes must be strictly interior");
  }
  for (double t : probes.times)
    if (!(t > 0.0)) throw std::invalid_argument("verify: residual times must be > 0");
  for (std::size_t i = 1; i < probes.initial_times.size(); ++i)
    if (!(probes.initial_times[i] < probes.initial_times[i - 1]) ||
        !(probes.initial_times[i] > 0.0))
      throw std::invalid_argument("verify: initial times must decrease toward 0");

  QuadSpec tight = evaluator.quadrature();
  tight.rel_tol = probes.residual_rel_tol;
  tight.validate();
  const double h_x = probes.h_x > 0.0 ? probes.h_x : (m == 1 ? 1e-2 : 6e-2);
  const double h_t_base = probes.h_t > 0.0 ? probes.h_t : (m == 1 ? 1e-3 : 2e-2);

  const Sampler u = [&](std::span<const double> x, double t) {
    return evaluator.value(x, t, tight);
  };
  const bool has_source = static_cast<bool>(problem.source) &&
                          evaluator.mode() != SolveMode::homogeneous;

  const auto started = std::chrono::steady_clock::now();
  const std::uint64_t evals0 = quadrature_evaluations();

  ResidualReport report;
  for (const auto& p : probes.points)
    for (double t : probes.times) {
      const double ht = h_t_base * std::max(1.0, t);
      double res;
      if (m == 1) {
        double dt = 0.0;
        for (int a = -2; a <= 2; ++a) dt += kC1[a + 2] * u(p, t + a * ht);
        dt /= 12.0 * ht;
        res = dt - delta_b_stencil(u, problem.gamma.gamma, p, t, h_x);
      } else {
        double dtt = 0.0;
        for (int a = -2; a <= 2; ++a) dtt += kC2[a + 2] * u(p, t + a * ht);
        dtt /= 12.0 * ht * ht;
        double dt_db = 0.0;
        for (int a = -2; a <= 2; ++a)
          dt_db += kC1[a + 2] * delta_b_stencil(u, problem.gamma.gamma, p, t + a * ht, h_x);
        dt_db /= 12.0 * ht;
        res = dtt - 2.0 * dt_db + delta_b2_stencil(u, problem.gamma.gamma, p, t, h_x);
      }
      if (has_source) res -= problem.source(p, t);
      report.pde.push_back({p, t, res});
      report.max_pde = std::max(report.max_pde, std::abs(res));
      report.rms_pde += res * res;
    }
  if (!report.pde.empty())
    report.rms_pde = std::sqrt(report.rms_pde / static_cast<double>(report.pde.size()));

  // initial conditions: d^k u/dt^k along the decreasing time ladder,
  // extrapolated linearly to t = 0 from the two smallest rungs
  report.initial_deviation.assign(m, {});
  if (probes.initial_times.size() >= 2)
    for (int k = 0; k < m; ++k)
      for (const auto& p : probes.points) {
        std::vector<double> vals;
        for (double t0 : probes.initial_times) {
          if (k == 0) {
            vals.push_back(u(p, t0));
          } else {
            const double d = t0 / 2.0;
            vals.push_back((-3.0 * u(p, t0) + 4.0 * u(p, t0 + d) - u(p, t0 + 2.0 * d)) /
                           (2.0 * d));
          }
        }
        const std::size_t last = probes.initial_times.size() - 1;
        const double ta = probes.initial_times[last - 1], va = vals[last - 1];
        const double tb = probes.initial_times[last], vb = vals[last];
        const double at_zero = (ta * vb - tb * va) / (ta - tb);
        const double expected =
            evaluator.mode() == SolveMode::inhomogeneous ? 0.0 : problem.phis[k](p);
        const double dev = std::abs(at_zero - expected);
        report.initial_deviation[k].push_back(dev);
        report.max_initial = std::max(report.max_initial, dev);
      }

  // boundary evenness: one-sided first-derivative estimate at x_j = 0
  const double hb = 1e-3;
  for (const auto& p : probes.points)
    for (double t : probes.times)
      for (int j = 0; j < n; ++j) {
        std::vector<double> q(p.begin(), p.end());
        q[j] = 0.0;
        const double u0 = u(q, t);
        q[j] = hb;
        const double u1 = u(q, t);
        q[j] = 2.0 * hb;
        const double u2 = u(q, t);
        const double odd = std::abs((4.0 * u1 - 3.0 * u0 - u2) / (2.0 * hb));
        report.boundary_odd.push_back(odd);
        report.max_boundary = std::max(report.max_boundary, odd);
      }

  report.evaluations = quadrature_evaluations() - evals0;
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace polycal
