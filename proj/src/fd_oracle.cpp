#include "polycal/fd_oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace polycal {

Grid1D::Grid1D(double length_, int nodes_, double dt_, double t_final_)
    : length(length_), nodes(nodes_), dt(dt_), t_final(t_final_) {
  if (!(length > 0.0)) throw std::invalid_argument("grid: length must be > 0");
  if (nodes < 64) throw std::invalid_argument("grid: need at least 64 intervals");
  if (!(dt > 0.0)) throw std::invalid_argument("grid: dt must be > 0");
  if (!(t_final > 0.0)) throw std::invalid_argument("grid: t_final must be > 0");
  const double ratio = t_final / dt;
  if (std::fabs(ratio - std::round(ratio)) > 1e-9 * ratio)
    throw std::invalid_argument("grid: dt must divide t_final evenly");
}

int Grid1D::steps() const { return static_cast<int>(std::round(t_final / dt)); }

namespace {

// tridiagonal rows of B on the grid; row `nodes` is left empty for the
// Dirichlet closure
struct BRows {
  std::vector<double> lower, diag, upper;
};

BRows build_b_rows(double gamma, const std::vector<double>& x, double h) {
  const int last = static_cast<int>(x.size()) - 1;
  BRows b{std::vector<double>(last + 1, 0.0), std::vector<double>(last + 1, 0.0),
          std::vector<double>(last + 1, 0.0)};
  const double a = 2.0 * gamma + 1.0;
  const double axis = (2.0 * gamma + 2.0) * 2.0 / (h * h);
  b.diag[0] = -axis;
  b.upper[0] = axis;
  for (int i = 1; i < last; ++i) {
    b.lower[i] = 1.0 / (h * h) - a / (2.0 * h * x[i]);
    b.diag[i] = -2.0 / (h * h);
    b.upper[i] = 1.0 / (h * h) + a / (2.0 * h * x[i]);
  }
  return b;
}

// Thomas factorization of (I - dt/2 B) with an identity far row; the matrix
// is time independent, so the elimination coefficients are reused each step
struct Factorized {
  std::vector<double> sub, denom, upper;
};

Factorized factor_lhs(const BRows& b, double dt) {
  const int count = static_cast<int>(b.diag.size());
  Factorized f{std::vector<double>(count, 0.0), std::vector<double>(count, 0.0),
               std::vector<double>(count, 0.0)};
  for (int i = 0; i < count; ++i) {
    const bool far = i + 1 == count;
    const double diag = far ? 1.0 : 1.0 - 0.5 * dt * b.diag[i];
    f.upper[i] = far ? 0.0 : -0.5 * dt * b.upper[i];
    f.sub[i] = far ? 0.0 : -0.5 * dt * b.lower[i];
    f.denom[i] = i == 0 ? diag : diag - f.sub[i] * f.upper[i - 1] / f.denom[i - 1];
    if (!(std::fabs(f.denom[i]) > 1e-300))
      throw std::runtime_error("fd oracle: singular tridiagonal system");
  }
  return f;
}

void thomas_solve(const Factorized& f, std::vector<double>& rhs) {
  const int count = static_cast<int>(rhs.size());
  for (int i = 1; i < count; ++i)
    rhs[i] -= f.sub[i] * rhs[i - 1] / f.denom[i - 1];
  rhs[count - 1] /= f.denom[count - 1];
  for (int i = count - 2; i >= 0; --i)
    rhs[i] = (rhs[i] - f.upper[i] * rhs[i + 1]) / f.denom[i];
}

// (I + dt/2 B) u, interior and axis rows only; the far entry is overwritten
// by the Dirichlet value afterwards
std::vector<double> apply_rhs_matrix(const BRows& b, double dt, const std::vector<double>& u) {
  const int count = static_cast<int>(u.size());
  std::vector<double> out(count, 0.0);
  for (int i = 0; i + 1 < count; ++i) {
    double v = (1.0 + 0.5 * dt * b.diag[i]) * u[i];
    if (i > 0) v += 0.5 * dt * b.lower[i] * u[i - 1];
    v += 0.5 * dt * b.upper[i] * u[i + 1];
    out[i] = v;
  }
  return out;
}

double weighted_mass(const std::vector<double>& x, const std::vector<double>& u,
                     double gamma, double h) {
  const double a = 2.0 * gamma + 1.0;
  double m = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double w = (i + 1 == x.size()) ? 0.5 : 1.0;
    m += w * std::pow(x[i], a) * u[i] * h;
  }
  return m;  // the axis node carries zero weight
}

}  // namespace

FDSolution fd_solve(const ProblemSpec& problem, const Grid1D& grid, FarValue far_u,
                    FarValue far_w) {
  if (problem.n != 1) throw std::invalid_argument("fd oracle: one spatial dimension only");
  if (problem.m > 2) throw std::invalid_argument("fd oracle: order must be 1 or 2");

  const int count = grid.nodes + 1;
  const double h = grid.h();
  const double gamma = problem.gamma.gamma[0];
  std::vector<double> x(count);
  for (int i = 0; i < count; ++i) x[i] = i * h;

  std::vector<double> u(count), w;
  for (int i = 0; i < count; ++i) {
    const std::array<double, 1> pt{x[i]};
    u[i] = problem.phis[0](pt);
  }
  if (problem.m == 2) {
    const ScalarField w0 = assemble_fk(problem, 1);
    w.resize(count);
    for (int i = 0; i < count; ++i) {
      const std::array<double, 1> pt{x[i]};
      w[i] = w0(pt);
    }
  }

  const BRows b = build_b_rows(gamma, x, h);
  const Factorized lhs = factor_lhs(b, grid.dt);
  const int steps = grid.steps();
  const int snap_every = std::max(1, steps / 8);

  double blowup = 1.0;
  for (double v : u) blowup = std::max(blowup, std::fabs(v));
  blowup *= 1e6;

  FDSolution out{grid, x, {}, {}, {}, {}, 0.0, 0.0};
  out.mass.reserve(steps + 1);
  out.mass.push_back(weighted_mass(x, u, gamma, h));
  out.min_value = *std::min_element(u.begin(), u.end());
  out.max_value = *std::max_element(u.begin(), u.end());
  out.snapshot_times.push_back(0.0);
  out.snapshots.push_back(u);

  auto source_row = [&](double t, std::vector<double>& dst) {
    for (int i = 0; i < count; ++i) {
      const std::array<double, 1> pt{x[i]};
      dst[i] = problem.source(pt, t);
    }
  };
  std::vector<double> f_now(count, 0.0), f_next(count, 0.0);
  if (problem.source) source_row(0.0, f_now);

  for (int k = 0; k < steps; ++k) {
    const double t_next = (k + 1) * grid.dt;
    if (problem.source) source_row(t_next, f_next);

    std::vector<double> w_prev;
    if (problem.m == 2) {
      // cascade variable first; its own source is f
      w_prev = w;
      std::vector<double> rhs = apply_rhs_matrix(b, grid.dt, w);
      if (problem.source)
        for (int i = 0; i + 1 < count; ++i)
          rhs[i] += 0.5 * grid.dt * (f_now[i] + f_next[i]);
      rhs[count - 1] = far_w ? far_w(t_next) : 0.0;
      thomas_solve(lhs, rhs);
      w = std::move(rhs);
    }

    std::vector<double> rhs = apply_rhs_matrix(b, grid.dt, u);
    if (problem.m == 1) {
      if (problem.source)
        for (int i = 0; i + 1 < count; ++i)
          rhs[i] += 0.5 * grid.dt * (f_now[i] + f_next[i]);
    } else {
      for (int i = 0; i + 1 < count; ++i)
        rhs[i] += 0.5 * grid.dt * (w_prev[i] + w[i]);
    }
    rhs[count - 1] = far_u ? far_u(t_next) : 0.0;
    thomas_solve(lhs, rhs);
    u = std::move(rhs);

    out.mass.push_back(weighted_mass(x, u, gamma, h));
    for (double v : u) {
      if (!(std::fabs(v) <= blowup))
        throw std::runtime_error("fd oracle: unstable growth detected");
      out.min_value = std::min(out.min_value, v);
      out.max_value = std::max(out.max_value, v);
    }
    if ((k + 1) % snap_every == 0 && k + 1 != steps) {
      out.snapshot_times.push_back(t_next);
      out.snapshots.push_back(u);
    }
    std::swap(f_now, f_next);
  }

  out.snapshot_times.push_back(grid.t_final);
  out.snapshots.push_back(u);
  out.final_frame = std::move(u);
  return out;
}

ConvergenceStudy convergence_study(const ProblemSpec& problem, std::span<const Grid1D> grids,
                                   const QuadSpec& spec, double window_min, double window_max,
                                   FarValue far_u, FarValue far_w) {
  if (grids.size() < 3)
    throw std::invalid_argument("convergence study: need at least 3 grids");
  const SolutionEvaluator reference = solve_full(problem, spec, /*allow_invalid=*/true);

  ConvergenceStudy study{{}, 0.0};
  for (const Grid1D& grid : grids) {
    const double hi = window_max > 0.0 ? window_max : 0.6 * grid.length;
    if (!(window_min < hi))
      throw std::invalid_argument("convergence study: empty comparison window");
    const FDSolution sol = fd_solve(problem, grid, far_u, far_w);
    double err = 0.0;
    const int samples = 33;
    for (int s = 0; s < samples; ++s) {
      const double target = window_min + (hi - window_min) * s / (samples - 1);
      const int i = static_cast<int>(std::round(target / grid.h()));
      const std::array<double, 1> pt{sol.x[i]};
      err = std::max(err, std::fabs(sol.final_frame[i] -
                                    reference.value(pt, grid.t_final, spec)));
    }
    study.rows.push_back({grid, err});
  }

  // slope of log error against the varying step (dt if h is shared)
  bool h_varies = false;
  for (const auto& row : study.rows)
    if (std::fabs(row.grid.h() - study.rows.front().grid.h()) > 1e-15) h_varies = true;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(study.rows.size());
  for (const auto& row : study.rows) {
    const double p = h_varies ? row.grid.h() : row.grid.dt;
    const double lx = std::log(p), ly = std::log(std::max(row.max_error, 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double det = n * sxx - sx * sx;
  if (!(std::fabs(det) > 1e-12))
    throw std::invalid_argument("convergence study: grids do not vary the step");
  study.observed_order = (n * sxy - sx * sy) / det;
  return study;
}

}  // namespace polycal
