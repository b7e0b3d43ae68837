#pragma once

#include <functional>
#include <span>
#include <vector>

#include "polycal/bessel_diffop.hpp"
#include "polycal/numerics.hpp"
#include "polycal/solver.hpp"

namespace polycal {

/// Uniform half-line grid: nodes x_i = i * length / nodes for i = 0..nodes,
/// stepped to t_final in increments of dt. The time stepping is implicit, so
/// dt carries no stability bound; it is still validated for sanity and must
/// divide t_final evenly. The far end should sit deep under the decay of the
/// data so the Dirichlet closure there is harmless.
struct Grid1D {
  double length;
  int nodes;
  double dt;
  double t_final;

  Grid1D(double length_, int nodes_, double dt_, double t_final_);
  double h() const { return length / nodes; }
  int steps() const;
};

/// Far-boundary value as a function of time; an empty function means 0.
using FarValue = std::function<double(double)>;

/// Discrete solve result: the final frame, a coarse snapshot history, the
/// weighted mass after every step, and the running value range (used by the
/// maximum-principle checks).
struct FDSolution {
  Grid1D grid;
  std::vector<double> x;
  std::vector<double> final_frame;
  std::vector<double> snapshot_times;
  std::vector<std::vector<double>> snapshots;
  std::vector<double> mass;  // index k: weighted mass after k steps
  double min_value;
  double max_value;
};

/// Crank-Nicolson march of the order-one problem u_t = B u + f, or, for
/// order two, of the cascade w_t = B w + f, u_t = B u + w with w(0) equal
/// to the derived initial field number one. Interior rows discretize
/// u'' + ((2 gamma + 1)/x) u' by centered differences; the axis row uses the
/// even limit (2 gamma + 2) * 2 (u_1 - u_0) / h^2, so no ghost value is ever
/// referenced. The far row is Dirichlet to far_u (far_w for the cascade
/// variable). Throws on detected blow-up or a degenerate tridiagonal pivot.
FDSolution fd_solve(const ProblemSpec& problem, const Grid1D& grid, FarValue far_u = {},
                    FarValue far_w = {});

struct ConvergenceRow {
  Grid1D grid;
  double max_error;  // against the analytic evaluator at t_final
};

/// Observed-order study over nested grids. Errors are max-norm over nodes
/// nearest to fixed sample targets in [window_min, window_max] (defaults:
/// 0.3 to sixty percent of the length, clear of both the axis row and the
/// far closure). The order is the least-squares slope of log error against
/// the varying discretization parameter: dt when all grids share a spatial
/// step, h otherwise.
struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  double observed_order;
};

ConvergenceStudy convergence_study(const ProblemSpec& problem, std::span<const Grid1D> grids,
                                   const QuadSpec& spec, double window_min = 0.3,
                                   double window_max = 0.0, FarValue far_u = {},
                                   FarValue far_w = {});

}  // namespace polycal
