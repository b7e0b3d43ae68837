#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "polycal/scalar_field.hpp"

namespace polycal {

/// Per-axis singularity parameters for the operator sum over axes of
/// d^2/dx_k^2 + (2 gamma_k + 1)/x_k d/dx_k. The operator regime requires
/// gamma_k > -1/2; strict mode additionally demands |gamma_k| < 1/2, the
/// regime the solution formula needs.
struct GammaVec {
  std::vector<double> gamma;
  bool strict = false;

  explicit GammaVec(std::vector<double> g, bool strict_mode = false);
  int dim() const { return static_cast<int>(gamma.size()); }
};

/// Source term f(x, t); empty function means a homogeneous problem.
using SourceFn = std::function<double(std::span<const double>, double)>;

/// The Cauchy data: order m, singularity vector, initial fields
/// phi_0..phi_{m-1} (the k-th time derivative at t = 0), optional source.
struct ProblemSpec {
  int n;
  int m;
  GammaVec gamma;
  std::vector<ScalarField> phis;
  SourceFn source;       // may be empty
  bool source_even = true;

  ProblemSpec(int n_, int m_, GammaVec gamma_, std::vector<ScalarField> phis_,
              SourceFn source_ = {}, bool source_even_ = true);
};

/// Pointwise B_gamma along one axis: f'' + (2 gamma_k + 1)/x_k f'. At
/// x_k = 0 returns the even-limit value (2 gamma_k + 2) f''(0); throws
/// std::domain_error there when the field is not declared even.
double apply_B(double gamma_k, const ScalarField& field, int axis,
               std::span<const double> point);

/// Field view of B_{gamma_k}^power applied along one axis. Analytic when the
/// base field serves enough derivative orders (values via an exact term
/// table, with an even-Taylor branch near the axis where the table's x^{-r}
/// terms would cancel catastrophically); otherwise nested central
/// differences with per-level step 1e-3 * 2^level.
ScalarField apply_b_power_field(ScalarField field, int axis, double gamma_k, int power);

/// Field view of the p-th power of the operator sum over axes (multinomial
/// expansion over per-axis powers).
ScalarField delta_b_pow_field(const GammaVec& gamma, ScalarField field, int p);

/// Same expansion with raw per-axis parameters; accepts the boundary value
/// gamma_k = -1/2, where the axis operator degenerates to a plain second
/// derivative.
ScalarField delta_b_pow_field(const std::vector<double>& gamma_per_axis, ScalarField field,
                              int p);

/// Pointwise value of the p-th operator power. p = 0 returns the field value.
/// Fields without analytic derivatives are limited to p <= 2.
double apply_DeltaB_pow(const GammaVec& gamma, const ScalarField& field, int p,
                        std::span<const double> point);

/// Derived initial field number k: sum_{j=0}^{k} (-1)^j C(k,j) Delta_B^j
/// phi_{k-j}. Even by construction.
ScalarField assemble_fk(const ProblemSpec& problem, int k);

struct ValidationIssue {
  int phi_index;
  int axis;
  int order;         // derivative order of the failed vanishing condition
  double magnitude;  // measured |value| against the scale-aware band
  std::string what;
};

struct ValidationReport {
  bool pass = true;
  std::vector<ValidationIssue> violations;
  std::vector<std::string> notes;
};

/// Compatibility checks on the initial fields: per axis, derivatives of
/// phi_j through order 2(m-j)-1 must vanish at the axis (odd orders hold by
/// parity; even orders are the substantive condition), and the weighted
/// boundary flux x^{2 gamma + 1} d/dx applied to operator powers of phi_j
/// must decay toward the axis. Reports violations, never throws.
ValidationReport validate_initial_data(const ProblemSpec& problem);

}  // namespace polycal
