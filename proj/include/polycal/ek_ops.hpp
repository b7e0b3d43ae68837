#pragma once

#include <span>
#include <vector>

#include "polycal/numerics.hpp"
#include "polycal/scalar_field.hpp"

namespace polycal {

/// Parameters of the fractional transform: per-axis order alpha_k > 0,
/// weight eta_k >= -1/2, and kernel frequency lambda_k >= 0 (zero selects
/// the plain transform). Inverses additionally require alpha_k in (0,1),
/// which keeps the inverse's outer derivative first-order per axis.
struct EKParams {
  std::vector<double> alpha;
  std::vector<double> eta;
  std::vector<double> lambda;

  EKParams(std::vector<double> alpha_, std::vector<double> eta_,
           std::vector<double> lambda_);
  int dim() const { return static_cast<int>(alpha.size()); }
  void require_invertible() const;  // alpha_k in (0,1) for every axis
};

/// Field view of the forward transform: per-axis weighted integrals over
/// [0, x_k] with an oscillatory spherical-kernel factor, evaluated as nested
/// 1D quadratures after the substitution t = x cos(psi) that fixes the
/// domain and cancels the outer power weight exactly. Analytic derivatives
/// differentiate under the integral sign.
ScalarField ek_transform_field(const EKParams& params, ScalarField field,
                               const QuadSpec& spec);

/// Field view of the inverse transform (alpha_k in (0,1)): per axis,
/// x^{-2 eta} (1/x d/dx) of the weighted integral, evaluated after the same
/// fixed-domain substitution so the derivative acts on a smooth
/// parameterized integral. lambda = 0 gives the plain inverse.
ScalarField ek_inverse_field(const EKParams& params, ScalarField field,
                             const QuadSpec& spec);

/// Pointwise forward transform. Coordinates must be strictly positive.
double ek_apply(const EKParams& params, const ScalarField& field,
                std::span<const double> point, const QuadSpec& spec);

/// Pointwise plain inverse; requires lambda = 0 on every axis.
double ek_inverse_plain(const EKParams& params, const ScalarField& field,
                        std::span<const double> point, const QuadSpec& spec);

/// Pointwise generalized inverse (any lambda_k >= 0).
double ek_inverse_generalized(const EKParams& params, const ScalarField& field,
                              std::span<const double> point, const QuadSpec& spec);

/// Residual of the one-axis commutation identity:
///   (B_{eta_k + alpha_k} + lambda_k^2)^power  T f  -  T (B_{eta_k})^power f
/// at the point, where T is the forward transform. Zero certifies the
/// identity at quadrature accuracy.
double intertwine_residual(const EKParams& params, const ScalarField& field, int axis,
                           int power, std::span<const double> point, const QuadSpec& spec);

/// Residual of the all-axes commutation identity:
///   [sum_k (B_{eta_k + alpha_k} + lambda_k^2)]^q  T f
///     -  T [sum_k B_{eta_k}]^q f.
/// With eta = -1/2 and lambda = 0 the left sum is the plain Laplacian
/// composed with the transform of the singular operator sum.
double intertwine_sum_residual(const EKParams& params, const ScalarField& field, int q,
                               std::span<const double> point, const QuadSpec& spec);

/// Residual of the inverse-side commutation identity (eta = -1/2,
/// lambda = 0): Laplacian^p of the inverse transform minus the inverse
/// transform of the singular operator power with gamma_k = alpha_k - 1/2.
double inverse_intertwine_residual(const EKParams& params, const ScalarField& field, int p,
                                   std::span<const double> point, const QuadSpec& spec);

}  // namespace polycal
