#pragma once

#include <span>

#include "polycal/bessel_diffop.hpp"
#include "polycal/numerics.hpp"
#include "polycal/scalar_field.hpp"

namespace polycal {

/// Reflected (even) half-line heat kernel
///   [e^{-(s-x)^2/4t} + e^{-(s+x)^2/4t}] / (2 sqrt(pi t)).
/// Unit mass in s over [0, infinity) for every x >= 0.
double g0(double x, double s, double t);

/// Normalized singular heat-kernel weight for one axis, |gamma| < 1/2:
///   w(gamma,x,s,t) = s^{2 gamma + 1} / (2t (4t)^gamma Gamma(gamma+1))
///                    * e^{-(x-s)^2/4t} * [e^{-z} Ibar_gamma(z)],  z = xs/2t.
/// Every factor is bounded and machine-representable (the scaled kernel
/// factor lies in (0, 1]); the form is finite at x = 0 and for z up to 1e6,
/// where the textbook product x^{-gamma} s^{gamma+1} e^{-(x^2+s^2)/4t}
/// I_gamma(xs/2t) / 2t would demand 0^{-gamma} or overflow e^z.
/// Unit mass in s for every x >= 0, t > 0.
double weight(double gamma, double x, double s, double t);

/// Product weight over axes, one singularity parameter per axis.
/// Requires a strict-regime GammaVec (each |gamma_k| < 1/2).
struct KernelWeight {
  GammaVec gamma;

  explicit KernelWeight(GammaVec g);
  double axis_weight(int j, double x, double s, double t) const;
  double product(std::span<const double> x, std::span<const double> s, double t) const;
};

/// Residual of the Gaussian-damped Bessel product integral
///   Int_0^infty e^{-t l^2} J_nu(s l) J_nu(x l) l dl
///     - e^{-(x-s)^2/4t} [e^{-z} I_nu(z)] / 2t,  z = xs/2t.
/// The left side truncates at l_max = sqrt(ln(1/eps)/t) + 2 (eps = 1e-14) and
/// integrates with a leading double-exponential panel (absorbing the l^{2nu+1}
/// behavior at 0) plus composite Gauss-Legendre panels sized to the slower
/// oscillation period, doubled until spec.rel_tol.
double weber_sonine_residual(double nu, double x, double s, double t,
                             const QuadSpec& spec);

/// Pointwise two-step heat-average identity: returns
///   (H_{t-tau} (H_tau g))(x) - (H_t g)(x)
/// where (H_t g)(x) is the n-axis Gaussian average of g. Vanishes for every
/// tau in (0, t). Requires an even field (the average reflects through 0).
double semigroup_residual(const ScalarField& g, std::span<const double> x, double t,
                          double tau, const QuadSpec& spec);

/// Time-integrated form of the same identity:
///   Int_0^t (H_{t-tau} (H_tau g))(x) dtau - t (H_t g)(x),
/// the one-tau-integration shape the kernel derivation telescopes with.
double semigroup_integrated_residual(const ScalarField& g, std::span<const double> x,
                                     double t, const QuadSpec& spec);

/// Single n-axis Gaussian heat average (H_t g)(x); building block of the
/// residuals above and reused by the inhomogeneous solver term.
double heat_average(const ScalarField& g, std::span<const double> x, double t,
                    const QuadSpec& spec);

}  // namespace polycal
