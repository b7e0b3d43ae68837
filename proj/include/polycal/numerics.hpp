#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace polycal {

/// Thrown when an adaptive quadrature fails to reach the requested tolerance.
/// Carries the best available estimate so callers can decide whether to accept it.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& msg, double estimate, double error_estimate)
      : std::runtime_error(msg), estimate(estimate), error_estimate(error_estimate) {}
  double estimate;        ///< last computed value of the integral
  double error_estimate;  ///< achieved error estimate (difference of last two refinements)
};

/// Which quadrature engine a QuadSpec is intended for. Informational; each
/// engine reads only the numeric knobs.
enum class QuadKind { finite, gaussian_tail };

/// Quadrature request: target relative tolerance and a refinement cap.
struct QuadSpec {
  QuadKind kind = QuadKind::finite;
  double rel_tol = 1e-9;   ///< requested relative tolerance, in (1e-15, 1)
  int max_level = 12;      ///< tanh-sinh level cap / panel-doubling cap, in [2, 16]
  double tail_eps = 1e-12; ///< truncation epsilon for the Gaussian tail rule

  static QuadSpec finite_rule(double rel_tol = 1e-9, int max_level = 12);
  static QuadSpec tail_rule(double rel_tol = 1e-9, int max_level = 10,
                            double tail_eps = 1e-12);
  void validate() const;  ///< throws std::invalid_argument on out-of-range knobs
};

// --- special functions ---------------------------------------------------
//
// All evaluators are deterministic and overflow-safe on their stated domains.
// Out-of-domain arguments throw std::domain_error; they never return NaN.

/// Euler gamma function for x > 0. Relative error below 1e-14 on (0, 2] and
/// throughout the range used here (x < 60). Stirling series with Bernoulli
/// coefficients in extended precision, argument shifted to y >= 12.
double gamma_fn(double x);

/// log Gamma(x) for x > 0, same implementation core as gamma_fn.
double log_gamma(double x);

/// Scaled modified Bessel function e^{-z} I_nu(z) for nu > -1, z >= 0.
/// Power series below z = 15, asymptotic expansion (both exponential series)
/// beyond; finite for all z up to and past xs/2t ~ 1e6. For nu < 0 the limit
/// at z = 0 is +infinity and is returned as such.
double bessel_i_scaled(double nu, double z);

/// Bessel function of the first kind J_nu(z) for nu > -1, z >= 0.
/// Power series below z = 15, Hankel asymptotic expansion beyond; relative
/// accuracy ~1e-12 against the oscillation envelope for z <= 200.
double bessel_j(double nu, double z);

/// Bessel-Clifford function Ibar_nu(z) = Gamma(nu+1) (z/2)^{-nu} I_nu(z).
/// Entire in z^2, equals 1 at z = 0. Grows like e^z; use the scaled variant
/// for large arguments.
double bessel_clifford_i(double nu, double z);

/// e^{-z} Ibar_nu(z). Bounded by 1 for nu >= -1/2; decreasing in z. This is
/// the factor that keeps the singular heat kernel overflow-free.
double bessel_clifford_i_scaled(double nu, double z);

/// Bessel-Clifford function Jbar_nu(z) = Gamma(nu+1) (z/2)^{-nu} J_nu(z).
/// Entire in z^2, equals 1 at z = 0.
double bessel_clifford_j(double nu, double z);

/// p-th z-derivative of Ibar_nu at z, 0 <= p <= 8. Uses the ladder
/// d/dw Ibar_nu = Ibar_{nu+1}/(nu+1) with w = z^2/4 composed through the
/// quadratic substitution, so no numerical differentiation is involved.
double bessel_clifford_i_deriv(double nu, int p, double z);

/// p-th z-derivative of Jbar_nu at z, 0 <= p <= 8 (ladder with sign -1).
double bessel_clifford_j_deriv(double nu, int p, double z);

// --- quadrature -----------------------------------------------------------

/// Integrate f over the finite interval [a, b]. The integrand may have
/// algebraic endpoint behavior f ~ (x-a)^{exp_a} near a and (b-x)^{exp_b}
/// near b with declared exponents > -1 (never auto-detected). A tanh-sinh
/// (double-exponential) rule absorbs such endpoint singularities; the
/// declared exponents are validated and documented but the rule does not
/// need them beyond integrability.
///
/// Precision note: near `a` the nodes a + d carry full relative precision in
/// the offset d whenever a is exact (a = 0 in every singular use here), so a
/// strong singularity at the left endpoint is resolved to full accuracy. Near
/// `b` the offset b - x is quantized to ulp(b), which caps the attainable
/// accuracy for a strongly singular right endpoint (exp_b below about -0.3).
/// Rearrange such integrals so the strong singularity sits at a left endpoint
/// (reflect, or split at an interior point and reflect the right piece).
///
/// Throws QuadratureError (carrying the best estimate) if the refinement cap
/// is reached before the requested relative tolerance.
double integrate_finite(const std::function<double(double)>& f, double a, double b,
                        double exp_a, double exp_b, const QuadSpec& spec);

/// Integrate f over [0, infinity) for integrands dominated by a Gaussian
/// envelope exp(-(s-center)^2 / (4t)) times modest growth. Truncates at
///   s_max = center + 1.2 sqrt(4 t ln(1/eps)) + 10 sqrt(t),
/// then applies a composite Gauss-Legendre rule with panel doubling.
/// `zero_exponent` declares algebraic behavior s^p of the integrand at s = 0
/// (p > -1); when nonzero the leading subinterval is handled by the
/// double-exponential rule so non-integer exponents keep full accuracy.
double integrate_gaussian_tail(const std::function<double(double)>& f, double t,
                               double center, const QuadSpec& spec,
                               double zero_exponent = 0.0);

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence (deterministic, ~1e-15 accurate).
const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int n);

/// Global integrand-evaluation counter for run statistics (atomic).
std::uint64_t quadrature_evaluations();
void reset_quadrature_evaluations();

}  // namespace polycal
