#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace polycal {

/// Implementation interface for an evaluatable function on R^n_+ (values at
/// nonnegative coordinates; even fields extend by reflection).
///
/// derivative_order() is the highest per-axis order served analytically.
/// Requests beyond it fall back to nested central differences on value(),
/// which is noisy past second order; the first fallback use emits a one-time
/// precision warning on stderr.
class FieldImpl {
 public:
  virtual ~FieldImpl() = default;

  virtual int dim() const = 0;

  /// True when the field is even in each coordinate separately.
  virtual bool even() const = 0;

  /// Highest per-axis derivative order available analytically (0 = none).
  virtual int derivative_order() const = 0;

  virtual double value(std::span<const double> x) const = 0;

  /// Mixed partial d^{orders} f / dx^{orders} at x. The default implementation
  /// differences value(); override when closed forms exist.
  virtual double derivative(std::span<const int> orders, std::span<const double> x) const;
};

/// Value-type handle to an immutable field. Copies share the implementation;
/// all operations are const and safe for concurrent evaluation.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(std::shared_ptr<const FieldImpl> impl);

  int dim() const;
  bool even() const;
  int derivative_order() const;

  double operator()(std::span<const double> x) const;
  double operator()(double x) const;  // 1D convenience

  /// Mixed partial with per-axis orders; validates sizes and signs.
  double derive(std::span<const int> orders, std::span<const double> x) const;
  double derive(int order, double x) const;  // 1D convenience

  explicit operator bool() const { return static_cast<bool>(impl_); }
  std::shared_ptr<const FieldImpl> share() const { return impl_; }

 private:
  std::shared_ptr<const FieldImpl> impl_;
};

/// f(x) = c on R^n.
ScalarField make_constant(int n, double c);

/// One-axis factor f(x) = (sum_j coeffs[j] x^{2j}) e^{-a x^2} cos(b x).
/// Even by construction; derivatives of any order are closed-form.
/// Requires a >= 0, b >= 0, nonempty coeffs.
ScalarField make_gauss_poly_1d(std::vector<double> even_coeffs, double a, double b = 0.0);

/// Product of 1D factors, one per axis.
ScalarField make_product(std::vector<ScalarField> axis_fields);

/// sum_i weights[i] * fields[i]; fields must agree in dimension.
ScalarField make_linear_combination(std::vector<double> weights,
                                    std::vector<ScalarField> fields);

/// Wrap a plain callable. No analytic derivatives (derivative_order = 0);
/// derivative requests use the quarantined numeric fallback.
ScalarField make_from_callable(int n, bool even_parity,
                               std::function<double(std::span<const double>)> f);

}  // namespace polycal
