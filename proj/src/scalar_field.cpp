#include "polycal/scalar_field.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <utility>

namespace polycal {

namespace {

void check_point(int n, std::span<const double> x) {
  if (static_cast<int>(x.size()) != n)
    throw std::invalid_argument("field: point dimension mismatch");
}

void warn_fallback_once() {
  static std::atomic<bool> warned{false};
  if (!warned.exchange(true))
    std::fprintf(stderr,
                 "polycal: numeric derivative fallback in use, precision is "
                 "reduced past second order\n");
}

}  // namespace

double FieldImpl::derivative(std::span<const int> orders, std::span<const double> x) const {
  int k = -1;
  for (int i = 0; i < dim(); ++i)
    if (orders[i] > 0) k = i;
  if (k < 0) return value(x);
  warn_fallback_once();

  std::vector<int> reduced(orders.begin(), orders.end());
  --reduced[k];
  std::vector<double> probe(x.begin(), x.end());
  const double h = 1e-5 * std::max(1.0, std::fabs(x[k]));

  probe[k] = x[k] + h;
  const double up = derivative(reduced, probe);
  if (x[k] - h >= 0.0) {
    probe[k] = x[k] - h;
    return (up - derivative(reduced, probe)) / (2.0 * h);
  }
  if (even()) {
    // reflect through the axis; odd-order partials of an even field flip sign
    probe[k] = h - x[k];
    const double mirrored = derivative(reduced, probe);
    const int parity = reduced[k] % 2 == 0 ? -1 : 1;
    return (up + parity * mirrored) / (2.0 * h);
  }
  probe[k] = x[k];
  return (up - derivative(reduced, probe)) / h;  // one-sided at the boundary
}

ScalarField::ScalarField(std::shared_ptr<const FieldImpl> impl) : impl_(std::move(impl)) {
  if (!impl_) throw std::invalid_argument("ScalarField: null implementation");
}

int ScalarField::dim() const { return impl_->dim(); }
bool ScalarField::even() const { return impl_->even(); }
int ScalarField::derivative_order() const { return impl_->derivative_order(); }

double ScalarField::operator()(std::span<const double> x) const {
  check_point(impl_->dim(), x);
  return impl_->value(x);
}

double ScalarField::operator()(double x) const {
  return (*this)(std::span<const double>(&x, 1));
}

double ScalarField::derive(std::span<const int> orders, std::span<const double> x) const {
  check_point(impl_->dim(), x);
  if (static_cast<int>(orders.size()) != impl_->dim())
    throw std::invalid_argument("field: derivative order list dimension mismatch");
  for (int o : orders)
    if (o < 0) throw std::invalid_argument("field: negative derivative order");
  return impl_->derivative(orders, x);
}

double ScalarField::derive(int order, double x) const {
  return derive(std::span<const int>(&order, 1), std::span<const double>(&x, 1));
}

// --- constant ---------------------------------------------------------------

namespace {

class ConstantField final : public FieldImpl {
 public:
  ConstantField(int n, double c) : n_(n), c_(c) {}
  int dim() const override { return n_; }
  bool even() const override { return true; }
  int derivative_order() const override { return 64; }
  double value(std::span<const double>) const override { return c_; }
  double derivative(std::span<const int> orders, std::span<const double>) const override {
    for (int o : orders)
      if (o > 0) return 0.0;
    return c_;
  }

 private:
  int n_;
  double c_;
};

// --- 1D gaussian-polynomial-cosine factor -----------------------------------
//
// f(x) = P(x) e^{-a x^2} cos(bx) + Q(x) e^{-a x^2} sin(bx) is closed under
// d/dx with P -> P' - 2axP + bQ and Q -> Q' - 2axQ - bP, so any derivative
// order reduces to one polynomial pair evaluated at x.

using Poly = std::vector<double>;  // monomial coefficients, ascending degree

double poly_eval(const Poly& p, double x) {
  double v = 0.0;
  for (size_t i = p.size(); i-- > 0;) v = v * x + p[i];
  return v;
}

Poly poly_diff(const Poly& p) {
  if (p.size() <= 1) return {};
  Poly d(p.size() - 1);
  for (size_t i = 1; i < p.size(); ++i) d[i - 1] = static_cast<double>(i) * p[i];
  return d;
}

Poly poly_shift_scaled(const Poly& p, double c) {  // c * x * p
  if (p.empty()) return {};
  Poly s(p.size() + 1, 0.0);
  for (size_t i = 0; i < p.size(); ++i) s[i + 1] = c * p[i];
  return s;
}

void poly_add(Poly& dst, const Poly& src, double w) {
  if (dst.size() < src.size()) dst.resize(src.size(), 0.0);
  for (size_t i = 0; i < src.size(); ++i) dst[i] += w * src[i];
}

class GaussPolyField final : public FieldImpl {
 public:
  GaussPolyField(std::vector<double> even_coeffs, double a, double b)
      : a_(a), b_(b) {
    if (even_coeffs.empty())
      throw std::invalid_argument("gauss_poly field: empty coefficient list");
    if (!(a >= 0.0) || !(b >= 0.0))
      throw std::invalid_argument("gauss_poly field: requires a >= 0 and b >= 0");
    base_.assign(2 * even_coeffs.size() - 1, 0.0);
    for (size_t j = 0; j < even_coeffs.size(); ++j) base_[2 * j] = even_coeffs[j];
  }

  int dim() const override { return 1; }
  bool even() const override { return true; }
  int derivative_order() const override { return 64; }

  double value(std::span<const double> x) const override { return eval(0, x[0]); }

  double derivative(std::span<const int> orders, std::span<const double> x) const override {
    return eval(orders[0], x[0]);
  }

 private:
  double eval(int p, double x) const {
    Poly pc = base_, ps;
    for (int i = 0; i < p; ++i) {
      Poly nc = poly_diff(pc);
      poly_add(nc, poly_shift_scaled(pc, -2.0 * a_), 1.0);
      poly_add(nc, ps, b_);
      Poly nsv = poly_diff(ps);
      poly_add(nsv, poly_shift_scaled(ps, -2.0 * a_), 1.0);
      poly_add(nsv, pc, -b_);
      pc = std::move(nc);
      ps = std::move(nsv);
    }
    const double env = std::exp(-a_ * x * x);
    double v = poly_eval(pc, x) * std::cos(b_ * x);
    if (!ps.empty()) v += poly_eval(ps, x) * std::sin(b_ * x);
    return env * v;
  }

  Poly base_;
  double a_, b_;
};

// --- product of 1D factors ---------------------------------------------------

class ProductField final : public FieldImpl {
 public:
  explicit ProductField(std::vector<ScalarField> axes) : axes_(std::move(axes)) {
    if (axes_.empty()) throw std::invalid_argument("product field: no factors");
    even_ = true;
    order_ = axes_[0].derivative_order();
    for (const auto& a : axes_) {
      if (a.dim() != 1)
        throw std::invalid_argument("product field: factors must be one-dimensional");
      even_ = even_ && a.even();
      order_ = std::min(order_, a.derivative_order());
    }
  }

  int dim() const override { return static_cast<int>(axes_.size()); }
  bool even() const override { return even_; }
  int derivative_order() const override { return order_; }

  double value(std::span<const double> x) const override {
    double v = 1.0;
    for (size_t k = 0; k < axes_.size(); ++k) v *= axes_[k](x[k]);
    return v;
  }

  double derivative(std::span<const int> orders, std::span<const double> x) const override {
    double v = 1.0;
    for (size_t k = 0; k < axes_.size(); ++k) v *= axes_[k].derive(orders[k], x[k]);
    return v;
  }

 private:
  std::vector<ScalarField> axes_;
  bool even_;
  int order_;
};

// --- linear combination ------------------------------------------------------

class LinearCombinationField final : public FieldImpl {
 public:
  LinearCombinationField(std::vector<double> w, std::vector<ScalarField> f)
      : w_(std::move(w)), f_(std::move(f)) {
    if (f_.empty() || w_.size() != f_.size())
      throw std::invalid_argument("combination field: weights and fields must pair up");
    even_ = true;
    order_ = f_[0].derivative_order();
    for (const auto& g : f_) {
      if (g.dim() != f_[0].dim())
        throw std::invalid_argument("combination field: dimension mismatch");
      even_ = even_ && g.even();
      order_ = std::min(order_, g.derivative_order());
    }
  }

  int dim() const override { return f_[0].dim(); }
  bool even() const override { return even_; }
  int derivative_order() const override { return order_; }

  double value(std::span<const double> x) const override {
    double v = 0.0;
    for (size_t i = 0; i < f_.size(); ++i) v += w_[i] * f_[i](x);
    return v;
  }

  double derivative(std::span<const int> orders, std::span<const double> x) const override {
    double v = 0.0;
    for (size_t i = 0; i < f_.size(); ++i) v += w_[i] * f_[i].derive(orders, x);
    return v;
  }

 private:
  std::vector<double> w_;
  std::vector<ScalarField> f_;
  bool even_;
  int order_;
};

// --- callable wrapper --------------------------------------------------------

class CallableField final : public FieldImpl {
 public:
  CallableField(int n, bool even_parity, std::function<double(std::span<const double>)> f)
      : n_(n), even_(even_parity), f_(std::move(f)) {
    if (n_ < 1) throw std::invalid_argument("callable field: dimension must be positive");
    if (!f_) throw std::invalid_argument("callable field: null callable");
  }

  int dim() const override { return n_; }
  bool even() const override { return even_; }
  int derivative_order() const override { return 0; }
  double value(std::span<const double> x) const override { return f_(x); }

 private:
  int n_;
  bool even_;
  std::function<double(std::span<const double>)> f_;
};

}  // namespace

ScalarField make_constant(int n, double c) {
  return ScalarField(std::make_shared<ConstantField>(n, c));
}

ScalarField make_gauss_poly_1d(std::vector<double> even_coeffs, double a, double b) {
  return ScalarField(std::make_shared<GaussPolyField>(std::move(even_coeffs), a, b));
}

ScalarField make_product(std::vector<ScalarField> axis_fields) {
  return ScalarField(std::make_shared<ProductField>(std::move(axis_fields)));
}

ScalarField make_linear_combination(std::vector<double> weights,
                                    std::vector<ScalarField> fields) {
  return ScalarField(
      std::make_shared<LinearCombinationField>(std::move(weights), std::move(fields)));
}

ScalarField make_from_callable(int n, bool even_parity,
                               std::function<double(std::span<const double>)> f) {
  return ScalarField(std::make_shared<CallableField>(n, even_parity, std::move(f)));
}

}  // namespace polycal
