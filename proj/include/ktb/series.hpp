#pragma once

#include <cmath>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

namespace ktb {

/// Truncated multivariate Taylor polynomial: coefficients of all monomials
/// x^e with |e| <= order in `nvars` variables, expanded about the origin.
///
/// Arithmetic is exact up to the truncation order, which makes the type a
/// forward-mode jet: evaluating a smooth closed-form function on series
/// arguments yields its Taylor coefficients to rounding error.
class TaylorSeries {
 public:
  struct Layout;

  TaylorSeries() = default;
  TaylorSeries(int nvars, int order);

  static TaylorSeries constant(int nvars, int order, double value);
  /// The series of `at + x_var`.
  static TaylorSeries variable(int nvars, int order, int var, double at = 0.0);

  int nvars() const;
  int order() const;
  std::size_t size() const { return coeffs_.size(); }
  bool empty() const { return coeffs_.empty(); }

  double operator[](std::size_t i) const { return coeffs_[i]; }
  double& operator[](std::size_t i) { return coeffs_[i]; }
  std::span<const int> exponents(std::size_t i) const;
  int degree(std::size_t i) const;

  /// Coefficient of the monomial with the given exponents (0 beyond order).
  double coeff(std::span<const int> exps) const;
  double coeff(std::initializer_list<int> exps) const {
    return coeff(std::span<const int>(exps.begin(), exps.size()));
  }
  void set_coeff(std::span<const int> exps, double value);
  void set_coeff(std::initializer_list<int> exps, double value) {
    set_coeff(std::span<const int>(exps.begin(), exps.size()), value);
  }
  /// Coefficient of x^k for univariate series.
  double coeff(int k) const;

  double constant_term() const { return coeffs_.empty() ? 0.0 : coeffs_[0]; }

  TaylorSeries& operator+=(const TaylorSeries& other);
  TaylorSeries& operator-=(const TaylorSeries& other);
  TaylorSeries& operator*=(const TaylorSeries& other);
  TaylorSeries& operator+=(double c);
  TaylorSeries& operator-=(double c);
  TaylorSeries& operator*=(double c);
  TaylorSeries& operator/=(double c);
  TaylorSeries operator-() const;

  /// Same polynomial truncated (or zero-padded) to another order.
  TaylorSeries with_order(int order) const;
  /// Partial derivative; the result has order one less.
  TaylorSeries derivative(int var) const;

  /// Evaluates the polynomial. S may be any ring type, including TaylorSeries.
  template <class S>
  S evaluate(std::span<const S> x) const;

  /// Univariate outer series composed with an inner series of zero constant term.
  TaylorSeries compose(const TaylorSeries& inner) const;
  /// Compositional inverse of a univariate series with a0 = 0, a1 != 0.
  TaylorSeries revert() const;

 private:
  std::shared_ptr<const Layout> layout_;
  std::vector<double> coeffs_;

  void require_compatible(const TaylorSeries& other) const;
};

TaylorSeries operator+(TaylorSeries a, const TaylorSeries& b);
TaylorSeries operator-(TaylorSeries a, const TaylorSeries& b);
TaylorSeries operator*(const TaylorSeries& a, const TaylorSeries& b);
TaylorSeries operator/(const TaylorSeries& a, const TaylorSeries& b);
TaylorSeries operator+(TaylorSeries a, double c);
TaylorSeries operator+(double c, TaylorSeries a);
TaylorSeries operator-(TaylorSeries a, double c);
TaylorSeries operator-(double c, const TaylorSeries& a);
TaylorSeries operator*(TaylorSeries a, double c);
TaylorSeries operator*(double c, TaylorSeries a);
TaylorSeries operator/(TaylorSeries a, double c);

/// f(s) from the derivatives f(s0), f'(s0), ..., f^(order)(s0), s0 = constant term of s.
TaylorSeries apply_function(const TaylorSeries& s, std::span<const double> derivs);

TaylorSeries reciprocal(const TaylorSeries& s);
TaylorSeries sqrt(const TaylorSeries& s);
TaylorSeries pow(const TaylorSeries& s, double p);
TaylorSeries pow_int(const TaylorSeries& s, int k);
TaylorSeries exp(const TaylorSeries& s);
TaylorSeries sin(const TaylorSeries& s);
TaylorSeries cos(const TaylorSeries& s);

template <class S>
S TaylorSeries::evaluate(std::span<const S> x) const {
  S result = x[0] * 0.0;
  const int nv = nvars();
  for (std::size_t i = 0; i < coeffs_.size(); ++i) {
    if (coeffs_[i] == 0.0) continue;
    S term = x[0] * 0.0 + 1.0;
    const auto e = exponents(i);
    for (int v = 0; v < nv; ++v) {
      for (int k = 0; k < e[v]; ++k) term = term * x[v];
    }
    result = result + term * coeffs_[i];
  }
  return result;
}

}  // namespace ktb
