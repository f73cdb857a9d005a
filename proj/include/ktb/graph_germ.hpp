#pragma once

#include <initializer_list>
#include <span>
#include <vector>

#include "ktb/linalg.hpp"
#include "ktb/series.hpp"

namespace ktb {

/// Hypersurface germ x_n = h(x_1, ..., x_{n-1}) through the origin, stored as
/// the Taylor polynomial of h (order >= 5).
///
/// Invariants: h(0) = 0 and the Hessian of h at the origin is positive definite.
/// Linear terms are allowed so that graphs over tilted coordinate planes can be
/// represented; germs in a tangent frame have none.
class GraphGerm {
 public:
  explicit GraphGerm(TaylorSeries h);

  /// Planar germ y = sum_k coeffs[k] x^k.
  static GraphGerm planar(std::span<const double> coeffs);
  static GraphGerm planar(std::initializer_list<double> coeffs) {
    return planar(std::span<const double>(coeffs.begin(), coeffs.size()));
  }

  int dimension() const { return h_.nvars() + 1; }
  int order() const { return h_.order(); }
  const TaylorSeries& taylor() const { return h_; }

  double coeff(std::span<const int> exps) const { return h_.coeff(exps); }
  double coeff(std::initializer_list<int> exps) const { return h_.coeff(exps); }

  /// True when h has no linear terms.
  bool tangent_at_origin(double tol = 1e-12) const;

  template <class S>
  S value(std::span<const S> x) const {
    return h_.evaluate(x);
  }
  template <class S>
  S partial(int var, std::span<const S> x) const {
    return grad_[static_cast<std::size_t>(var)].evaluate(x);
  }

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;
  /// Mixed partial derivative with the given multi-index, evaluated at x.
  double derivative(std::span<const int> multi_index, const Vec& x) const;
  /// Mixed partial derivative at the origin (coefficient times factorials).
  double jet(std::span<const int> multi_index) const;

  // Planar conveniences in extended precision.
  long double value_1d(long double x) const;
  long double slope_1d(long double x) const;
  long double curvature_term_1d(long double x) const;  // h''(x)

 private:
  TaylorSeries h_;
  std::vector<TaylorSeries> grad_;
  std::vector<std::vector<TaylorSeries>> hess_;
};

}  // namespace ktb
