#include "ktb/graph_germ.hpp"

#include <cmath>

#include "ktb/errors.hpp"

namespace ktb {

GraphGerm::GraphGerm(TaylorSeries h) : h_(std::move(h)) {
  if (h_.empty()) throw PreconditionError("graph germ needs Taylor coefficients");
  if (h_.order() < 2) throw PreconditionError("graph germ needs at least a quadratic part");
  if (std::abs(h_.constant_term()) > 1e-12) {
    throw PreconditionError("graph germ must pass through the origin (h(0) = 0)");
  }
  const int nv = h_.nvars();
  grad_.reserve(static_cast<std::size_t>(nv));
  for (int i = 0; i < nv; ++i) grad_.push_back(h_.derivative(i));
  hess_.resize(static_cast<std::size_t>(nv));
  for (int i = 0; i < nv; ++i) {
    for (int j = 0; j < nv; ++j) hess_[i].push_back(grad_[i].derivative(j));
  }
  const Mat second = hessian(Vec::Zero(nv));
  Eigen::SelfAdjointEigenSolver<Mat> eig(second);
  if (eig.eigenvalues().minCoeff() <= 0.0) {
    throw ConvexityError("graph germ quadratic part is not positive definite");
  }
}

GraphGerm GraphGerm::planar(std::span<const double> coeffs) {
  const int order = std::max<int>(5, static_cast<int>(coeffs.size()) - 1);
  TaylorSeries h(1, order);
  for (std::size_t k = 0; k < coeffs.size(); ++k) h[k] = coeffs[k];
  return GraphGerm(std::move(h));
}

bool GraphGerm::tangent_at_origin(double tol) const {
  for (std::size_t i = 0; i < h_.size(); ++i) {
    if (h_.degree(i) == 1 && std::abs(h_[i]) > tol) return false;
  }
  return true;
}

double GraphGerm::value(const Vec& x) const {
  return h_.evaluate(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

Vec GraphGerm::gradient(const Vec& x) const {
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) g(i) = grad_[static_cast<std::size_t>(i)].evaluate(xs);
  return g;
}

Mat GraphGerm::hessian(const Vec& x) const {
  const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
  Mat h(x.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    for (Eigen::Index j = 0; j < x.size(); ++j) h(i, j) = hess_[i][j].evaluate(xs);
  }
  return h;
}

double GraphGerm::derivative(std::span<const int> multi_index, const Vec& x) const {
  TaylorSeries d = h_;
  for (int v = 0; v < static_cast<int>(multi_index.size()); ++v) {
    for (int k = 0; k < multi_index[v]; ++k) d = d.derivative(v);
  }
  return d.evaluate(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

double GraphGerm::jet(std::span<const int> multi_index) const {
  double factor = 1.0;
  for (int e : multi_index) {
    for (int k = 2; k <= e; ++k) factor *= k;
  }
  return h_.coeff(multi_index) * factor;
}

long double GraphGerm::value_1d(long double x) const {
  long double r = 0.0L;
  for (int k = h_.order(); k >= 0; --k) r = r * x + static_cast<long double>(h_.coeff(k));
  return r;
}

long double GraphGerm::slope_1d(long double x) const {
  long double r = 0.0L;
  for (int k = h_.order(); k >= 1; --k) r = r * x + static_cast<long double>(k) * h_.coeff(k);
  return r;
}

long double GraphGerm::curvature_term_1d(long double x) const {
  long double r = 0.0L;
  for (int k = h_.order(); k >= 2; --k) {
    r = r * x + static_cast<long double>(k) * (k - 1) * h_.coeff(k);
  }
  return r;
}

}  // namespace ktb
