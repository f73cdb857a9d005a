#include "ktb/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "ktb/errors.hpp"

namespace ktb {

Vec normalized(const Vec& v) {
  const double norm = v.norm();
  if (!(norm > 1e-300) || !std::isfinite(norm)) {
    throw DomainError("cannot normalize a zero or non-finite vector");
  }
  return v / norm;
}

Mat tangent_basis(const Vec& u) {
  const Eigen::Index n = u.size();
  const Vec unit = normalized(u);
  // Householder reflection mapping e_k to unit; its other columns span the complement.
  Eigen::Index k = 0;
  unit.cwiseAbs().maxCoeff(&k);
  Vec e = Vec::Zero(n);
  e(k) = unit(k) > 0 ? 1.0 : -1.0;
  Vec w = e - unit;
  Mat reflect = Mat::Identity(n, n);
  if (w.norm() > 1e-14) {
    w.normalize();
    reflect -= 2.0 * w * w.transpose();
  }
  Mat basis(n, n - 1);
  Eigen::Index col = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i != k) basis.col(col++) = reflect.col(i);
  }
  return basis;
}

Vec rotate_quarter(const Vec& v) {
  Vec r(2);
  r << -v(1), v(0);
  return r;
}

double projective_distance(const Vec& a, const Vec& b) {
  const double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
  const double s = (a / a.norm() - (a.dot(b) >= 0 ? 1.0 : -1.0) * b / b.norm()).norm();
  // The chord formula stays accurate for nearly parallel lines, acos does not.
  if (c > 0.5) return 2.0 * std::asin(std::min(1.0, s / 2.0));
  return std::acos(std::min(1.0, c));
}

Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

}  // namespace ktb
