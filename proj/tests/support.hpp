#pragma once

#include <cmath>
#include <random>

#include "ktb/linalg.hpp"

namespace ktb::testing {

inline Vec random_unit(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(n);
  for (;;) {
    for (int i = 0; i < n; ++i) v(i) = gauss(rng);
    if (v.norm() > 1e-3) return v.normalized();
  }
}

/// Symmetric positive definite matrix with eigenvalues in [1, cond], randomly rotated.
inline Mat random_spd(std::mt19937_64& rng, int n, double cond) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Mat g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = gauss(rng);
  Eigen::HouseholderQR<Mat> qr(g);
  const Mat q = qr.householderQ();
  Vec eig(n);
  eig(0) = 1.0;
  eig(n - 1) = cond;
  for (int i = 1; i < n - 1; ++i) eig(i) = 1.0 + (cond - 1.0) * unif(rng);
  return q * eig.asDiagonal() * q.transpose();
}

}  // namespace ktb::testing
