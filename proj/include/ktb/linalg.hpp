#pragma once

#include <Eigen/Dense>

namespace ktb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Unit vector along v. Throws DomainError for a (numerically) zero vector.
Vec normalized(const Vec& v);

/// n x (n-1) matrix whose orthonormal columns span the complement of u.
Mat tangent_basis(const Vec& u);

/// Counter-clockwise quarter turn of a planar vector.
Vec rotate_quarter(const Vec& v);

/// Euclidean angle between the lines spanned by a and b, in [0, pi/2].
double projective_distance(const Vec& a, const Vec& b);

Vec make_vec(std::initializer_list<double> values);

}  // namespace ktb
