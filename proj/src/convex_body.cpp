#include "ktb/convex_body.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>

#include "ktb/errors.hpp"

namespace ktb {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Vec> lattice_directions(int n) {
  // All nonzero vectors in {-1, 0, 1}^n: 8 directions in the plane, 26 in space.
  std::vector<Vec> dirs;
  const int total = static_cast<int>(std::pow(3, n));
  for (int code = 0; code < total; ++code) {
    Vec v(n);
    int c = code;
    for (int i = 0; i < n; ++i) {
      v(i) = static_cast<double>(c % 3) - 1.0;
      c /= 3;
    }
    if (v.norm() > 0) dirs.push_back(v.normalized());
  }
  return dirs;
}

double unit_ball_volume(int n) {
  return std::pow(kPi, n / 2.0) / std::tgamma(n / 2.0 + 1.0);
}

/// Root of g in [lo, hi] where g changes sign; bisection then Newton polish.
double refine_root(const std::function<double(double)>& g, const std::function<double(double)>& gp,
                   double lo, double hi) {
  double glo = g(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= std::min(lo, hi) || mid >= std::max(lo, hi)) break;
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm < 0) == (glo < 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
    if (std::abs(hi - lo) <= 1e-15 * std::max(1.0, std::abs(mid))) break;
  }
  double t = 0.5 * (lo + hi);
  double gt = g(t);
  for (int it = 0; it < 4; ++it) {
    const double slope = gp(t);
    if (slope == 0.0 || !std::isfinite(slope)) break;
    const double next = t - gt / slope;
    const double gn = g(next);
    if (!(std::abs(gn) < std::abs(gt))) break;
    t = next;
    gt = gn;
  }
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// ConvexBody defaults

std::vector<Vec> ConvexBody::boundary_seeds() const {
  std::vector<Vec> seeds;
  const Vec c = interior_point();
  for (const Vec& d : lattice_directions(dimension())) {
    seeds.push_back(radial_boundary_point(*this, c, d));
  }
  return seeds;
}

double ConvexBody::support(const Vec& u) const {
  const Vec p = gauss_inverse(*this, u);
  return p.dot(u);
}

Vec ConvexBody::support_point(const Vec& u) const { return gauss_inverse(*this, u); }

BodyPtr ConvexBody::polar() const {
  return std::make_shared<PolarBody>(self());
}

TaylorSeries ConvexBody::level_series(std::span<const TaylorSeries>) const {
  throw DomainError("body kind '" + kind() + "' has no closed-form jets");
}

// ---------------------------------------------------------------------------
// Ellipsoid

Ellipsoid::Ellipsoid(Mat a, Vec center) : a_(std::move(a)), c_(std::move(center)) {
  if (a_.rows() != a_.cols() || a_.rows() < 2) throw DomainError("ellipsoid matrix must be square");
  if (c_.size() == 0) c_ = Vec::Zero(a_.rows());
  if (c_.size() != a_.rows()) throw DomainError("ellipsoid center has wrong dimension");
  if ((a_ - a_.transpose()).norm() > 1e-12 * a_.norm()) {
    throw DomainError("ellipsoid matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(a_);
  if (eig.eigenvalues().minCoeff() <= 0) throw ConvexityError("ellipsoid matrix not positive definite");
  a_inv_ = a_.inverse();
  scale_ = 2.0 / std::sqrt(eig.eigenvalues().minCoeff());
}

BodyPtr Ellipsoid::make(Mat a, Vec center) {
  return std::make_shared<Ellipsoid>(std::move(a), std::move(center));
}

BodyPtr Ellipsoid::ball(int dim, double radius, Vec center) {
  return make(Mat::Identity(dim, dim) / (radius * radius), std::move(center));
}

BodyPtr Ellipsoid::with_semi_axes(const Vec& semi_axes, Vec center) {
  return make(semi_axes.array().square().inverse().matrix().asDiagonal(), std::move(center));
}

double Ellipsoid::level(const Vec& x) const {
  const Vec y = x - c_;
  return y.dot(a_ * y);
}

Vec Ellipsoid::level_gradient(const Vec& x) const { return 2.0 * a_ * (x - c_); }

Mat Ellipsoid::level_hessian(const Vec&) const { return 2.0 * a_; }

double Ellipsoid::support(const Vec& u) const {
  return std::sqrt(u.dot(a_inv_ * u)) + c_.dot(u);
}

Vec Ellipsoid::support_point(const Vec& u) const {
  const Vec w = a_inv_ * u;
  return w / std::sqrt(u.dot(w)) + c_;
}

std::optional<double> Ellipsoid::exact_volume() const {
  return unit_ball_volume(dimension()) / std::sqrt(a_.determinant());
}

BodyPtr Ellipsoid::polar() const {
  if (c_.norm() == 0.0) return make(a_inv_);
  return ConvexBody::polar();
}

TaylorSeries Ellipsoid::level_series(std::span<const TaylorSeries> x) const {
  const int n = dimension();
  std::vector<TaylorSeries> y;
  for (int i = 0; i < n; ++i) y.push_back(x[i] - c_(i));
  TaylorSeries result = y[0] * 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (a_(i, j) != 0.0) result += y[i] * y[j] * a_(i, j);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Superellipsoid

Superellipsoid::Superellipsoid(Vec semi_axes, double exponent, Vec center)
    : a_(std::move(semi_axes)), p_(exponent), c_(std::move(center)) {
  if (a_.size() < 2) throw DomainError("superellipsoid needs dimension >= 2");
  if (c_.size() == 0) c_ = Vec::Zero(a_.size());
  if (!(p_ >= 2.0)) throw ConvexityError("superellipsoid exponent must be >= 2");
  if ((a_.array() <= 0).any()) throw DomainError("superellipsoid semi-axes must be positive");
}

BodyPtr Superellipsoid::make(Vec semi_axes, double exponent, Vec center) {
  return std::make_shared<Superellipsoid>(std::move(semi_axes), exponent, std::move(center));
}

// Dual norm: with w = a * u and q = p / (p - 1), h(u) = <c, u> + |w|_q.
double Superellipsoid::support(const Vec& u) const {
  const double q = p_ / (p_ - 1.0);
  const Vec w = a_.cwiseProduct(u);
  return c_.dot(u) + std::pow(w.cwiseAbs().array().pow(q).sum(), 1.0 / q);
}

Vec Superellipsoid::support_point(const Vec& u) const {
  const double q = p_ / (p_ - 1.0);
  const Vec w = a_.cwiseProduct(u);
  const double norm = std::pow(w.cwiseAbs().array().pow(q).sum(), 1.0 / q);
  if (!(norm > 0.0)) throw DomainError("support point needs a nonzero direction");
  Vec x(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double y = std::pow(std::abs(w(i)) / norm, q - 1.0);
    x(i) = c_(i) + a_(i) * (w(i) < 0.0 ? -y : y);
  }
  return x;
}

double Superellipsoid::level(const Vec& x) const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a_.size(); ++i) s += std::pow(std::abs((x(i) - c_(i)) / a_(i)), p_);
  return s;
}

Vec Superellipsoid::level_gradient(const Vec& x) const {
  Vec g(a_.size());
  for (Eigen::Index i = 0; i < a_.size(); ++i) {
    const double y = (x(i) - c_(i)) / a_(i);
    g(i) = p_ * std::copysign(std::pow(std::abs(y), p_ - 1.0), y) / a_(i);
  }
  return g;
}

Mat Superellipsoid::level_hessian(const Vec& x) const {
  Mat h = Mat::Zero(a_.size(), a_.size());
  for (Eigen::Index i = 0; i < a_.size(); ++i) {
    const double y = (x(i) - c_(i)) / a_(i);
    h(i, i) = p_ * (p_ - 1.0) * std::pow(std::abs(y), p_ - 2.0) / (a_(i) * a_(i));
  }
  return h;
}

TaylorSeries Superellipsoid::level_series(std::span<const TaylorSeries> x) const {
  const double rounded = std::round(p_);
  if (rounded != p_ || static_cast<long>(rounded) % 2 != 0) {
    throw DomainError("superellipsoid jets need an even integer exponent");
  }
  TaylorSeries result = x[0] * 0.0;
  for (Eigen::Index i = 0; i < a_.size(); ++i) {
    result += pow_int((x[i] - c_(i)) / a_(i), static_cast<int>(rounded));
  }
  return result;
}

// ---------------------------------------------------------------------------
// AffineImageBody

AffineImageBody::AffineImageBody(BodyPtr base, Mat linear, Vec offset)
    : base_(std::move(base)), m_(std::move(linear)), b_(std::move(offset)) {
  const int n = base_->dimension();
  if (m_.rows() != n || m_.cols() != n) throw DomainError("affine map has wrong dimension");
  if (b_.size() == 0) b_ = Vec::Zero(n);
  Eigen::FullPivLU<Mat> lu(m_);
  if (!lu.isInvertible()) throw DomainError("affine map is singular");
  m_inv_ = lu.inverse();
}

BodyPtr AffineImageBody::make(BodyPtr base, Mat linear, Vec offset) {
  return std::make_shared<AffineImageBody>(std::move(base), std::move(linear), std::move(offset));
}

BodyPtr AffineImageBody::scaled(BodyPtr base, double factor) {
  const int n = base->dimension();
  return make(std::move(base), factor * Mat::Identity(n, n));
}

double AffineImageBody::level(const Vec& x) const { return base_->level(to_base(x)); }

Vec AffineImageBody::level_gradient(const Vec& x) const {
  return m_inv_.transpose() * base_->level_gradient(to_base(x));
}

Mat AffineImageBody::level_hessian(const Vec& x) const {
  return m_inv_.transpose() * base_->level_hessian(to_base(x)) * m_inv_;
}

Vec AffineImageBody::interior_point() const { return m_ * base_->interior_point() + b_; }

double AffineImageBody::length_scale() const {
  Eigen::JacobiSVD<Mat> svd(m_);
  return base_->length_scale() * svd.singularValues()(0);
}

bool AffineImageBody::symmetric_about_origin() const {
  return base_->symmetric_about_origin() && b_.norm() == 0.0;
}

std::vector<Vec> AffineImageBody::boundary_seeds() const {
  std::vector<Vec> seeds = base_->boundary_seeds();
  for (Vec& s : seeds) s = m_ * s + b_;
  return seeds;
}

double AffineImageBody::support(const Vec& u) const {
  return base_->support(m_.transpose() * u) + b_.dot(u);
}

Vec AffineImageBody::support_point(const Vec& u) const {
  return m_ * base_->support_point(m_.transpose() * u) + b_;
}

std::optional<double> AffineImageBody::exact_volume() const {
  auto v = base_->exact_volume();
  if (!v) return std::nullopt;
  return *v * std::abs(m_.determinant());
}

TaylorSeries AffineImageBody::level_series(std::span<const TaylorSeries> x) const {
  const int n = dimension();
  std::vector<TaylorSeries> y;
  for (int i = 0; i < n; ++i) {
    TaylorSeries yi = x[0] * 0.0;
    for (int j = 0; j < n; ++j) {
      if (m_inv_(i, j) != 0.0) yi += (x[j] - b_(j)) * m_inv_(i, j);
    }
    y.push_back(std::move(yi));
  }
  return base_->level_series(y);
}

// ---------------------------------------------------------------------------
// PolarBody

PolarBody::PolarBody(BodyPtr base) : base_(std::move(base)) {
  const Vec origin = Vec::Zero(base_->dimension());
  if (!(base_->level(origin) < 1.0)) {
    throw DomainError("polar dual needs the origin in the interior of the body");
  }
  if (!base_->bounded()) throw DomainError("polar dual needs a bounded body");
  double min_support = std::numeric_limits<double>::infinity();
  for (const Vec& d : lattice_directions(base_->dimension())) {
    min_support = std::min(min_support, radial_boundary_point(*base_, origin, d).norm());
  }
  scale_ = 2.0 / min_support;
}

double PolarBody::level(const Vec& x) const {
  if (x.norm() == 0.0) return 0.0;
  return base_->support(x);
}

Vec PolarBody::level_gradient(const Vec& x) const {
  if (x.norm() == 0.0) throw DomainError("support function is not differentiable at 0");
  return base_->support_point(x);
}

Mat PolarBody::level_hessian(const Vec& x) const {
  const double r = x.norm();
  if (r == 0.0) throw DomainError("support function is not differentiable at 0");
  const Vec u = x / r;
  const Vec p = base_->support_point(u);
  const Vec g = base_->level_gradient(p);
  const Mat basis = tangent_basis(u);
  const Mat shape = basis.transpose() * base_->level_hessian(p) * basis / g.norm();
  return basis * shape.inverse() * basis.transpose() / r;
}

double PolarBody::support(const Vec& u) const {
  const Vec origin = Vec::Zero(dimension());
  const double norm = u.norm();
  const Vec boundary = radial_boundary_point(*base_, origin, u / norm);
  return norm / boundary.norm();
}

Vec PolarBody::support_point(const Vec& u) const {
  const Vec origin = Vec::Zero(dimension());
  const Vec boundary = radial_boundary_point(*base_, origin, normalized(u));
  return legendre_point(*base_, boundary);
}

// ---------------------------------------------------------------------------
// GraphGermBody

GraphGermBody::GraphGermBody(GraphGerm germ, double radius)
    : germ_(std::move(germ)), radius_(radius) {
  if (!(radius_ > 0)) throw DomainError("germ chart radius must be positive");
}

BodyPtr GraphGermBody::make(GraphGerm germ, double radius) {
  return std::make_shared<GraphGermBody>(std::move(germ), radius);
}

double GraphGermBody::level(const Vec& x) const {
  const int nv = dimension() - 1;
  return 1.0 + germ_.value(Vec(x.head(nv))) - x(nv);
}

Vec GraphGermBody::level_gradient(const Vec& x) const {
  const int nv = dimension() - 1;
  Vec g(nv + 1);
  g.head(nv) = germ_.gradient(Vec(x.head(nv)));
  g(nv) = -1.0;
  return g;
}

Mat GraphGermBody::level_hessian(const Vec& x) const {
  const int nv = dimension() - 1;
  Mat h = Mat::Zero(nv + 1, nv + 1);
  h.topLeftCorner(nv, nv) = germ_.hessian(Vec(x.head(nv)));
  return h;
}

Vec GraphGermBody::interior_point() const {
  Vec p = Vec::Zero(dimension());
  p(dimension() - 1) = 0.1 * radius_;
  return p;
}

std::vector<Vec> GraphGermBody::boundary_seeds() const { return {Vec::Zero(dimension())}; }

TaylorSeries GraphGermBody::level_series(std::span<const TaylorSeries> x) const {
  const int nv = dimension() - 1;
  return 1.0 + germ_.taylor().evaluate(x.subspan(0, static_cast<std::size_t>(nv))) - x[nv];
}

// ---------------------------------------------------------------------------
// HyperboloidSheet

HyperboloidSheet::HyperboloidSheet(Mat b, double chart_radius) : b_(std::move(b)), radius_(chart_radius) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(b_);
  if (eig.eigenvalues().minCoeff() <= 0) throw ConvexityError("hyperboloid form must be positive definite");
}

BodyPtr HyperboloidSheet::make(Mat b, double chart_radius) {
  return std::make_shared<HyperboloidSheet>(std::move(b), chart_radius);
}

double HyperboloidSheet::level(const Vec& x) const {
  const int nv = dimension() - 1;
  const Vec y = x.head(nv);
  return std::sqrt(1.0 + y.dot(b_ * y)) - x(nv);
}

Vec HyperboloidSheet::level_gradient(const Vec& x) const {
  const int nv = dimension() - 1;
  const Vec y = x.head(nv);
  const double s = std::sqrt(1.0 + y.dot(b_ * y));
  Vec g(nv + 1);
  g.head(nv) = b_ * y / s;
  g(nv) = -1.0;
  return g;
}

Mat HyperboloidSheet::level_hessian(const Vec& x) const {
  const int nv = dimension() - 1;
  const Vec y = x.head(nv);
  const double s = std::sqrt(1.0 + y.dot(b_ * y));
  const Vec by = b_ * y;
  Mat h = Mat::Zero(nv + 1, nv + 1);
  h.topLeftCorner(nv, nv) = b_ / s - by * by.transpose() / (s * s * s);
  return h;
}

Vec HyperboloidSheet::interior_point() const {
  Vec p = Vec::Zero(dimension());
  p(dimension() - 1) = 0.1 * radius_;
  return p;
}

std::vector<Vec> HyperboloidSheet::boundary_seeds() const { return {Vec::Zero(dimension())}; }

TaylorSeries HyperboloidSheet::level_series(std::span<const TaylorSeries> x) const {
  const int nv = dimension() - 1;
  TaylorSeries q = x[0] * 0.0 + 1.0;
  for (int i = 0; i < nv; ++i) {
    for (int j = 0; j < nv; ++j) {
      if (b_(i, j) != 0.0) q += x[i] * x[j] * b_(i, j);
    }
  }
  return sqrt(q) - x[nv];
}

// ---------------------------------------------------------------------------
// Polygon

Polygon::Polygon(std::vector<Vec> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 3) throw DomainError("polygon needs at least three vertices");
  for (const Vec& v : vertices_) {
    if (v.size() != 2) throw DomainError("polygon vertices must be planar");
  }
  if (area() <= 0) throw DomainError("polygon vertices must be counter-clockwise");
}

Polygon Polygon::square(double h) {
  return Polygon({make_vec({h, -h}), make_vec({h, h}), make_vec({-h, h}), make_vec({-h, -h})});
}

double Polygon::area() const {
  double s = 0.0;
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const Vec& a = vertices_[i];
    const Vec& b = vertices_[(i + 1) % vertices_.size()];
    s += a(0) * b(1) - a(1) * b(0);
  }
  return 0.5 * s;
}

bool Polygon::contains_origin_strictly() const {
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const Vec& a = vertices_[i];
    const Vec& b = vertices_[(i + 1) % vertices_.size()];
    if (a(0) * b(1) - a(1) * b(0) <= 0) return false;
  }
  return true;
}

bool Polygon::symmetric_about_origin(double tol) const {
  for (const Vec& v : vertices_) {
    const bool found = std::any_of(vertices_.begin(), vertices_.end(),
                                   [&](const Vec& w) { return (v + w).norm() <= tol; });
    if (!found) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// OrientedLine

OrientedLine::OrientedLine(Vec p, const Vec& d) : point(std::move(p)), direction(normalized(d)) {
  if (point.size() != direction.size()) throw DomainError("line point and direction differ in dimension");
}

// ---------------------------------------------------------------------------
// Free operations

double boundary_defect(const ConvexBody& body, const Vec& p) {
  const double f = body.level(p);
  const double g = body.level_gradient(p).norm();
  if (!std::isfinite(f) || !(g > 0)) return std::numeric_limits<double>::infinity();
  return std::abs(f - 1.0) / g / body.length_scale();
}

bool on_boundary(const ConvexBody& body, const Vec& p, double tol) {
  return boundary_defect(body, p) <= tol;
}

Vec exterior_normal(const ConvexBody& body, const Vec& p) {
  if (!on_boundary(body, p)) {
    throw BoundaryMembershipError("point is not on the boundary (defect " +
                                  std::to_string(boundary_defect(body, p)) + ")");
  }
  return normalized(body.level_gradient(p));
}

namespace {

struct NewtonOutcome {
  bool converged = false;
  Vec point;
  int iterations = 0;
  double residual = std::numeric_limits<double>::infinity();
};

NewtonOutcome gauss_newton_solve(const ConvexBody& body, const Vec& u, Vec x) {
  const int n = body.dimension();
  NewtonOutcome out;
  Vec g = body.level_gradient(x);
  double lambda = std::max(g.dot(u), 1e-3 * g.norm());
  auto residual_vec = [&](const Vec& pt, double lam) {
    Vec r(n + 1);
    r.head(n) = body.level_gradient(pt) - lam * u;
    r(n) = body.level(pt) - 1.0;
    return r;
  };
  Vec r = residual_vec(x, lambda);
  int polish = 0;
  for (int it = 0; it < 100; ++it) {
    out.iterations = it;
    g = body.level_gradient(x);
    const double normal_error = (g / g.norm() - u).norm();
    const double level_error = std::abs(body.level(x) - 1.0);
    if (normal_error <= 1e-12 && level_error <= 1e-13) {
      // Converged; a couple of extra steps push the error to round-off, which
      // matters where the curvature is small and positions are ill-conditioned.
      if (!out.converged || normal_error < out.residual) {
        out.point = x;
        out.residual = normal_error;
      }
      out.converged = true;
      if (++polish > 2 || normal_error <= 1e-16) return out;
    } else if (!out.converged) {
      out.residual = normal_error;
    }
    Mat jac = Mat::Zero(n + 1, n + 1);
    jac.topLeftCorner(n, n) = body.level_hessian(x);
    jac.block(0, n, n, 1) = -u;
    jac.block(n, 0, 1, n) = g.transpose();
    const Vec step = jac.completeOrthogonalDecomposition().solve(-r);
    if (!step.allFinite()) break;
    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k < 40; ++k) {
      const Vec xn = x + alpha * step.head(n);
      const double ln = lambda + alpha * step(n);
      const double fn = body.level(xn);
      if (std::isfinite(fn) && ln > 0) {
        const Vec rn = residual_vec(xn, ln);
        if (rn.allFinite() && rn.norm() < r.norm()) {
          x = xn;
          lambda = ln;
          r = rn;
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  if (!out.converged) out.point = x;
  return out;
}

/// Planar fallback: the normal angle is monotone in the polar angle.
std::optional<Vec> gauss_inverse_angular(const ConvexBody& body, const Vec& u) {
  if (body.dimension() != 2 || !body.bounded()) return std::nullopt;
  const Vec c = body.interior_point();
  const double target = std::atan2(u(1), u(0));
  auto point_at = [&](double theta) {
    return radial_boundary_point(body, c, make_vec({std::cos(theta), std::sin(theta)}));
  };
  auto mismatch = [&](double theta) {
    const Vec n = body.level_gradient(point_at(theta));
    return std::remainder(std::atan2(n(1), n(0)) - target, 2.0 * kPi);
  };
  const int samples = 256;
  for (int k = 0; k < samples; ++k) {
    double lo = target - kPi + 2.0 * kPi * k / samples;
    double hi = target - kPi + 2.0 * kPi * (k + 1) / samples;
    double mlo = mismatch(lo);
    const double mhi = mismatch(hi);
    if (!(mlo <= 0 && mhi >= 0 && mhi - mlo < kPi)) continue;
    for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double mm = mismatch(mid);
      if (mm <= 0) {
        lo = mid;
        mlo = mm;
      } else {
        hi = mid;
      }
    }
    return point_at(0.5 * (lo + hi));
  }
  return std::nullopt;
}

}  // namespace

Vec gauss_inverse(const ConvexBody& body, const Vec& u_in) {
  if (u_in.size() != body.dimension()) throw DomainError("normal has wrong dimension");
  const Vec u = normalized(u_in);
  std::vector<Vec> seeds = body.boundary_seeds();
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    order.emplace_back(-normalized(body.level_gradient(seeds[i])).dot(u), i);
  }
  std::sort(order.begin(), order.end());
  NewtonOutcome best;
  for (const auto& entry : order) {
    NewtonOutcome attempt = gauss_newton_solve(body, u, seeds[entry.second]);
    if (attempt.converged) return attempt.point;
    if (attempt.residual < best.residual) best = attempt;
  }
  if (auto p = gauss_inverse_angular(body, u)) {
    const Vec n = normalized(body.level_gradient(*p));
    if ((n - u).norm() <= 1e-10) return *p;
  }
  throw ConvergenceError("Gauss map inversion did not converge", best.iterations, best.residual);
}

std::optional<std::pair<double, double>> line_intersection(const ConvexBody& body, const Vec& p,
                                                           const Vec& v_in) {
  const double vnorm = v_in.norm();
  const Vec v = normalized(v_in);
  const double scale = body.length_scale();
  const double reach = body.bounded() ? 2.0 * scale : 1e3 * scale;
  auto g = [&](double t) { return body.level(p + t * v) - 1.0; };
  auto gp = [&](double t) { return body.level_gradient(p + t * v).dot(v); };

  const double tc = (body.interior_point() - p).dot(v);
  double lo = tc - reach;
  double hi = tc + reach;
  double tmin;
  if (gp(lo) >= 0) {
    tmin = lo;
  } else if (gp(hi) <= 0) {
    tmin = hi;
  } else {
    for (int it = 0; it < 200 && hi - lo > 1e-15 * reach; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (gp(mid) < 0) lo = mid; else hi = mid;
    }
    tmin = 0.5 * (lo + hi);
  }
  if (!(g(tmin) < 0)) return std::nullopt;

  const double step = 1e-2 * scale;
  auto march = [&](double sign) {
    double inside = tmin;
    double t = tmin;
    for (int k = 0; k < 1000000; ++k) {
      t += sign * step;
      if (g(t) > 0) return refine_root(g, gp, inside, t);
      inside = t;
    }
    throw DomainError("line does not leave the body within the chart");
  };
  const double t_out = march(+1.0);
  const double t_in = march(-1.0);
  return std::make_pair(t_in / vnorm, t_out / vnorm);
}

Vec radial_boundary_point(const ConvexBody& body, const Vec& from, const Vec& dir_in) {
  const Vec dir = normalized(dir_in);
  if (!(body.level(from) < 1.0)) throw DomainError("radial construction needs an interior point");
  auto g = [&](double t) { return body.level(from + t * dir) - 1.0; };
  auto gp = [&](double t) { return body.level_gradient(from + t * dir).dot(dir); };
  const double step = 1e-2 * body.length_scale();
  double inside = 0.0;
  double t = 0.0;
  for (int k = 0; k < 1000000; ++k) {
    t += step;
    if (g(t) > 0) return from + refine_root(g, gp, inside, t) * dir;
    inside = t;
  }
  throw DomainError("ray does not leave the body within the chart");
}

Vec chord_second_intersection(const ConvexBody& body, const Vec& a, const Vec& d_in,
                              const ChordOptions& options) {
  if (!on_boundary(body, a)) throw BoundaryMembershipError("chord start is not on the boundary");
  const Vec d = normalized(d_in);
  const double scale = body.length_scale();
  const Vec grad = body.level_gradient(a);
  const double sign = grad.dot(d) < 0 ? 1.0 : -1.0;
  const Vec dir = sign * d;
  auto g = [&](double t) { return body.level(a + t * dir) - 1.0; };
  auto gp = [&](double t) { return body.level_gradient(a + t * dir).dot(dir); };
  const double threshold = options.tangency_fraction * scale;
  if (gp(0.0) >= 0) throw DegenerateChordError("chord direction is tangent to the boundary");

  const double step = options.march_fraction * scale;
  double inside = -1.0;
  double t = 0.0;
  double outside = -1.0;
  for (int k = 1; k < 1000000; ++k) {
    t = k * step;
    if (g(t) > 0) {
      outside = t;
      break;
    }
    inside = t;
  }
  if (outside < 0) throw DomainError("chord does not leave the body within the chart");
  if (inside < 0) {
    // The whole chord is shorter than one march step: locate the deepest point first.
    double lo = 0.0;
    double hi = outside;
    for (int it = 0; it < 200 && hi - lo > 1e-18 * scale; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (gp(mid) < 0) lo = mid; else hi = mid;
    }
    inside = 0.5 * (lo + hi);
    if (!(g(inside) < 0) || inside < 0.5 * threshold) {
      throw DegenerateChordError("chord is tangential (length below threshold)");
    }
  }
  const double tb = refine_root(g, gp, inside, outside);
  if (tb < threshold) throw DegenerateChordError("chord is tangential (length below threshold)");
  return a + tb * dir;
}

BodyPtr polar_dual(const BodyPtr& body) { return body->polar(); }

Polygon polar_dual(const Polygon& polygon) {
  if (!polygon.contains_origin_strictly()) {
    throw DomainError("polar dual needs the origin in the interior of the polygon");
  }
  const auto& v = polygon.vertices();
  std::vector<Vec> dual;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec& a = v[i];
    const Vec& b = v[(i + 1) % v.size()];
    Eigen::Matrix2d m;
    m << a(0), a(1), b(0), b(1);
    const Eigen::Vector2d w = m.inverse() * Eigen::Vector2d(1.0, 1.0);
    dual.push_back(make_vec({w(0), w(1)}));
  }
  return Polygon(std::move(dual));
}

Vec legendre_point(const ConvexBody& body, const Vec& v) {
  const Vec n = exterior_normal(body, v);
  const double s = n.dot(v);
  if (!(s > 1e-14 * v.norm())) {
    throw DomainError("Legendre map needs the origin in the interior of the indicatrix");
  }
  return n / s;
}

Mat second_fundamental_form(const ConvexBody& body, const Vec& p) {
  const Vec n = exterior_normal(body, p);
  const Mat basis = tangent_basis(n);
  const Mat form = basis.transpose() * body.level_hessian(p) * basis / body.level_gradient(p).norm();
  Eigen::SelfAdjointEigenSolver<Mat> eig(form);
  if (eig.eigenvalues().minCoeff() <= 0) {
    throw ConvexityError("second fundamental form is not positive definite");
  }
  return form;
}

namespace {

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[static_cast<std::size_t>(i)] = z;
    w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

double radial_volume(const ConvexBody& body, int resolution) {
  const Vec c = body.interior_point();
  if (body.dimension() == 2) {
    double s = 0.0;
    for (int k = 0; k < resolution; ++k) {
      const double t = 2.0 * kPi * k / resolution;
      const double r = (radial_boundary_point(body, c, make_vec({std::cos(t), std::sin(t)})) - c).norm();
      s += r * r;
    }
    return 0.5 * s * 2.0 * kPi / resolution;
  }
  std::vector<double> nodes, weights;
  gauss_legendre(resolution, nodes, weights);
  const int nphi = 2 * resolution;
  double s = 0.0;
  for (int i = 0; i < resolution; ++i) {
    const double z = nodes[static_cast<std::size_t>(i)];
    const double rho = std::sqrt(1.0 - z * z);
    for (int k = 0; k < nphi; ++k) {
      const double phi = 2.0 * kPi * k / nphi;
      const Vec d = make_vec({rho * std::cos(phi), rho * std::sin(phi), z});
      const double r = (radial_boundary_point(body, c, d) - c).norm();
      s += weights[static_cast<std::size_t>(i)] * r * r * r;
    }
  }
  return s * (2.0 * kPi / nphi) / 3.0;
}

/// Randomly shifted Halton points in the bounding box (dimension >= 4).
VolumeEstimate qmc_volume(const ConvexBody& body, double target) {
  const int n = body.dimension();
  const Vec c = body.interior_point();
  const double half = body.length_scale();
  const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  if (n > 12) throw DomainError("volume estimation supports dimension <= 12");
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int shifts = 8;
  for (long points = 1 << 14; points <= (1L << 22); points *= 4) {
    std::vector<double> estimates;
    for (int s = 0; s < shifts; ++s) {
      Vec shift(n);
      for (int i = 0; i < n; ++i) shift(i) = unif(rng);
      long hits = 0;
      for (long k = 1; k <= points; ++k) {
        Vec x(n);
        for (int i = 0; i < n; ++i) {
          double f = 1.0, r = 0.0;
          for (long j = k; j > 0; j /= primes[i]) {
            f /= primes[i];
            r += f * static_cast<double>(j % primes[i]);
          }
          r = std::fmod(r + shift(i), 1.0);
          x(i) = c(i) + half * (2.0 * r - 1.0);
        }
        if (body.level(x) < 1.0) ++hits;
      }
      estimates.push_back(std::pow(2.0 * half, n) * static_cast<double>(hits) / points);
    }
    double mean = 0.0;
    for (double e : estimates) mean += e;
    mean /= shifts;
    double var = 0.0;
    for (double e : estimates) var += (e - mean) * (e - mean);
    const double stderr_ = std::sqrt(var / (shifts - 1) / shifts);
    if (stderr_ <= target * mean) return {mean, stderr_, false};
    if (points == (1L << 22)) return {mean, stderr_, false};
  }
  return {};
}

}  // namespace

VolumeEstimate volume(const ConvexBody& body, double target) {
  if (auto exact = body.exact_volume()) return {*exact, 0.0, true};
  if (!body.bounded()) throw DomainError("volume of an unbounded body");
  const int n = body.dimension();
  if (n > 3) return qmc_volume(body, target);
  int resolution = n == 2 ? 64 : 16;
  double previous = radial_volume(body, resolution);
  const int max_resolution = n == 2 ? (1 << 16) : 512;
  while (resolution < max_resolution) {
    resolution *= 2;
    const double current = radial_volume(body, resolution);
    const double error = std::abs(current - previous);
    if (error <= target * std::abs(current)) return {current, error, false};
    previous = current;
  }
  throw PrecisionError("volume quadrature did not reach the requested accuracy");
}

GraphGerm boundary_germ(const ConvexBody& body, const Vec& origin, const Mat& frame, int order) {
  const int n = body.dimension();
  if (frame.rows() != n || frame.cols() != n) throw DomainError("frame has wrong shape");
  if (!on_boundary(body, origin, 1e-10)) throw BoundaryMembershipError("germ origin not on boundary");
  const int nv = n - 1;
  const Vec en = frame.col(n - 1);
  const double slope = body.level_gradient(origin).dot(en);
  if (!(slope < -1e-12 * body.level_gradient(origin).norm())) {
    throw DomainError("frame axis e_n must point into the body transversally");
  }
  std::vector<TaylorSeries> vars;
  for (int i = 0; i < nv; ++i) vars.push_back(TaylorSeries::variable(nv, order, i));
  TaylorSeries h(nv, order);
  for (int iter = 0; iter < order + 3; ++iter) {
    std::vector<TaylorSeries> x;
    for (int i = 0; i < n; ++i) {
      TaylorSeries xi = TaylorSeries::constant(nv, order, origin(i));
      for (int k = 0; k < nv; ++k) xi += vars[k] * frame(i, k);
      xi += h * frame(i, n - 1);
      x.push_back(std::move(xi));
    }
    const TaylorSeries residual = body.level_series(x) - 1.0;
    h -= residual / slope;
  }
  h[0] = 0.0;
  return GraphGerm(std::move(h));
}

}  // namespace ktb
