#include "ktb/osculation.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "ktb/errors.hpp"

namespace ktb {

namespace {

struct ConicCoeffs {
  double a, b, c, d, e, f;
};

ConicCoeffs conic_coeffs(const ConicQuadric& q) {
  if (q.dimension() != 2) throw PreconditionError("expected a planar conic");
  const Mat& m = q.matrix();
  return {m(0, 0), 2.0 * m(0, 1), m(1, 1), 2.0 * m(0, 2), 2.0 * m(1, 2), m(2, 2)};
}

// Root of the conic near y = 0 over x.
long double conic_branch(const ConicCoeffs& k, long double x) {
  const long double p = static_cast<long double>(k.b) * x + k.e;
  const long double q = (static_cast<long double>(k.a) * x + k.d) * x + k.f;
  if (k.c == 0.0) return -q / p;
  const long double disc = p * p - 4.0L * k.c * q;
  if (disc < 0.0L) throw DomainError("conic has no real point over this abscissa");
  const long double s = p >= 0.0L ? 1.0L : -1.0L;
  return -2.0L * q / (p + s * std::sqrt(disc));
}

// Graph y(x) of the conic through the origin, as a series.
TaylorSeries conic_graph_series(const ConicCoeffs& k, int order) {
  const double scale = std::max({std::abs(k.a), std::abs(k.b), std::abs(k.c), std::abs(k.e)});
  if (std::abs(k.e) < 1e-12 * scale) throw PreconditionError("conic is singular at the origin");
  if (std::abs(k.f) > 1e-9 * scale) throw PreconditionError("conic does not pass through the origin");
  if (std::abs(k.d) > 1e-9 * scale) throw PreconditionError("conic is not tangent to the x axis");
  const TaylorSeries x = TaylorSeries::variable(1, order, 0);
  TaylorSeries y(1, order);
  for (int it = 0; it <= order; ++it) {
    y = (k.a * x * x + k.b * x * y + k.c * y * y) / (-k.e);
  }
  return y;
}

void require_planar(const GraphGerm& curve) {
  if (curve.taylor().nvars() != 1) throw PreconditionError("planar germ required");
  if (std::abs(curve.taylor().coeff(1)) > 1e-10) {
    throw PreconditionError("planar germ must be tangent to the x axis");
  }
}

GraphGerm planar_restriction(const GraphGerm& alpha) {
  const TaylorSeries& h = alpha.taylor();
  std::vector<double> coeffs(static_cast<std::size_t>(h.order() + 1), 0.0);
  std::vector<int> e(static_cast<std::size_t>(h.nvars()), 0);
  for (int k = 0; k <= h.order(); ++k) {
    e[0] = k;
    coeffs[static_cast<std::size_t>(k)] = h.coeff(e);
  }
  coeffs[0] = 0.0;
  return GraphGerm::planar(coeffs);
}

void orthonormal_pair_complement(const Vec& a, const Vec& b, Mat* out) {
  const int n = static_cast<int>(a.size());
  Mat m(n, 2);
  m.col(0) = a;
  m.col(1) = b;
  Eigen::HouseholderQR<Mat> qr(m);
  const Mat q = qr.householderQ() * Mat::Identity(n, n);
  *out = q.rightCols(n - 2);
}

}  // namespace

ConicQuadric::ConicQuadric(const Mat& m) {
  if (m.rows() != m.cols() || m.rows() < 2) throw PreconditionError("quadric matrix must be square");
  m_ = 0.5 * (m + m.transpose());
  const Vec c = coefficients();
  const double norm = c.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw DegenerateDataError("quadric has no nonzero coefficient");
  double sign = 1.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    if (std::abs(c(i)) > 1e-13 * norm) {
      sign = c(i) > 0.0 ? 1.0 : -1.0;
      break;
    }
  }
  m_ *= sign / norm;
}

Vec ConicQuadric::coefficients() const {
  const int n = dimension();
  Vec c((n + 1) * (n + 2) / 2);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) c(k++) = i == j ? m_(i, i) : 2.0 * m_(i, j);
  }
  for (int i = 0; i < n; ++i) c(k++) = 2.0 * m_(i, n);
  c(k) = m_(n, n);
  return c;
}

ConicQuadric ConicQuadric::from_coefficients(int n, const Vec& coeffs) {
  if (coeffs.size() != (n + 1) * (n + 2) / 2) throw PreconditionError("wrong number of quadric coefficients");
  Mat m = Mat::Zero(n + 1, n + 1);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      if (i == j) {
        m(i, i) = coeffs(k++);
      } else {
        m(i, j) = m(j, i) = 0.5 * coeffs(k++);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    m(i, n) = m(n, i) = 0.5 * coeffs(k++);
  }
  m(n, n) = coeffs(k);
  return ConicQuadric(m);
}

ConicQuadric ConicQuadric::conic(double a, double b, double c, double d, double e, double f) {
  return from_coefficients(2, make_vec({a, b, c, d, e, f}));
}

ConicQuadric ConicQuadric::normal_form(double a, const Vec& c, const Mat& a_hat, const Vec& d) {
  const int m = static_cast<int>(c.size());
  if (d.size() != m || a_hat.rows() != m || a_hat.cols() != m) {
    throw PreconditionError("normal form blocks have inconsistent sizes");
  }
  const int n = m + 2;
  Mat q = Mat::Zero(n + 1, n + 1);
  q(0, 0) = a;
  for (int j = 0; j < m; ++j) {
    q(0, 1 + j) = q(1 + j, 0) = 0.5 * c(j);
    q(1 + j, n - 1) = q(n - 1, 1 + j) = -0.5 * d(j);
    for (int k = 0; k < m; ++k) q(1 + j, 1 + k) = 0.5 * (a_hat(j, k) + a_hat(k, j));
  }
  q(n - 1, n) = q(n, n - 1) = -0.5;
  return ConicQuadric(q);
}

double ConicQuadric::value(const Vec& x) const {
  Vec h(x.size() + 1);
  h << x, 1.0;
  return h.dot(m_ * h);
}

Vec ConicQuadric::gradient(const Vec& x) const {
  Vec h(x.size() + 1);
  h << x, 1.0;
  return 2.0 * (m_ * h).head(x.size());
}

ConicQuadric ConicQuadric::affine_image(const Mat& m, const Vec& b) const {
  const int n = dimension();
  Eigen::FullPivLU<Mat> lu(m);
  if (!lu.isInvertible()) throw DegenerateDataError("affine map is singular");
  const Mat inv = lu.inverse();
  Mat s = Mat::Identity(n + 1, n + 1);
  s.topLeftCorner(n, n) = inv;
  s.topRightCorner(n, 1) = -inv * b;
  return ConicQuadric(s.transpose() * m_ * s);
}

ConicQuadric ConicQuadric::restrict_to(const Vec& origin, const Mat& basis) const {
  const int n = dimension();
  const int k = static_cast<int>(basis.cols());
  Mat t = Mat::Zero(n + 1, k + 1);
  t.topLeftCorner(n, k) = basis;
  t.topRightCorner(n, 1) = origin;
  t(n, k) = 1.0;
  return ConicQuadric(t.transpose() * m_ * t);
}

double ConicQuadric::distance(const ConicQuadric& other) const {
  if (other.dimension() != dimension()) throw PreconditionError("quadrics live in different dimensions");
  const Vec a = coefficients();
  const Vec b = other.coefficients();
  return std::min((a - b).norm(), (a + b).norm());
}

Mat PlanarSectionFrame::matrix() const {
  const int n = dimension();
  Mat f(n, n);
  f.col(0) = e1;
  if (n > 2) f.middleCols(1, n - 2) = transverse;
  f.col(n - 1) = en;
  return f;
}

Vec PlanarSectionFrame::to_frame(const Vec& x) const { return matrix().transpose() * (x - origin); }

Vec PlanarSectionFrame::from_frame(const Vec& y) const { return origin + matrix() * y; }

PlanarSectionFrame PlanarSectionFrame::make(const ConvexBody& body, const Vec& origin, const Vec& u,
                                            const Vec& v, double margin) {
  if (!on_boundary(body, origin)) throw BoundaryMembershipError("section base point is not on the boundary");
  const Vec p = normalized(u);
  Vec q = v - v.dot(p) * p;
  if (q.norm() < 1e-12 * v.norm()) throw DomainError("section plane vectors are parallel");
  q.normalize();
  const Vec nu = exterior_normal(body, origin);
  const double np = nu.dot(p);
  const double nq = nu.dot(q);
  const double in_plane = std::hypot(np, nq);
  if (in_plane < margin) throw DomainError("section plane is tangent to the boundary");
  PlanarSectionFrame f;
  f.origin = origin;
  f.e1 = (nq * p - np * q) / in_plane;
  f.en = -(np * p + nq * q) / in_plane;
  const int n = static_cast<int>(origin.size());
  if (n > 2) {
    orthonormal_pair_complement(f.e1, f.en, &f.transverse);
  } else {
    f.transverse = Mat(n, 0);
  }
  return f;
}

ConicQuadric osculating_conic(const GraphGerm& curve) {
  require_planar(curve);
  const TaylorSeries& h = curve.taylor();
  if (h.order() < 4) throw PreconditionError("osculating conic needs the 4-jet");
  const double a2 = h.coeff(2);
  if (!(a2 > 0.0)) throw DegenerateDataError("zero curvature at the base point");
  const double a = a2;
  const double b = h.coeff(3) / a2;
  const double c = (h.coeff(4) - b * h.coeff(3)) / (a2 * a2);
  return ConicQuadric::conic(a, b, c, 0.0, -1.0, 0.0);
}

GraphGerm normalize_unit_curvature(const GraphGerm& curve) {
  require_planar(curve);
  const TaylorSeries& h = curve.taylor();
  const double lambda = 2.0 * h.coeff(2);
  std::vector<double> coeffs(static_cast<std::size_t>(h.order() + 1), 0.0);
  for (int k = 2; k <= h.order(); ++k) {
    coeffs[static_cast<std::size_t>(k)] = h.coeff(k) * std::pow(lambda, 1 - k);
  }
  return GraphGerm::planar(coeffs);
}

double fifth_order_gap(const GraphGerm& curve, const ConicQuadric& conic) {
  require_planar(curve);
  const TaylorSeries& h = curve.taylor();
  if (h.order() < 5) throw PreconditionError("fifth order gap needs the 5-jet");
  const ConicCoeffs k = conic_coeffs(conic);
  const TaylorSeries y = conic_graph_series(k, 5);
  for (int j = 0; j <= 4; ++j) {
    if (std::abs(h.coeff(j) - y.coeff(j)) > 1e-9 * std::max(1.0, std::abs(h.coeff(j)))) {
      throw PreconditionError("conic does not match the 4-jet of the curve");
    }
  }
  const double lambda = 2.0 * h.coeff(2);
  const double gap = (h.coeff(5) - y.coeff(5)) / std::pow(lambda, 4);

  // Richardson check on the sampled quotient (h - y) / x^5 in the unit-curvature chart,
  // with the admitted low-order jet mismatch removed.
  auto quotient = [&](long double s) {
    const long double x = s / lambda;
    long double low = 0.0L;
    for (int j = 4; j >= 0; --j) low = low * x + (h.coeff(j) - y.coeff(j));
    const long double diff = (curve.value_1d(x) - low - conic_branch(k, x)) * lambda;
    return static_cast<double>(diff / std::pow(s, 5.0L));
  };
  auto extrapolate = [&](double s0) {
    double t[3];
    for (int i = 0; i < 3; ++i) t[i] = quotient(s0 / std::pow(2.0, i));
    const double r0 = 2.0 * t[1] - t[0];
    const double r1 = 2.0 * t[2] - t[1];
    return (4.0 * r1 - r0) / 3.0;
  };
  const double e1 = extrapolate(0.004);
  const double e2 = extrapolate(0.002);
  const double tol = 0.05 * std::max({std::abs(gap), std::abs(e1), std::abs(e2)}) + 1e-5;
  if (std::abs(e1 - e2) > tol || std::abs(e2 - gap) > tol) {
    throw PrecisionError("fifth order gap is not stable under Richardson extrapolation");
  }
  return gap;
}

AffineCurvature affine_curvature(const GraphGerm& curve) {
  require_planar(curve);
  const TaylorSeries& h = curve.taylor();
  if (h.order() < 5) throw PreconditionError("affine curvature needs the 5-jet");
  const double f2 = 2.0 * h.coeff(2);
  const double f3 = 6.0 * h.coeff(3);
  const double f4 = 24.0 * h.coeff(4);
  const double f5 = 120.0 * h.coeff(5);
  if (!(f2 > 0.0)) throw DomainError("affine curvature needs positive curvature");
  AffineCurvature out;
  out.value = (3.0 * f2 * f4 - 5.0 * f3 * f3) / (9.0 * std::pow(f2, 8.0 / 3.0));
  out.derivative = (9.0 * f2 * f2 * f5 - 45.0 * f2 * f3 * f4 + 40.0 * f3 * f3 * f3) /
                   (27.0 * std::pow(f2, 4));
  return out;
}

SextacticTest is_sextactic(const GraphGerm& curve, double tol) {
  const double gap = fifth_order_gap(curve, osculating_conic(curve));
  return {std::abs(gap) <= tol, gap};
}

ParametricCurve::ParametricCurve(Map map, double period) : map_(std::move(map)), period_(period) {}

ParametricCurve ParametricCurve::ellipse(double a, double b) {
  return ParametricCurve([a, b](const TaylorSeries& t) {
    return std::array<TaylorSeries, 2>{a * cos(t), b * sin(t)};
  });
}

ParametricCurve ParametricCurve::bumped_ellipse(double a, double b, double eps) {
  return ParametricCurve([a, b, eps](const TaylorSeries& t) {
    const TaylorSeries r = 1.0 + eps * pow_int(sin(t), 5);
    return std::array<TaylorSeries, 2>{a * cos(t) * r, b * sin(t) * r};
  });
}

Vec ParametricCurve::point(double theta) const {
  const auto xy = map_(TaylorSeries::variable(1, 1, 0, theta));
  return make_vec({xy[0].constant_term(), xy[1].constant_term()});
}

Mat ParametricCurve::frame(double theta) const {
  const auto xy = map_(TaylorSeries::variable(1, 1, 0, theta));
  const Vec t = normalized(make_vec({xy[0].coeff(1), xy[1].coeff(1)}));
  Mat f(2, 2);
  f.col(0) = t;
  f.col(1) = rotate_quarter(t);
  return f;
}

GraphGerm ParametricCurve::germ(double theta, int order) const {
  auto xy = map_(TaylorSeries::variable(1, order, 0, theta));
  const Mat f = frame(theta);
  xy[0][0] = 0.0;
  xy[1][0] = 0.0;
  TaylorSeries x = f(0, 0) * xy[0] + f(1, 0) * xy[1];
  TaylorSeries y = f(0, 1) * xy[0] + f(1, 1) * xy[1];
  x[0] = 0.0;
  y[0] = 0.0;
  TaylorSeries h = y.compose(x.revert());
  h[0] = 0.0;
  h[1] = 0.0;
  return GraphGerm(h);
}

ConicQuadric osculating_conic(const ParametricCurve& curve, double theta) {
  return osculating_conic(curve.germ(theta)).affine_image(curve.frame(theta), curve.point(theta));
}

std::vector<double> sextactic_parameters(const ParametricCurve& curve, int samples) {
  if (samples < 8) throw PlanError("too few samples for sextactic detection");
  auto deriv = [&](double t) { return affine_curvature(curve.germ(t)).derivative; };
  const double step = curve.period() / samples;
  std::vector<double> roots;
  double t0 = 0.0;
  double v0 = deriv(t0);
  for (int i = 1; i <= samples; ++i) {
    const double t1 = i * step;
    const double v1 = deriv(t1);
    if (v0 == 0.0) {
      roots.push_back(t0);
    } else if (v0 * v1 < 0.0) {
      double lo = t0;
      double hi = t1;
      double vlo = v0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double vm = deriv(mid);
        if (vm * vlo <= 0.0) {
          hi = mid;
        } else {
          lo = mid;
          vlo = vm;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    t0 = t1;
    v0 = v1;
  }
  return roots;
}

GraphGerm curve_germ(const ConvexBody& body, const Vec& p, int order) {
  if (body.dimension() != 2) throw PreconditionError("curve germs need a planar body");
  const Vec nu = exterior_normal(body, p);
  Mat f(2, 2);
  f.col(0) = rotate_quarter(nu);
  f.col(1) = -nu;
  return boundary_germ(body, p, f, order);
}

namespace {

OsculatingQuadric solve_osculating_quadric(const GraphGerm& alpha) {
  const TaylorSeries& full = alpha.taylor();
  const int nv = full.nvars();
  if (nv < 2) throw PreconditionError("osculating quadric needs a hypersurface in dimension >= 3");
  const int m = nv - 1;
  const int n = nv + 1;
  const ConicQuadric gamma = osculating_conic(planar_restriction(alpha));
  const ConicCoeffs k = conic_coeffs(gamma);
  const double scale = -1.0 / k.e;
  const double a = k.a * scale;
  const double b = k.b * scale;
  const double e = k.c * scale;

  const TaylorSeries h = full.with_order(3);
  const TaylorSeries x1 = TaylorSeries::variable(nv, 3, 0);
  std::vector<TaylorSeries> xs;
  for (int j = 0; j < m; ++j) xs.push_back(TaylorSeries::variable(nv, 3, 1 + j));

  const TaylorSeries base = a * x1 * x1 + b * x1 * h + e * h * h - h;

  std::vector<TaylorSeries> unknowns;
  for (int j = 0; j < m; ++j) {
    unknowns.push_back(xs[j]);
    unknowns.push_back(x1 * xs[j]);
    unknowns.push_back(h * xs[j]);
  }
  for (int j = 0; j < m; ++j) {
    for (int l = j; l < m; ++l) unknowns.push_back(xs[j] * xs[l]);
  }
  std::vector<std::vector<int>> monomials;
  for (int j = 0; j < m; ++j) {
    for (int p = 0; p <= 2; ++p) {
      std::vector<int> ex(static_cast<std::size_t>(nv), 0);
      ex[0] = p;
      ex[static_cast<std::size_t>(1 + j)] = 1;
      monomials.push_back(ex);
    }
  }
  for (int j = 0; j < m; ++j) {
    for (int l = j; l < m; ++l) {
      std::vector<int> ex(static_cast<std::size_t>(nv), 0);
      ex[static_cast<std::size_t>(1 + j)] += 1;
      ex[static_cast<std::size_t>(1 + l)] += 1;
      monomials.push_back(ex);
    }
  }
  const int count = static_cast<int>(unknowns.size());
  Mat sys(count, count);
  Vec rhs(count);
  for (int r = 0; r < count; ++r) {
    rhs(r) = -base.coeff(monomials[static_cast<std::size_t>(r)]);
    for (int c = 0; c < count; ++c) {
      sys(r, c) = unknowns[static_cast<std::size_t>(c)].coeff(monomials[static_cast<std::size_t>(r)]);
    }
  }
  Eigen::JacobiSVD<Mat> svd(sys, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 1e-12 * std::max(1.0, sv(0))) {
    throw DegenerateDataError("osculating quadric conditions are degenerate");
  }
  const Vec sol = svd.solve(rhs);

  OsculatingQuadric out{ConicQuadric(Mat::Identity(n + 1, n + 1)), a, b, e,
                        Vec(m), Vec(m), Mat::Zero(m, m), Vec(m)};
  Mat q = Mat::Zero(n + 1, n + 1);
  q(0, 0) = a;
  q(0, n - 1) = q(n - 1, 0) = 0.5 * b;
  q(n - 1, n - 1) = e;
  q(n - 1, n) = q(n, n - 1) = -0.5;
  for (int j = 0; j < m; ++j) {
    out.l(j) = sol(3 * j);
    out.c(j) = sol(3 * j + 1);
    out.d(j) = -sol(3 * j + 2);
    q(1 + j, n) = q(n, 1 + j) = 0.5 * out.l(j);
    q(0, 1 + j) = q(1 + j, 0) = 0.5 * out.c(j);
    q(1 + j, n - 1) = q(n - 1, 1 + j) = -0.5 * out.d(j);
  }
  int idx = 3 * m;
  for (int j = 0; j < m; ++j) {
    for (int l = j; l < m; ++l) {
      const double v = sol(idx++);
      if (j == l) {
        out.a_hat(j, j) = v;
      } else {
        out.a_hat(j, l) = out.a_hat(l, j) = 0.5 * v;
      }
    }
  }
  q.block(1, 1, m, m) = out.a_hat;
  Eigen::SelfAdjointEigenSolver<Mat> eig(out.a_hat);
  const double lam = eig.eigenvalues().cwiseAbs().minCoeff();
  if (lam <= 1e-10 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff())) {
    throw DegenerateDataError("osculating quadric is degenerate in the transverse directions");
  }
  out.frame_quadric = ConicQuadric(q);
  return out;
}

}  // namespace

OsculatingQuadric osculating_quadric_along_curve(const GraphGerm& alpha) {
  const TaylorSeries& h = alpha.taylor();
  std::vector<int> ex(static_cast<std::size_t>(h.nvars()), 0);
  ex[0] = 3;
  if (std::abs(h.coeff(ex)) > 1e-12) {
    throw PreconditionError("frame is not normalized: the germ has an x1^3 term along the section");
  }
  return solve_osculating_quadric(alpha);
}

ConicQuadric osculating_quadric_along_curve(const ConvexBody& body, const PlanarSectionFrame& frame,
                                            OsculatingQuadric* details) {
  if (body.dimension() < 3) throw PreconditionError("osculating quadric needs dimension >= 3");
  const GraphGerm alpha = boundary_germ(body, frame.origin, frame.matrix(), 6);
  OsculatingQuadric q = solve_osculating_quadric(alpha);
  ConicQuadric world = q.frame_quadric.affine_image(frame.matrix(), frame.origin);
  if (details != nullptr) *details = std::move(q);
  return world;
}

PlanarGraph section_graph(const ConicQuadric& frame_quadric, long double radius) {
  const int n = frame_quadric.dimension();
  Mat basis = Mat::Zero(n, 2);
  basis(0, 0) = 1.0;
  basis(n - 1, 1) = 1.0;
  const ConicCoeffs k = conic_coeffs(frame_quadric.restrict_to(Vec::Zero(n), basis));
  PlanarGraph g;
  g.value = [k](long double x) { return conic_branch(k, x); };
  g.slope = [k](long double x) {
    const long double y = conic_branch(k, x);
    return -(2.0L * k.a * x + k.b * y + k.d) / (k.b * x + 2.0L * k.c * y + k.e);
  };
  g.radius = radius;
  return g;
}

namespace {

GermPairChain section_chain(const GraphGerm& alpha, const ConicQuadric& frame_quadric) {
  if (frame_quadric.dimension() != alpha.dimension()) {
    throw PreconditionError("quadric and germ dimensions differ");
  }
  return GermPairChain(PlanarGraph::from_germ(planar_restriction(alpha), 0.25L),
                       section_graph(frame_quadric));
}

}  // namespace

DeviationFit normal_field_gap(const GraphGerm& alpha, const ConicQuadric& frame_quadric,
                              const DyadicGrid& grid) {
  const GermPairChain chain = section_chain(alpha, frame_quadric);
  const int n = alpha.dimension();
  std::function<double(double)> gap = [&](double t) {
    const double zeta = static_cast<double>(chain.zeta(t));
    Vec xb = Vec::Zero(n - 1);
    xb(0) = zeta;
    Vec nb(n);
    nb << alpha.gradient(xb), -1.0;
    nb.normalize();
    Vec y = Vec::Zero(n);
    y(0) = t;
    y(n - 1) = static_cast<double>(chain.gamma().value(t));
    Vec ng = frame_quadric.gradient(y);
    if (ng(n - 1) > 0.0) ng = -ng;
    ng.normalize();
    return (ng - nb).norm();
  };
  std::function<double(double)> zero = [](double) { return 0.0; };
  DyadicGrid absolute = grid;
  absolute.relative_floor = false;
  return deviation_exponent(gap, zero, absolute);
}

DeviationFit normal_angle_gap(const GraphGerm& alpha, const ConicQuadric& frame_quadric,
                              const DyadicGrid& grid) {
  const GermPairChain chain = section_chain(alpha, frame_quadric);
  ChartMapL beta = [&](long double t) { return std::atan2(-1.0L, chain.alpha().slope(chain.zeta(t))); };
  ChartMapL gamma = [&](long double t) { return std::atan2(-1.0L, chain.gamma().slope(t)); };
  return deviation_exponent(beta, gamma, grid);
}

double planar_section_conic_residual(const ConvexBody& body, const SectionPlane& plane, int samples) {
  if (samples < 6) throw PlanError("conic fit needs at least 6 section points");
  if (!(body.level(plane.point) < 1.0)) throw DomainError("section plane point must lie inside the body");
  const Vec u = normalized(plane.u);
  Vec v = plane.v - plane.v.dot(u) * u;
  if (v.norm() < 1e-12) throw DomainError("section plane vectors are parallel");
  v.normalize();
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    const double phi = 2.0 * M_PI * i / samples;
    const Vec x = radial_boundary_point(body, plane.point, std::cos(phi) * u + std::sin(phi) * v);
    pts.emplace_back((x - plane.point).dot(u), (x - plane.point).dot(v));
  }
  double diameter = 0.0;
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : pts) {
    centroid += p;
    for (const auto& q : pts) diameter = std::max(diameter, (p - q).norm());
  }
  centroid /= samples;
  if (!(diameter > 0.0)) throw DegenerateDataError("section is a single point");
  Mat design(samples, 6);
  for (int i = 0; i < samples; ++i) {
    const Eigen::Vector2d s = (pts[static_cast<std::size_t>(i)] - centroid) / diameter;
    design.row(i) << s.x() * s.x(), s.x() * s.y(), s.y() * s.y(), s.x(), s.y(), 1.0;
  }
  Eigen::JacobiSVD<Mat> svd(design, Eigen::ComputeThinV);
  const Vec c = svd.matrixV().col(5);
  double sum = 0.0;
  for (int i = 0; i < samples; ++i) {
    const Eigen::Vector2d s = (pts[static_cast<std::size_t>(i)] - centroid) / diameter;
    const double val = design.row(i).dot(c);
    const double gx = 2.0 * c(0) * s.x() + c(1) * s.y() + c(3);
    const double gy = c(1) * s.x() + 2.0 * c(2) * s.y() + c(4);
    const double g = std::hypot(gx, gy);
    const double d = g > 0.0 ? val / g : std::abs(val);
    sum += d * d;
  }
  return std::sqrt(sum / samples);
}

}  // namespace ktb
