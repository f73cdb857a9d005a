#pragma once

#include <array>
#include <functional>
#include <vector>

#include "ktb/convex_body.hpp"
#include "ktb/graph_germ.hpp"
#include "ktb/linalg.hpp"
#include "ktb/projectivity.hpp"
#include "ktb/series.hpp"

namespace ktb {

/// Quadric {X^T M X = 0} in homogeneous coordinates X = (x, 1).
///
/// Coefficients are listed as x_i x_j (i <= j, row-major), then x_i, then the
/// constant; the vector is kept at unit norm with its first nonzero entry positive.
class ConicQuadric {
 public:
  /// From a symmetric (n+1) x (n+1) matrix.
  explicit ConicQuadric(const Mat& m);

  static ConicQuadric from_coefficients(int n, const Vec& coeffs);
  /// A x^2 + B xy + C y^2 + D x + E y + F = 0.
  static ConicQuadric conic(double a, double b, double c, double d, double e, double f);
  /// a x1^2 + x1 <c, xh> + <A xh, xh> - x_n (1 + <d, xh>) = 0 in coordinates (x1, xh, x_n).
  static ConicQuadric normal_form(double a, const Vec& c, const Mat& a_hat, const Vec& d);

  int dimension() const { return static_cast<int>(m_.rows()) - 1; }
  const Mat& matrix() const { return m_; }
  Vec coefficients() const;

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;

  /// Image under x -> m x + b (m invertible).
  ConicQuadric affine_image(const Mat& m, const Vec& b) const;
  /// Quadric in the coordinates s of the affine subspace x = origin + basis s.
  ConicQuadric restrict_to(const Vec& origin, const Mat& basis) const;

  /// Distance between normalized coefficient vectors, up to overall sign.
  double distance(const ConicQuadric& other) const;

 private:
  Mat m_;
};

/// Orthonormal frame at a boundary point O adapted to a plane section.
///
/// Columns of matrix() are e1 (along L = plane cap tangent hyperplane), the
/// transverse directions, and e_n (in the plane, pointing into the body).
struct PlanarSectionFrame {
  Vec origin;
  Vec e1;
  Vec en;
  Mat transverse;

  int dimension() const { return static_cast<int>(origin.size()); }
  Mat matrix() const;
  Vec to_frame(const Vec& x) const;
  Vec from_frame(const Vec& y) const;

  /// Frame for the plane through O spanned by u and v. Throws DomainError when
  /// the plane is tangent (|<e_n, normal>| < margin) or O is off the boundary.
  static PlanarSectionFrame make(const ConvexBody& body, const Vec& origin, const Vec& u,
                                 const Vec& v, double margin = 1e-3);
};

/// Osculating conic of a planar germ y = h(x), in the chart of the germ.
ConicQuadric osculating_conic(const GraphGerm& curve);

/// The same germ after the homothety that makes its curvature at O equal to one.
GraphGerm normalize_unit_curvature(const GraphGerm& curve);

/// x^5 coefficient of h_curve - h_conic in the unit-curvature chart.
double fifth_order_gap(const GraphGerm& curve, const ConicQuadric& conic);

struct AffineCurvature {
  double value;
  /// Derivative with respect to affine arclength.
  double derivative;
};

/// Affine curvature of a planar germ at the origin.
AffineCurvature affine_curvature(const GraphGerm& curve);

struct SextacticTest {
  bool sextactic;
  double gap;
};

SextacticTest is_sextactic(const GraphGerm& curve, double tol);

/// Closed planar curve theta -> (x, y), counterclockwise, evaluated on series.
class ParametricCurve {
 public:
  using Map = std::function<std::array<TaylorSeries, 2>(const TaylorSeries&)>;

  explicit ParametricCurve(Map map, double period = 2.0 * 3.14159265358979323846);

  static ParametricCurve ellipse(double a, double b);
  /// Ellipse with the radial factor 1 + eps sin^5(theta).
  static ParametricCurve bumped_ellipse(double a, double b, double eps);

  double period() const { return period_; }
  Vec point(double theta) const;
  /// Germ over the tangent line at theta with the interior on the positive side.
  GraphGerm germ(double theta, int order = 7) const;
  /// Germ chart at theta: columns tangent, inward normal; the origin is point(theta).
  Mat frame(double theta) const;

 private:
  Map map_;
  double period_;
};

/// Osculating conic at theta in world coordinates.
ConicQuadric osculating_conic(const ParametricCurve& curve, double theta);

/// Parameters where the derivative of affine curvature changes sign.
std::vector<double> sextactic_parameters(const ParametricCurve& curve, int samples = 720);

/// Germ of the boundary of a planar body at p, over the tangent line.
GraphGerm curve_germ(const ConvexBody& body, const Vec& p, int order = 7);

struct OsculatingQuadric {
  /// In frame coordinates (x1, xh, x_n).
  ConicQuadric frame_quadric;
  /// Coefficients after scaling the x_n coefficient to -1:
  /// a x1^2 + b x1 x_n + e x_n^2 + x1 <c, xh> + <A xh, xh> + <l, xh> - x_n (1 + <d, xh>).
  double a;
  double b;
  double e;
  Vec c;
  Vec d;
  Mat a_hat;
  Vec l;
};

/// Osculating quadric along the section x_hat = 0 of the germ x_n = h(x1, x_hat).
/// The frame must be normalized: h has no x1^3 term (PreconditionError otherwise).
OsculatingQuadric osculating_quadric_along_curve(const GraphGerm& alpha);

/// Same for a body and a section frame; the result is in world coordinates.
ConicQuadric osculating_quadric_along_curve(const ConvexBody& body, const PlanarSectionFrame& frame,
                                            OsculatingQuadric* details = nullptr);

/// Decay fit of |n_gamma(x1) - n_beta(zeta(x1))| along the section.
DeviationFit normal_field_gap(const GraphGerm& alpha, const ConicQuadric& frame_quadric,
                              const DyadicGrid& grid = {});

/// Fit of psi_beta(zeta(x1)) - psi_gamma(x1), the azimuths in the section plane.
DeviationFit normal_angle_gap(const GraphGerm& alpha, const ConicQuadric& frame_quadric,
                              const DyadicGrid& grid = {});

/// Section graph of the quadric restricted to x_hat = 0, on the branch through O.
PlanarGraph section_graph(const ConicQuadric& frame_quadric, long double radius = 0.25L);

struct SectionPlane {
  /// A point of the plane inside the body.
  Vec point;
  Vec u;
  Vec v;
};

/// RMS Sampson distance of the best conic through sampled section points,
/// divided by the section diameter.
double planar_section_conic_residual(const ConvexBody& body, const SectionPlane& plane,
                                     int samples = 64);

}  // namespace ktb
