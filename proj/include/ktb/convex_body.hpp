#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ktb/graph_germ.hpp"
#include "ktb/linalg.hpp"
#include "ktb/series.hpp"

namespace ktb {

class ConvexBody;
using BodyPtr = std::shared_ptr<const ConvexBody>;

/// Smooth strictly convex body given as a sublevel set {F < 1} of a convex
/// level function F with boundary {F = 1}.
///
/// Bodies are immutable after construction and safe to share across threads.
/// Every operation below is a pure function of (body, arguments).
class ConvexBody : public std::enable_shared_from_this<ConvexBody> {
 public:
  virtual ~ConvexBody() = default;

  virtual int dimension() const = 0;
  virtual std::string kind() const = 0;

  virtual double level(const Vec& x) const = 0;
  virtual Vec level_gradient(const Vec& x) const = 0;
  virtual Mat level_hessian(const Vec& x) const = 0;

  /// A point with F < 1, used as the reference for radial constructions.
  virtual Vec interior_point() const = 0;
  /// Diameter bound for bounded bodies; chart radius for germs.
  virtual double length_scale() const = 0;
  virtual bool bounded() const { return true; }
  virtual bool symmetric_about_origin() const { return false; }

  /// Starting boundary points for Gauss-map inversion.
  virtual std::vector<Vec> boundary_seeds() const;

  /// Support function h(u) = max <x, u> over the body, for any nonzero u.
  virtual double support(const Vec& u) const;
  /// The boundary point realizing the support function (gradient of h).
  virtual Vec support_point(const Vec& u) const;

  virtual std::optional<double> exact_volume() const { return std::nullopt; }

  /// Polar body {y : <x, y> <= 1 for x in body}. The default wraps the support function.
  virtual BodyPtr polar() const;

  /// F evaluated on series arguments, for exact boundary jets. Throws DomainError
  /// when the representation has no closed form.
  virtual TaylorSeries level_series(std::span<const TaylorSeries> x) const;

  BodyPtr self() const { return shared_from_this(); }
};

/// {<A (x - c), (x - c)> <= 1} with A symmetric positive definite.
class Ellipsoid final : public ConvexBody {
 public:
  explicit Ellipsoid(Mat a, Vec center = Vec());

  static BodyPtr make(Mat a, Vec center = Vec());
  static BodyPtr ball(int dim, double radius = 1.0, Vec center = Vec());
  /// Axis-aligned ellipsoid with the given semi-axes.
  static BodyPtr with_semi_axes(const Vec& semi_axes, Vec center = Vec());

  const Mat& matrix() const { return a_; }
  const Vec& center() const { return c_; }

  int dimension() const override { return static_cast<int>(a_.rows()); }
  std::string kind() const override { return "ellipsoid"; }
  double level(const Vec& x) const override;
  Vec level_gradient(const Vec& x) const override;
  Mat level_hessian(const Vec& x) const override;
  Vec interior_point() const override { return c_; }
  double length_scale() const override { return scale_; }
  bool symmetric_about_origin() const override { return c_.norm() == 0.0; }
  double support(const Vec& u) const override;
  Vec support_point(const Vec& u) const override;
  std::optional<double> exact_volume() const override;
  BodyPtr polar() const override;
  TaylorSeries level_series(std::span<const TaylorSeries> x) const override;

 private:
  Mat a_;
  Mat a_inv_;
  Vec c_;
  double scale_;
};

/// sum_i |(x_i - c_i) / a_i|^p <= 1 with p >= 2.
class Superellipsoid final : public ConvexBody {
 public:
  Superellipsoid(Vec semi_axes, double exponent, Vec center = Vec());
  static BodyPtr make(Vec semi_axes, double exponent, Vec center = Vec());

  double exponent() const { return p_; }
  const Vec& semi_axes() const { return a_; }

  int dimension() const override { return static_cast<int>(a_.size()); }
  std::string kind() const override { return "superellipsoid"; }
  double level(const Vec& x) const override;
  Vec level_gradient(const Vec& x) const override;
  Mat level_hessian(const Vec& x) const override;
  double support(const Vec& u) const override;
  Vec support_point(const Vec& u) const override;
  Vec interior_point() const override { return c_; }
  double length_scale() const override { return 2.0 * a_.norm(); }
  bool symmetric_about_origin() const override { return c_.norm() == 0.0; }
  TaylorSeries level_series(std::span<const TaylorSeries> x) const override;

 private:
  Vec a_;
  double p_;
  Vec c_;
};

/// Image {M x + b : x in base} of another body under an invertible affine map.
class AffineImageBody final : public ConvexBody {
 public:
  AffineImageBody(BodyPtr base, Mat linear, Vec offset = Vec());
  static BodyPtr make(BodyPtr base, Mat linear, Vec offset = Vec());
  static BodyPtr scaled(BodyPtr base, double factor);

  const BodyPtr& base() const { return base_; }
  const Mat& linear() const { return m_; }
  const Vec& offset() const { return b_; }

  int dimension() const override { return base_->dimension(); }
  std::string kind() const override { return "affine(" + base_->kind() + ")"; }
  double level(const Vec& x) const override;
  Vec level_gradient(const Vec& x) const override;
  Mat level_hessian(const Vec& x) const override;
  Vec interior_point() const override;
  double length_scale() const override;
  bool bounded() const override { return base_->bounded(); }
  bool symmetric_about_origin() const override;
  std::vector<Vec> boundary_seeds() const override;
  double support(const Vec& u) const override;
  Vec support_point(const Vec& u) const override;
  std::optional<double> exact_volume() const override;
  TaylorSeries level_series(std::span<const TaylorSeries> x) const override;

 private:
  Vec to_base(const Vec& y) const { return m_inv_ * (y - b_); }

  BodyPtr base_;
  Mat m_;
  Mat m_inv_;
  Vec b_;
};

/// Polar body of a body containing the origin. Its level function is the
/// support function of the base, so its boundary is the Legendre image of
/// the base boundary.
class PolarBody final : public ConvexBody {
 public:
  explicit PolarBody(BodyPtr base);

  const BodyPtr& base() const { return base_; }

  int dimension() const override { return base_->dimension(); }
  std::string kind() const override { return "polar(" + base_->kind() + ")"; }
  double level(const Vec& x) const override;
  Vec level_gradient(const Vec& x) const override;
  Mat level_hessian(const Vec& x) const override;
  Vec interior_point() const override { return Vec::Zero(dimension()); }
  double length_scale() const override { return scale_; }
  bool symmetric_about_origin() const override { return base_->symmetric_about_origin(); }
  double support(const Vec& u) const override;
  Vec support_point(const Vec& u) const override;
  BodyPtr polar() const override { return base_; }

 private:
  BodyPtr base_;
  double scale_;
};

/// Epigraph {x_n >= h(x')} of a graph germ, valid on the chart |x'| <= radius.
class GraphGermBody final : public ConvexBody {
 public:
  GraphGermBody(GraphGerm germ, double radius);
  static BodyPtr make(GraphGerm germ, double radius);

  const GraphGerm& germ() const { return germ_; }

  int dimension() const override { return germ_.dimension(); }
  std::string kind() const override { return "germ"; }
  double level(const Vec& x) const override;
  Vec level_gradient(const Vec& x) const override;
  Mat level_hessian(const Vec& x) const override;
  Vec interior_point() const override;
  double length_scale() const override { return radius_; }
  bool bounded() const override { return false; }
  std::vector<Vec> boundary_seeds() const override;
  TaylorSeries level_series(std::span<const TaylorSeries> x) const override;

 private:
  GraphGerm germ_;
  double radius_;
};

/// Convex region above one sheet of a two-sheeted hyperboloid,
/// x_n >= sqrt(1 + <B x', x'>) - 1. Unbounded, bounded by a quadric.
class HyperboloidSheet final : public ConvexBody {
 public:
  HyperboloidSheet(Mat b, double chart_radius = 4.0);
  static BodyPtr make(Mat b, double chart_radius = 4.0);

  int dimension() const override { return static_cast<int>(b_.rows()) + 1; }
  std::string kind() const override { return "hyperboloid_sheet"; }
  double level(const Vec& x) const override;
  Vec level_gradient(const Vec& x) const override;
  Mat level_hessian(const Vec& x) const override;
  Vec interior_point() const override;
  double length_scale() const override { return radius_; }
  bool bounded() const override { return false; }
  std::vector<Vec> boundary_seeds() const override;
  TaylorSeries level_series(std::span<const TaylorSeries> x) const override;

 private:
  Mat b_;
  double radius_;
};

/// Convex polygon (counter-clockwise vertices). Admitted only for polar
/// duality and area computations, never for reflections.
class Polygon {
 public:
  explicit Polygon(std::vector<Vec> vertices);
  static Polygon square(double half_side = 1.0);

  const std::vector<Vec>& vertices() const { return vertices_; }
  double area() const;
  bool contains_origin_strictly() const;
  bool symmetric_about_origin(double tol = 1e-12) const;

 private:
  std::vector<Vec> vertices_;
};

/// Oriented line: base point plus unit direction.
struct OrientedLine {
  Vec point;
  Vec direction;

  OrientedLine() = default;
  OrientedLine(Vec p, const Vec& d);
};

struct ChordOptions {
  /// Chords shorter than this fraction of the length scale count as tangential.
  double tangency_fraction = 1e-6;
  /// Ray-marching step as a fraction of the length scale.
  double march_fraction = 1e-2;
};

/// |F(p) - 1| / |grad F(p)| relative to the length scale.
double boundary_defect(const ConvexBody& body, const Vec& p);
bool on_boundary(const ConvexBody& body, const Vec& p, double tol = 1e-8);

Vec exterior_normal(const ConvexBody& body, const Vec& p);

/// Boundary point whose exterior normal is u (damped Newton, multistart).
Vec gauss_inverse(const ConvexBody& body, const Vec& u);

/// Second boundary point of the chord through boundary point a along +-d,
/// choosing the sign that enters the body.
Vec chord_second_intersection(const ConvexBody& body, const Vec& a, const Vec& d,
                              const ChordOptions& options = {});

/// Parameters t_in < t_out where p + t v crosses the boundary, if the line meets
/// the interior.
std::optional<std::pair<double, double>> line_intersection(const ConvexBody& body, const Vec& p,
                                                           const Vec& v);

/// Boundary point on the ray from an interior point along dir.
Vec radial_boundary_point(const ConvexBody& body, const Vec& from, const Vec& dir);

BodyPtr polar_dual(const BodyPtr& body);
Polygon polar_dual(const Polygon& polygon);

/// Legendre image n(v) / <n(v), v> of a boundary point.
Vec legendre_point(const ConvexBody& body, const Vec& v);

/// Second fundamental form in an orthonormal tangent frame (tangent_basis of the normal).
Mat second_fundamental_form(const ConvexBody& body, const Vec& p);

struct VolumeEstimate {
  double value = 0.0;
  double error = 0.0;
  bool exact = false;
};

/// Exact for ellipsoids and affine images of them; radial quadrature otherwise.
VolumeEstimate volume(const ConvexBody& body, double target_relative_error = 1e-6);

/// Graph germ of the boundary at `origin` over the frame (columns e_1..e_n):
/// boundary = {origin + sum_{i<n} x_i e_i + h(x) e_n}. e_n must point into the body.
GraphGerm boundary_germ(const ConvexBody& body, const Vec& origin, const Mat& frame,
                        int order = 6);

}  // namespace ktb
