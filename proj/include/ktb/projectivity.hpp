#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "ktb/convex_body.hpp"
#include "ktb/graph_germ.hpp"
#include "ktb/linalg.hpp"
#include "ktb/reflection.hpp"

namespace ktb {

/// Cross-ratio (p1, p2; p3, p4) = ((p1 - p3)(p2 - p4)) / ((p1 - p4)(p2 - p3)) in an
/// affine chart. At most one argument may be infinite (the point at infinity).
double cross_ratio(double p1, double p2, double p3, double p4);
/// Same for points of RP^1 in homogeneous coordinates.
double cross_ratio(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2, const Eigen::Vector2d& p3,
                   const Eigen::Vector2d& p4);
/// Same for four collinear points of R^n.
double cross_ratio_collinear(const Vec& p1, const Vec& p2, const Vec& p3, const Vec& p4,
                             double tol = 1e-9);

/// Projective transformation of RP^{n-1}: a matrix up to scale.
class ProjectiveMap {
 public:
  explicit ProjectiveMap(Mat m);
  /// Involution fixing the hyperplane {<h, x> = 0} pointwise and the point p.
  static ProjectiveMap harmonic_homology(const Vec& h, const Vec& p);

  const Mat& matrix() const { return m_; }
  int dimension() const { return static_cast<int>(m_.rows()); }
  /// Image of a representative, normalized to unit length with the sign of the input kept
  /// where possible (positive scalar product).
  Vec apply(const Vec& x) const;
  /// |M^2 - lambda I| / |M^2| for the best scalar lambda.
  double involution_defect() const;
  ProjectiveMap compose(const ProjectiveMap& other) const { return ProjectiveMap(m_ * other.m_); }

 private:
  Mat m_;
};

/// Black-box involution of a patch of the unit sphere around a fixed vector.
struct SphereInvolutionSampler {
  std::function<Vec(const Vec&)> map;
  /// The fixed vector n(O) at the patch centre.
  Vec fixed;
  /// Normal of the fixed hyperplane H (the direction class for R_L samplers).
  Vec hyperplane_normal;
};

/// R_L of a body T for a direction class, centred at an equator point.
SphereInvolutionSampler chord_involution_sampler(BodyPtr t, const Vec& direction);
SphereInvolutionSampler chord_involution_sampler(BodyPtr t, const Vec& direction, const Vec& fixed);

/// Chart u -> <u, d> / <u, e> around the fixed vector e (d the hyperplane normal), planar case.
std::function<double(double)> slope_chart(const SphereInvolutionSampler& sampler);

struct SamplePlan {
  /// Points per chart axis.
  int samples = 12;
  /// Half-width of the patch in chart coordinates.
  double scale = 0.3;
};

/// Zero (to rounding) iff the sampled map lifts a projective involution.
double projectivity_residual(const SphereInvolutionSampler& sampler, const SamplePlan& plan = {});

struct ProjectiveFit {
  ProjectiveMap map;
  Vec extra_fixed_point;
  double residual;
};

/// Best harmonic homology fixing H = {<h, x> = 0} pointwise for the pairs (u, f(u)).
ProjectiveFit fit_projective_involution(const std::vector<std::pair<Vec, Vec>>& pairs, const Vec& h);

/// f(t) = a1 t + a2 t^2 + O(t^3) by Richardson extrapolation of central differences.
std::pair<double, double> two_jet_at_fixed_point(const std::function<double(double)>& f,
                                                 double step = 0.05);

using ChartMapL = std::function<long double(long double)>;

struct DyadicGrid {
  int j_min = 4;
  int j_max = 12;
  /// Precision of the samplers; differences below 1e3 * epsilon * |t| are discarded.
  double epsilon = 2.220446049250313e-16;
  /// Floor proportional to |t| (chart maps) or absolute (unit vectors).
  bool relative_floor = true;
};

struct DeviationFit {
  double exponent;
  double coefficient;
  int points_used;
};

/// Fit |f(t) - g(t)| = |C| t^k on t = 2^-j.
DeviationFit deviation_exponent(const ChartMapL& f, const ChartMapL& g, const DyadicGrid& grid = {});
DeviationFit deviation_exponent(const std::function<double(double)>& f,
                                const std::function<double(double)>& g, const DyadicGrid& grid = {});

/// Planar convex graph y = h(x) with h(0) = 0 in extended precision.
struct PlanarGraph {
  std::function<long double(long double)> value;
  std::function<long double(long double)> slope;
  /// Half-width of the chart on which the graph is defined.
  long double radius = 0.5L;

  static PlanarGraph from_germ(const GraphGerm& germ, long double radius = 0.5L);
};

/// Solvers for the pair (alpha, Gamma) of graphs tangent at the origin and the
/// slope-chart involutions f, g they define through horizontal chords.
class GermPairChain {
 public:
  GermPairChain(PlanarGraph alpha, PlanarGraph gamma);

  /// zeta with h_alpha(zeta) = h_Gamma(x) on the branch of x.
  long double zeta(long double x) const;
  /// x_hat != x with h_Gamma(x_hat) = h_Gamma(x).
  long double x_hat(long double x) const;
  /// zeta_tilde != zeta with h_alpha(zeta_tilde) = h_alpha(zeta).
  long double zeta_tilde(long double x) const;

  long double slope_gap(long double x) const;  // h'_alpha(zeta) - h'_Gamma(x)

  /// The slope-chart involution of alpha (f) and of Gamma (g).
  long double f(long double t) const;
  long double g(long double t) const;

  const PlanarGraph& alpha() const { return alpha_; }
  const PlanarGraph& gamma() const { return gamma_; }

 private:
  PlanarGraph alpha_;
  PlanarGraph gamma_;
  long double alpha_min_;
  long double gamma_min_;
};

/// Point x' on the other branch of the graph with h(x') = h(x).
long double level_partner(const PlanarGraph& graph, long double x, long double minimizer = 0.0L);
/// Point on the branch of `side` (sign) where h equals `level`.
long double level_point(const PlanarGraph& graph, long double level, long double side,
                        long double minimizer = 0.0L);
/// x with h'(x) = t.
long double slope_inverse(const PlanarGraph& graph, long double t);

}  // namespace ktb
