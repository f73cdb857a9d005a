#include "ktb/projectivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ktb/errors.hpp"

namespace ktb {

namespace {

double det2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a(0) * b(1) - a(1) * b(0); }

Eigen::Vector2d homogeneous(double p) {
  if (std::isinf(p)) return Eigen::Vector2d(1.0, 0.0);
  return Eigen::Vector2d(p, 1.0);
}

}  // namespace

double cross_ratio(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2, const Eigen::Vector2d& p3,
                   const Eigen::Vector2d& p4) {
  const Eigen::Vector2d q[] = {p1.normalized(), p2.normalized(), p3.normalized(), p4.normalized()};
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      if (std::abs(det2(q[i], q[j])) <= 1e-14) throw DegenerateDataError("coincident points in cross-ratio");
    }
  }
  return det2(q[0], q[2]) * det2(q[1], q[3]) / (det2(q[0], q[3]) * det2(q[1], q[2]));
}

double cross_ratio(double p1, double p2, double p3, double p4) {
  const int infinite = std::isinf(p1) + std::isinf(p2) + std::isinf(p3) + std::isinf(p4);
  if (infinite > 1) throw DegenerateDataError("coincident points in cross-ratio");
  return cross_ratio(homogeneous(p1), homogeneous(p2), homogeneous(p3), homogeneous(p4));
}

double cross_ratio_collinear(const Vec& p1, const Vec& p2, const Vec& p3, const Vec& p4, double tol) {
  const Vec* pts[] = {&p1, &p2, &p3, &p4};
  // The longest pair spans the line.
  double best = -1.0;
  Vec dir;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      const double d = (*pts[j] - *pts[i]).norm();
      if (d > best) {
        best = d;
        dir = *pts[j] - *pts[i];
      }
    }
  }
  if (!(best > 0)) throw DegenerateDataError("coincident points in cross-ratio");
  dir /= best;
  double s[4];
  for (int i = 0; i < 4; ++i) {
    const Vec off = *pts[i] - p1;
    s[i] = off.dot(dir);
    if ((off - s[i] * dir).norm() > tol * best) throw DegenerateDataError("points are not collinear");
  }
  return cross_ratio(s[0], s[1], s[2], s[3]);
}

// ---------------------------------------------------------------------------

ProjectiveMap::ProjectiveMap(Mat m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw DomainError("projective map must be square");
  if (std::abs(m_.determinant()) <= 1e-14 * std::pow(m_.norm(), m_.rows())) {
    throw DegenerateDataError("projective map is singular");
  }
}

ProjectiveMap ProjectiveMap::harmonic_homology(const Vec& h, const Vec& p) {
  const double s = h.dot(p);
  if (std::abs(s) <= 1e-14 * h.norm() * p.norm()) {
    throw DomainError("centre of the homology lies on its axis");
  }
  const int n = static_cast<int>(h.size());
  return ProjectiveMap(Mat::Identity(n, n) - 2.0 * p * h.transpose() / s);
}

Vec ProjectiveMap::apply(const Vec& x) const { return normalized(m_ * x); }

double ProjectiveMap::involution_defect() const {
  const Mat sq = m_ * m_;
  const int n = dimension();
  const double lambda = sq.trace() / n;
  return (sq - lambda * Mat::Identity(n, n)).norm() / sq.norm();
}

// ---------------------------------------------------------------------------

SphereInvolutionSampler chord_involution_sampler(BodyPtr t, const Vec& direction, const Vec& fixed) {
  const ParallelClass cls(direction);
  const Vec e = normalized(fixed);
  if (std::abs(e.dot(cls.direction)) > 1e-12) throw DomainError("fixed vector must be orthogonal to the class");
  SphereInvolutionSampler sampler;
  sampler.map = [t = std::move(t), cls](const Vec& u) { return parallel_chord_involution(*t, cls, u); };
  sampler.fixed = e;
  sampler.hyperplane_normal = cls.direction;
  return sampler;
}

SphereInvolutionSampler chord_involution_sampler(BodyPtr t, const Vec& direction) {
  const Vec d = normalized(direction);
  const Vec e = d.size() == 2 ? rotate_quarter(d) : Vec(tangent_basis(d).col(0));
  return chord_involution_sampler(std::move(t), d, e);
}

std::function<double(double)> slope_chart(const SphereInvolutionSampler& sampler) {
  if (sampler.fixed.size() != 2) throw DomainError("slope chart is planar");
  const Vec e = sampler.fixed;
  const Vec d = sampler.hyperplane_normal;
  auto map = sampler.map;
  return [=](double t) {
    const Vec v = map(normalized(e + t * d));
    return v.dot(d) / v.dot(e);
  };
}

double projectivity_residual(const SphereInvolutionSampler& sampler, const SamplePlan& plan) {
  const int n = static_cast<int>(sampler.fixed.size());
  const Vec& e = sampler.fixed;
  const Vec& d = sampler.hyperplane_normal;
  if (n == 2) {
    if (plan.samples < 4) throw PlanError("cross-ratio test needs at least four samples");
    std::vector<double> s(static_cast<std::size_t>(plan.samples));
    std::vector<double> fs(s.size());
    for (int i = 0; i < plan.samples; ++i) {
      s[i] = -plan.scale + 2.0 * plan.scale * i / (plan.samples - 1);
      const Vec v = sampler.map(normalized(e + s[i] * d));
      fs[i] = v.dot(d) / v.dot(e);
    }
    double worst = 0.0;
    const int m = plan.samples;
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b)
        for (int c = b + 1; c < m; ++c)
          for (int k = c + 1; k < m; ++k) {
            const double before = cross_ratio(s[a], s[b], s[c], s[k]);
            const double after = cross_ratio(fs[a], fs[b], fs[c], fs[k]);
            worst = std::max(worst, std::abs(before - after));
          }
    return worst;
  }
  const Mat basis = tangent_basis(e);
  const int axes = n - 1;
  long total = 1;
  for (int i = 0; i < axes; ++i) total *= plan.samples;
  if (plan.samples < 2 || total < n + 1) throw PlanError("too few samples for the involution fit");
  std::vector<std::pair<Vec, Vec>> pairs;
  for (long code = 0; code < total; ++code) {
    Vec offset = Vec::Zero(n);
    long c = code;
    for (int i = 0; i < axes; ++i) {
      const int k = static_cast<int>(c % plan.samples);
      c /= plan.samples;
      offset += (-plan.scale + 2.0 * plan.scale * k / (plan.samples - 1)) * basis.col(i);
    }
    const Vec u = normalized(e + offset);
    pairs.emplace_back(u, sampler.map(u));
  }
  return fit_projective_involution(pairs, d).residual;
}

ProjectiveFit fit_projective_involution(const std::vector<std::pair<Vec, Vec>>& pairs, const Vec& h_in) {
  const Vec h = normalized(h_in);
  const int n = static_cast<int>(h.size());
  const Mat basis = tangent_basis(h);
  // Model M = I - 2 (h + B c) h^T. Image of u parallel to v gives (I - v v^T) M u = 0, linear in c.
  Mat design(static_cast<Eigen::Index>(pairs.size()) * n, n - 1);
  Vec rhs(design.rows());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const Vec& u = pairs[k].first;
    const Vec v = normalized(pairs[k].second);
    const Mat proj = Mat::Identity(n, n) - v * v.transpose();
    const double a = h.dot(u);
    design.block(static_cast<Eigen::Index>(k) * n, 0, n, n - 1) = -2.0 * a * proj * basis;
    rhs.segment(static_cast<Eigen::Index>(k) * n, n) = -proj * (u - 2.0 * a * h);
  }
  Eigen::JacobiSVD<Mat> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec sv = svd.singularValues();
  if (sv.minCoeff() <= 1e-10 * std::max(1.0, sv.maxCoeff())) {
    throw DegenerateDataError("pairs do not determine the involution");
  }
  const Vec c = svd.solve(rhs);
  const Vec p = h + basis * c;
  ProjectiveMap map = ProjectiveMap::harmonic_homology(h, p);
  double sum = 0.0;
  for (const auto& [u, v] : pairs) {
    const double dist = projective_distance(v, map.matrix() * u);
    sum += dist * dist;
  }
  const double residual = std::sqrt(sum / static_cast<double>(pairs.size()));
  return {std::move(map), p, residual};
}

// ---------------------------------------------------------------------------

std::pair<double, double> two_jet_at_fixed_point(const std::function<double(double)>& f, double step) {
  constexpr int levels = 6;
  const double f0 = f(0.0);
  double d1[levels][levels];
  double d2[levels][levels];
  for (int k = 0; k < levels; ++k) {
    const double h = step / std::pow(2.0, k);
    const double fp = f(h);
    const double fm = f(-h);
    d1[k][0] = (fp - fm) / (2.0 * h);
    d2[k][0] = (fp - 2.0 * f0 + fm) / (h * h);
    for (int m = 1; m <= k; ++m) {
      const double w = std::pow(4.0, m) - 1.0;
      d1[k][m] = d1[k][m - 1] + (d1[k][m - 1] - d1[k - 1][m - 1]) / w;
      d2[k][m] = d2[k][m - 1] + (d2[k][m - 1] - d2[k - 1][m - 1]) / w;
    }
  }
  auto best = [&](double (&table)[levels][levels]) {
    double value = table[1][1];
    double err = std::abs(table[1][1] - table[0][0]);
    for (int k = 2; k < levels; ++k) {
      const double e = std::abs(table[k][k] - table[k - 1][k - 1]);
      if (e < err) {
        err = e;
        value = table[k][k];
      }
    }
    return std::make_pair(value, err);
  };
  const auto [a1, e1] = best(d1);
  const auto [s2, e2] = best(d2);
  if (e1 > 1e-6 * std::max(1.0, std::abs(a1)) || e2 > 1e-5 * std::max(1.0, std::abs(s2))) {
    throw PrecisionError("Richardson extrapolation does not settle");
  }
  return {a1, 0.5 * s2};
}

DeviationFit deviation_exponent(const ChartMapL& f, const ChartMapL& g, const DyadicGrid& grid) {
  std::vector<double> xs, ys;
  int positive = 0;
  int negative = 0;
  for (int j = grid.j_min; j <= grid.j_max; ++j) {
    const long double t = std::ldexp(1.0L, -j);
    const long double diff = f(t) - g(t);
    if (std::abs(diff) < 1e3L * grid.epsilon * (grid.relative_floor ? t : 1.0L)) continue;
    xs.push_back(static_cast<double>(std::log(t)));
    ys.push_back(static_cast<double>(std::log(std::abs(diff))));
    (diff > 0 ? positive : negative)++;
  }
  if (xs.empty()) throw IndistinguishableError("maps agree to round-off on the whole grid");
  if (xs.size() < 3) throw PrecisionError("too few grid points above the round-off floor");
  const std::size_t m = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double k = sxy / sxx;
  const double log_c = my - k * mx;
  const double sign = positive >= negative ? 1.0 : -1.0;
  return {k, sign * std::exp(log_c), static_cast<int>(m)};
}

DeviationFit deviation_exponent(const std::function<double(double)>& f,
                                const std::function<double(double)>& g, const DyadicGrid& grid) {
  return deviation_exponent(
      ChartMapL([&](long double t) { return static_cast<long double>(f(static_cast<double>(t))); }),
      ChartMapL([&](long double t) { return static_cast<long double>(g(static_cast<double>(t))); }), grid);
}

// ---------------------------------------------------------------------------

PlanarGraph PlanarGraph::from_germ(const GraphGerm& germ, long double radius) {
  if (germ.dimension() != 2) throw DomainError("planar graph needs a planar germ");
  PlanarGraph graph;
  graph.value = [germ](long double x) { return germ.value_1d(x); };
  graph.slope = [germ](long double x) { return germ.slope_1d(x); };
  graph.radius = radius;
  return graph;
}

namespace {

/// Root of a monotone function on [lo, hi] (values of opposite sign at the ends).
long double monotone_root(const std::function<long double(long double)>& fn,
                          const std::function<long double(long double)>& dfn, long double lo,
                          long double hi) {
  long double flo = fn(lo);
  for (int it = 0; it < 400; ++it) {
    const long double mid = 0.5L * (lo + hi);
    if (mid == lo || mid == hi) break;
    const long double fm = fn(mid);
    if (fm == 0.0L) return mid;
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  long double x = 0.5L * (lo + hi);
  long double fx = fn(x);
  for (int it = 0; it < 3; ++it) {
    const long double slope = dfn(x);
    if (slope == 0.0L) break;
    const long double next = x - fx / slope;
    const long double fn_next = fn(next);
    if (!(std::abs(fn_next) < std::abs(fx))) break;
    x = next;
    fx = fn_next;
  }
  return x;
}

long double sgn(long double x) { return x < 0 ? -1.0L : 1.0L; }

}  // namespace

long double slope_inverse(const PlanarGraph& graph, long double t) {
  const long double r = graph.radius;
  auto fn = [&](long double x) { return graph.slope(x) - t; };
  if (fn(-r) > 0 || fn(r) < 0) throw DomainError("slope outside the chart");
  // h'' from the slope by a symmetric difference is only used for the final polish.
  auto dfn = [&](long double x) {
    const long double h = 1e-6L * r;
    return (graph.slope(x + h) - graph.slope(x - h)) / (2 * h);
  };
  return monotone_root(fn, dfn, -r, r);
}

long double level_point(const PlanarGraph& graph, long double level, long double side,
                        long double minimizer) {
  const long double far = minimizer + sgn(side) * graph.radius;
  auto fn = [&](long double x) { return graph.value(x) - level; };
  if (fn(far) < 0) throw DomainError("level not reached inside the chart");
  if (fn(minimizer) > 0) throw DomainError("level below the minimum of the graph");
  return monotone_root(fn, graph.slope, minimizer, far);
}

long double level_partner(const PlanarGraph& graph, long double x, long double minimizer) {
  return level_point(graph, graph.value(x), -sgn(x - minimizer), minimizer);
}

GermPairChain::GermPairChain(PlanarGraph alpha, PlanarGraph gamma)
    : alpha_(std::move(alpha)), gamma_(std::move(gamma)) {
  alpha_min_ = slope_inverse(alpha_, 0.0L);
  gamma_min_ = slope_inverse(gamma_, 0.0L);
}

long double GermPairChain::zeta(long double x) const {
  return level_point(alpha_, gamma_.value(x), sgn(x), alpha_min_);
}

long double GermPairChain::x_hat(long double x) const { return level_partner(gamma_, x, gamma_min_); }

long double GermPairChain::zeta_tilde(long double x) const {
  return level_partner(alpha_, zeta(x), alpha_min_);
}

long double GermPairChain::slope_gap(long double x) const {
  return alpha_.slope(zeta(x)) - gamma_.slope(x);
}

long double GermPairChain::f(long double t) const {
  return alpha_.slope(level_partner(alpha_, slope_inverse(alpha_, t), alpha_min_));
}

long double GermPairChain::g(long double t) const {
  return gamma_.slope(level_partner(gamma_, slope_inverse(gamma_, t), gamma_min_));
}

}  // namespace ktb
