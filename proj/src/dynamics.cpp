#include "ktb/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include <Eigen/Cholesky>

#include "ktb/errors.hpp"
#include "ktb/reflection.hpp"

namespace ktb {

std::string to_string(OrbitStatus status) {
  switch (status) {
    case OrbitStatus::complete:
      return "complete";
    case OrbitStatus::grazing:
      return "grazing";
    case OrbitStatus::escaped:
      return "escaped";
    case OrbitStatus::stagnated:
      return "stagnated";
  }
  return "unknown";
}

namespace {

struct Trace {
  Orbit orbit;
  Vec exit_direction;
};

Trace trace_orbit(const ConvexBody& k, const ConvexBody& t, const OrientedLine& line, int steps) {
  if (steps < 0) throw PreconditionError("number of steps must be non-negative");
  const auto hit = line_intersection(k, line.point, line.direction);
  if (!hit) throw DomainError("line does not meet the interior of K");
  Trace out;
  Orbit& o = out.orbit;
  o.points.push_back(line.point + hit->first * line.direction);
  OrientedLine cur(o.points.back(), line.direction);
  out.exit_direction = cur.direction;
  for (int i = 0; i < steps; ++i) {
    OrientedLine next;
    try {
      next = t_billiard_reflect(k, t, cur);
    } catch (const GrazingError&) {
      o.status = OrbitStatus::grazing;
      break;
    } catch (const DomainError&) {
      o.status = OrbitStatus::escaped;
      break;
    }
    o.directions.push_back(cur.direction);
    o.lengths.push_back(t.support(next.point - o.points.back()));
    o.action += o.lengths.back();
    o.points.push_back(next.point);
    cur = next;
    out.exit_direction = cur.direction;
  }
  if (o.points.size() >= 3) {
    o.closed = (o.points.back() - o.points.front()).norm() <= 1e-9 * k.length_scale();
  }
  return out;
}

}  // namespace

Orbit iterate_t_billiard(const ConvexBody& k, const ConvexBody& t, const OrientedLine& line, int steps) {
  return trace_orbit(k, t, line, steps).orbit;
}

KTOrbit lift_kt_orbit(const ConvexBody& k, const ConvexBody& t, const OrientedLine& line, int steps) {
  const Trace tr = trace_orbit(k, t, line, steps);
  const Orbit& o = tr.orbit;
  KTOrbit out;
  out.status = o.status;
  const std::size_t segs = o.directions.size();
  for (std::size_t i = 0; i < segs; ++i) {
    const Vec p = gauss_inverse(t, o.directions[i]);
    out.segments.push_back({true, o.points[i], o.points[i + 1], p, p});
    const Vec next_dir = i + 1 < segs ? o.directions[i + 1] : tr.exit_direction;
    if (i + 1 == segs && o.status != OrbitStatus::complete) break;
    out.segments.push_back({false, o.points[i + 1], o.points[i + 1], p, gauss_inverse(t, next_dir)});
  }
  return out;
}

std::vector<Vec> q_projection(const KTOrbit& orbit) {
  std::vector<Vec> pts;
  for (const KTSegment& s : orbit.segments) {
    if (pts.empty()) pts.push_back(s.q_start);
    if ((s.q_end - pts.back()).norm() > 1e-12) pts.push_back(s.q_end);
  }
  return pts;
}

double closed_action(const ConvexBody& t, const std::vector<Vec>& vertices) {
  const std::size_t m = vertices.size();
  double a = 0.0;
  for (std::size_t i = 0; i < m; ++i) a += t.support(vertices[(i + 1) % m] - vertices[i]);
  return a;
}

namespace {

// Support points of T for the directed chords of a closed polygon.
std::vector<Vec> chord_support_points(const ConvexBody& t, const std::vector<Vec>& v) {
  const std::size_t m = v.size();
  std::vector<Vec> p;
  p.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Vec chord = v[(i + 1) % m] - v[i];
    if (chord.norm() == 0.0) throw DegenerateDataError("closed polygon has a repeated vertex");
    p.push_back(t.support_point(chord));
  }
  return p;
}

// Action gradient with respect to vertex i: p_{i-1} - p_i.
Vec vertex_gradient(const std::vector<Vec>& p, std::size_t i) {
  const std::size_t m = p.size();
  return p[(i + m - 1) % m] - p[i];
}

}  // namespace

double stationarity_residual(const ConvexBody& k, const ConvexBody& t, const std::vector<Vec>& vertices) {
  const std::vector<Vec> p = chord_support_points(t, vertices);
  double worst = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Vec g = vertex_gradient(p, i);
    const Vec n = exterior_normal(k, vertices[i]);
    worst = std::max(worst, (g - g.dot(n) * n).norm());
  }
  return worst;
}

double reflection_law_residual(const ConvexBody& k, const ConvexBody& t, const std::vector<Vec>& vertices) {
  const std::vector<Vec> p = chord_support_points(t, vertices);
  double worst = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Vec g = vertex_gradient(p, i);
    if (g.norm() == 0.0) return 1.0;
    const Vec n = exterior_normal(k, vertices[i]);
    worst = std::max(worst, (g - g.dot(n) * n).norm() / g.norm());
  }
  return worst;
}

namespace {

// Vertices in radial charts around the current polygon: vertex i moves to the
// boundary point on the ray from c along u_i + E_i s_i.
class RadialCharts {
 public:
  RadialCharts(const ConvexBody& k, const std::vector<Vec>& vertices) : k_(k), c_(k.interior_point()) {
    for (const Vec& v : vertices) {
      const Vec u = normalized(v - c_);
      u_.push_back(u);
      e_.push_back(tangent_basis(u));
    }
  }

  int block() const { return static_cast<int>(c_.size()) - 1; }
  int size() const { return block() * static_cast<int>(u_.size()); }

  std::vector<Vec> vertices(const Vec& s) const {
    std::vector<Vec> v;
    for (std::size_t i = 0; i < u_.size(); ++i) v.push_back(radial_boundary_point(k_, c_, ray(s, i)));
    return v;
  }

  // Gradient of the action in chart coordinates.
  Vec gradient(const ConvexBody& t, const Vec& s) const {
    const std::vector<Vec> v = vertices(s);
    const std::vector<Vec> p = chord_support_points(t, v);
    Vec out(size());
    for (std::size_t i = 0; i < u_.size(); ++i) {
      const Vec w = ray(s, i);
      const Vec g = k_.level_gradient(v[i]);
      const double tau = (v[i] - c_).norm() / w.norm();
      const Mat dq = tau * (Mat::Identity(w.size(), w.size()) - w * g.transpose() / g.dot(w)) * e_[i];
      out.segment(static_cast<Eigen::Index>(i) * block(), block()) = dq.transpose() * vertex_gradient(p, i);
    }
    return out;
  }

 private:
  const ConvexBody& k_;
  Vec c_;
  std::vector<Vec> u_;
  std::vector<Mat> e_;

  Vec ray(const Vec& s, std::size_t i) const {
    return u_[i] + e_[i] * s.segment(static_cast<Eigen::Index>(i) * block(), block());
  }
};

bool vertices_distinct(const std::vector<Vec>& v, double min_gap) {
  const std::size_t m = v.size();
  for (std::size_t i = 0; i < m; ++i) {
    if ((v[(i + 1) % m] - v[i]).norm() < min_gap) return false;
  }
  return true;
}

struct StartResult {
  std::vector<Vec> vertices;
  double residual = 0.0;
  bool converged = false;
};

StartResult refine_closed_orbit(const ConvexBody& k, const ConvexBody& t, std::vector<Vec> v,
                                const SearchOptions& opt) {
  const double min_gap = opt.distinct_fraction * k.length_scale();
  StartResult res;
  double lambda = 1e-3;
  // The chart gradient is a rescaled tangential gradient; aim below the target.
  const double tol = 0.1 * opt.stationarity_tol;
  auto norm_of = [](const Vec& r) { return r.lpNorm<Eigen::Infinity>(); };
  double r_norm = norm_of(RadialCharts(k, v).gradient(t, Vec::Zero(RadialCharts(k, v).size())));
  for (int it = 0; it < opt.max_iterations; ++it) {
    if (r_norm <= tol) {
      res.converged = true;
      break;
    }
    const RadialCharts charts(k, v);
    const int dim = charts.size();
    const Vec zero = Vec::Zero(dim);
    const Vec r0 = charts.gradient(t, zero);
    Mat jac(dim, dim);
    const double h = 1e-6;
    for (int j = 0; j < dim; ++j) {
      Vec sp = zero;
      Vec sm = zero;
      sp(j) = h;
      sm(j) = -h;
      jac.col(j) = (charts.gradient(t, sp) - charts.gradient(t, sm)) / (2.0 * h);
    }
    const Mat jtj = jac.transpose() * jac;
    const Vec jtr = jac.transpose() * r0;
    bool accepted = false;
    while (lambda < 1e12) {
      Mat a = jtj;
      a.diagonal().array() += lambda * (1.0 + jtj.diagonal().array());
      Vec step = -a.ldlt().solve(jtr);
      if (step.norm() > 0.5) step *= 0.5 / step.norm();
      const std::vector<Vec> trial = charts.vertices(step);
      if (!vertices_distinct(trial, min_gap)) {
        lambda *= 4.0;
        continue;
      }
      const RadialCharts next(k, trial);
      const double trial_norm = norm_of(next.gradient(t, Vec::Zero(next.size())));
      if (trial_norm < r_norm) {
        v = trial;
        r_norm = trial_norm;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) break;
  }
  res.converged = res.converged || r_norm <= tol;
  res.vertices = std::move(v);
  res.residual = r_norm;
  return res;
}

std::vector<Vec> seed_polygon(const ConvexBody& k, int m, std::uint64_t seed, int index) {
  std::mt19937_64 rng(seed * 1000003ULL + static_cast<std::uint64_t>(index));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 2.0 * M_PI);
  const int n = k.dimension();
  const Vec c = k.interior_point();
  auto random_unit = [&]() {
    Vec u(n);
    for (int i = 0; i < n; ++i) u(i) = gauss(rng);
    return normalized(u);
  };
  std::vector<Vec> dirs;
  if (index % 2 == 1) {
    // Near-regular polygon in a random plane (antipodal pairs for m = 2).
    const Vec a = random_unit();
    Vec b = random_unit();
    b = normalized(b - b.dot(a) * a);
    const double phase = unif(rng);
    for (int i = 0; i < m; ++i) {
      const double phi = phase + 2.0 * M_PI * i / m + 0.15 * gauss(rng) / m;
      dirs.push_back(std::cos(phi) * a + std::sin(phi) * b);
    }
  } else if (n == 2) {
    std::vector<double> angles;
    for (int i = 0; i < m; ++i) angles.push_back(unif(rng));
    std::sort(angles.begin(), angles.end());
    for (double phi : angles) dirs.push_back(make_vec({std::cos(phi), std::sin(phi)}));
  } else {
    for (int i = 0; i < m; ++i) dirs.push_back(random_unit());
  }
  std::vector<Vec> v;
  for (const Vec& d : dirs) v.push_back(radial_boundary_point(k, c, d));
  return v;
}

Orbit orbit_from_vertices(const ConvexBody& k, const ConvexBody& t, const std::vector<Vec>& v) {
  Orbit o;
  o.points = v;
  o.closed = true;
  const std::size_t m = v.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Vec chord = v[(i + 1) % m] - v[i];
    o.directions.push_back(normalized(chord));
    o.lengths.push_back(t.support(chord));
    o.action += o.lengths.back();
  }
  o.stationarity = stationarity_residual(k, t, v);
  return o;
}

}  // namespace

Orbit closed_orbit_search(const ConvexBody& k, const ConvexBody& t, int bounces, const SearchOptions& options) {
  if (bounces < 2) throw PreconditionError("closed orbits need at least two bounces");
  if (k.dimension() != t.dimension()) throw PreconditionError("K and T must have the same dimension");
  if (!k.bounded() || !t.bounded()) throw PreconditionError("closed orbit search needs bounded bodies");
  if (options.multistarts < 1) throw PlanError("at least one start is required");
  const int starts = options.multistarts;
  std::vector<StartResult> results(static_cast<std::size_t>(starts));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i = next++; i < starts; i = next++) {
      StartResult& r = results[static_cast<std::size_t>(i)];
      try {
        r = refine_closed_orbit(k, t, seed_polygon(k, bounces, options.seed, i), options);
      } catch (const NumericError&) {
        r = StartResult{};
        r.residual = std::numeric_limits<double>::infinity();
      }
    }
  };
  int threads = options.threads > 0 ? options.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, starts);
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();

  const double min_gap = options.distinct_fraction * k.length_scale();
  int best = -1;
  double best_action = std::numeric_limits<double>::infinity();
  for (int i = 0; i < starts; ++i) {
    const StartResult& r = results[static_cast<std::size_t>(i)];
    if (!r.converged || !vertices_distinct(r.vertices, min_gap)) continue;
    if (reflection_law_residual(k, t, r.vertices) > 1e-6) continue;
    if (stationarity_residual(k, t, r.vertices) > options.stationarity_tol) continue;
    const double a = closed_action(t, r.vertices);
    if (a < best_action - 1e-12 * std::max(1.0, std::abs(a))) {
      best_action = a;
      best = i;
    }
  }
  if (best >= 0) return orbit_from_vertices(k, t, results[static_cast<std::size_t>(best)].vertices);

  int fallback = -1;
  for (int i = 0; i < starts; ++i) {
    const StartResult& r = results[static_cast<std::size_t>(i)];
    if (r.vertices.empty() || !std::isfinite(r.residual)) continue;
    if (fallback < 0 || r.residual < results[static_cast<std::size_t>(fallback)].residual) fallback = i;
  }
  if (fallback < 0) throw ConvergenceError("no start produced a closed polygon", options.max_iterations, 0.0);
  Orbit o = orbit_from_vertices(k, t, results[static_cast<std::size_t>(fallback)].vertices);
  o.status = OrbitStatus::stagnated;
  return o;
}

CapacityEstimate capacity_estimate(const ConvexBody& k, const ConvexBody& t, int m_max,
                                   const SearchOptions& options) {
  if (m_max < 2) throw PreconditionError("m_max must be at least 2");
  CapacityEstimate est{std::numeric_limits<double>::infinity(), {}, {}};
  bool best_complete = false;
  for (int m = 2; m <= m_max; ++m) {
    Orbit o = closed_orbit_search(k, t, m, options);
    est.table.push_back({m, o.action, o.stationarity, o.status});
    const bool complete = o.status == OrbitStatus::complete;
    const bool better = est.best.points.empty() || (complete && !best_complete) ||
                        (complete == best_complete && o.action < est.value);
    if (better) {
      est.value = o.action;
      est.best = std::move(o);
      best_complete = complete;
    }
  }
  return est;
}

VolumeEstimate mahler_product(const BodyPtr& k, double target_relative_error) {
  if (!k->symmetric_about_origin()) throw PreconditionError("Mahler product needs a body symmetric about the origin");
  const VolumeEstimate a = volume(*k, target_relative_error);
  const VolumeEstimate b = volume(*polar_dual(k), target_relative_error);
  VolumeEstimate out;
  out.value = a.value * b.value;
  out.error = out.value * (a.error / a.value + b.error / b.value);
  out.exact = a.exact && b.exact;
  if (out.error > 1e-3 * out.value) throw PrecisionError("volume estimates are too noisy for the Mahler product");
  return out;
}

double mahler_product(const Polygon& k) {
  if (!k.symmetric_about_origin()) throw PreconditionError("Mahler product needs a polygon symmetric about the origin");
  return k.area() * polar_dual(k).area();
}

double viterbo_ratio(double capacity, const ConvexBody& k, const ConvexBody& t) {
  const int n = k.dimension();
  double factorial = 1.0;
  for (int i = 2; i <= n; ++i) factorial *= i;
  return std::pow(capacity, n) / (factorial * volume(k).value * volume(t).value);
}

}  // namespace ktb
