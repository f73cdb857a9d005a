#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "ktb/dynamics.hpp"
#include "ktb/errors.hpp"
#include "ktb/osculation.hpp"
#include "ktb/projectivity.hpp"
#include "ktb/reflection.hpp"

namespace ktb::cli {

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fixed4(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

std::string join_vec(const Vec& v, const char* sep) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) s += sep;
    s += format_number(v(i));
  }
  return s;
}

std::vector<std::string> axis_names(const std::string& prefix, int n) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

void append(std::vector<std::string>& row, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(format_number(v(i)));
}

std::filesystem::path output_path(const RunOptions& opts, const std::string& name) {
  const std::filesystem::path dir(opts.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + opts.out_dir + "': " + ec.message());
  return dir / name;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(open_output(path)) {
    row(header);
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out_ << ',';
      out_ << quote(fields[i]);
    }
    out_ << "\r\n";
  }

 private:
  static std::string quote(const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
    std::string q = "\"";
    for (char c : f) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  }

  std::ofstream out_;
};

/// Hand-written SVG: polylines in world coordinates, y pointing up.
class SvgPlot {
 public:
  void polyline(const std::vector<Vec>& pts, const std::string& stroke, bool closed) {
    if (!pts.empty()) lines_.push_back({pts, stroke, closed});
  }

  void write(const std::filesystem::path& path) const {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& l : lines_) {
      for (const Vec& p : l.pts) {
        xmin = std::min(xmin, p(0));
        xmax = std::max(xmax, p(0));
        ymin = std::min(ymin, p(1));
        ymax = std::max(ymax, p(1));
      }
    }
    if (lines_.empty()) xmin = ymin = -1.0, xmax = ymax = 1.0;
    const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});
    const double pad = 0.05 * span;
    const double scale = 500.0 / (span + 2.0 * pad);
    const double w = (xmax - xmin + 2.0 * pad) * scale;
    const double h = (ymax - ymin + 2.0 * pad) * scale;
    std::ofstream out = open_output(path);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.1f\" height=\"%.1f\" viewBox=\"0 0 %.1f %.1f\">\n",
                  w, h, w, h);
    out << buf;
    for (const auto& l : lines_) {
      out << "<path fill=\"none\" stroke=\"" << l.stroke << "\" stroke-width=\"1.5\" d=\"";
      for (std::size_t i = 0; i < l.pts.size(); ++i) {
        const double x = (l.pts[i](0) - xmin + pad) * scale;
        const double y = (ymax + pad - l.pts[i](1)) * scale;
        std::snprintf(buf, sizeof buf, "%s%.3f %.3f", i == 0 ? "M" : " L", x, y);
        out << buf;
      }
      if (l.closed) out << " Z";
      out << "\"/>\n";
    }
    out << "</svg>\n";
  }

 private:
  struct Line {
    std::vector<Vec> pts;
    std::string stroke;
    bool closed;
  };
  std::vector<Line> lines_;
};

std::uint64_t run_seed(const ExperimentConfig& cfg, const RunOptions& opts) {
  return opts.seed ? *opts.seed : cfg.experiment().unsigned_integer("seed", 1);
}

Vec random_unit(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(n);
  for (;;) {
    for (int i = 0; i < n; ++i) v(i) = gauss(rng);
    if (v.norm() > 1e-3) return v.normalized();
  }
}

OrientedLine random_line(std::mt19937_64& rng, const ConvexBody& k) {
  std::uniform_real_distribution<double> unif(0.0, 0.9);
  const int n = k.dimension();
  const Vec c = k.interior_point();
  const Vec edge = radial_boundary_point(k, c, random_unit(rng, n));
  const Vec inside = c + unif(rng) * (edge - c);
  return OrientedLine(inside, random_unit(rng, n));
}

std::vector<Vec> outline(const ConvexBody& body, int samples = 256) {
  std::vector<Vec> pts;
  const Vec c = body.interior_point();
  for (int i = 0; i < samples; ++i) {
    const double a = 2.0 * kPi * i / samples;
    Vec d(2);
    d << std::cos(a), std::sin(a);
    pts.push_back(radial_boundary_point(body, c, d));
  }
  return pts;
}

long long positive(const ConfigSection& s, const std::string& key, long long fallback, long long min = 1) {
  const long long v = s.integer(key, fallback);
  if (v < min) {
    throw ConfigError("'" + key + "' must be at least " + std::to_string(min), s.at(key).line);
  }
  return v;
}

void require_same_dimension(const ConvexBody& k, const ConvexBody& t) {
  if (k.dimension() != t.dimension()) throw ConfigError("bodies K and T have different dimensions");
}

/// c with f(t) = -t / (1 + c t) + O(t^3). For a projective involution
/// c(t) = -(t + f(t)) / (t f(t)) is constant, so extrapolate its even part to t = 0.
double involution_parameter(const std::function<double(double)>& f) {
  auto c = [&](double t) {
    const double ft = f(t);
    return -(t + ft) / (t * ft);
  };
  constexpr int levels = 4;
  double table[levels][levels];
  for (int k = 0; k < levels; ++k) {
    const double t = 0.05 / std::pow(2.0, k);
    table[k][0] = 0.5 * (c(t) + c(-t));
    for (int m = 1; m <= k; ++m) {
      table[k][m] = table[k][m - 1] + (table[k][m - 1] - table[k - 1][m - 1]) / (std::pow(4.0, m) - 1.0);
    }
  }
  return table[levels - 1][levels - 1];
}

std::string body_id(const ExperimentConfig& cfg, const std::string& label) {
  return label + ":" + cfg.body_section(label).at("kind").value;
}

}  // namespace

void cmd_reflect(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log) {
  const BodyPtr k = cfg.body("K");
  const BodyPtr t = cfg.body("T");
  require_same_dimension(*k, *t);
  const int n = k->dimension();
  const long long lines = positive(cfg.experiment(), "lines", 100);
  std::mt19937_64 rng(run_seed(cfg, opts));

  std::vector<std::string> header = {"line"};
  for (const char* p : {"p", "d", "q", "r"}) {
    const auto names = axis_names(p, n);
    header.insert(header.end(), names.begin(), names.end());
  }
  header.push_back("status");
  CsvWriter csv(output_path(opts, "reflect.csv"), header);

  long long grazing = 0;
  for (long long i = 0; i < lines; ++i) {
    const OrientedLine line = random_line(rng, *k);
    std::vector<std::string> row = {std::to_string(i)};
    append(row, line.point);
    append(row, line.direction);
    try {
      const OrientedLine out = t_billiard_reflect(*k, *t, line);
      append(row, out.point);
      append(row, out.direction);
      row.push_back("ok");
    } catch (const GrazingError&) {
      ++grazing;
      for (int j = 0; j < 2 * n; ++j) row.push_back("nan");
      row.push_back("grazing");
    }
    csv.row(row);
  }
  log << "reflected " << lines - grazing << " of " << lines << " lines\n";
}

void cmd_trace(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log) {
  const BodyPtr k = cfg.body("K");
  const BodyPtr t = cfg.body("T");
  require_same_dimension(*k, *t);
  const int n = k->dimension();
  const ConfigSection& e = cfg.experiment();
  const Vec point = e.vector("line_point");
  const Vec direction = e.vector("line_direction");
  if (point.size() != n) throw ConfigError("line_point has the wrong dimension", e.at("line_point").line);
  if (direction.size() != n || direction.norm() == 0.0) {
    throw ConfigError("line_direction must be a nonzero vector of the body dimension", e.at("line_direction").line);
  }
  const long long steps = positive(e, "steps", 10, 0);
  const OrientedLine line(point, direction);

  std::vector<std::string> header = {"vertex"};
  const auto names = axis_names("x", n);
  header.insert(header.end(), names.begin(), names.end());
  header.push_back("segment_length");
  header.push_back("action");
  CsvWriter csv(output_path(opts, "orbit.csv"), header);

  log << "line point=(" << join_vec(line.point, ", ") << ") direction=(" << join_vec(line.direction, ", ")
      << ")\n";
  if (steps == 0) {
    log << "orbit: empty\n";
    if (n == 2) {
      SvgPlot svg;
      svg.polyline(outline(*k), "black", true);
      svg.write(output_path(opts, "trace.svg"));
    }
    return;
  }

  const Orbit orbit = iterate_t_billiard(*k, *t, line, static_cast<int>(steps));
  double action = 0.0;
  for (std::size_t i = 0; i < orbit.points.size(); ++i) {
    std::vector<std::string> row = {std::to_string(i)};
    append(row, orbit.points[i]);
    if (i < orbit.lengths.size()) {
      row.push_back(format_number(orbit.lengths[i]));
      action += orbit.lengths[i];
    } else {
      row.push_back("");
    }
    row.push_back(format_number(action));
    csv.row(row);
  }
  if (n == 2) {
    SvgPlot svg;
    svg.polyline(outline(*k), "black", true);
    svg.polyline(orbit.points, "red", false);
    svg.write(output_path(opts, "trace.svg"));
  }
  log << "orbit: " << orbit.lengths.size() << " segments, status " << to_string(orbit.status) << ", action "
      << format_number(orbit.action) << "\n";
}

void cmd_projtest(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log) {
  const std::string label = cfg.has_body("T") ? "T" : "K";
  const BodyPtr t = cfg.body(label);
  const int n = t->dimension();
  const ConfigSection& e = cfg.experiment();
  const long long directions = positive(e, "directions", 20);
  SamplePlan plan;
  plan.scale = e.number("patch_scale", plan.scale);
  plan.samples = static_cast<int>(positive(e, "samples", plan.samples, 2));
  if (!(plan.scale > 0.0)) throw ConfigError("patch_scale must be positive", e.at("patch_scale").line);
  std::mt19937_64 rng(run_seed(cfg, opts));

  CsvWriter csv(output_path(opts, "projtest.csv"),
                {"body-id", "direction-class", "patch-scale", "residual", "fitted-exponent", "fitted-coefficient"});
  const std::string id = body_id(cfg, label);
  double worst = 0.0;
  for (long long i = 0; i < directions; ++i) {
    const Vec d = random_unit(rng, n);
    const SphereInvolutionSampler sampler = chord_involution_sampler(t, d);
    const double residual = projectivity_residual(sampler, plan);
    worst = std::max(worst, residual);
    double exponent = std::nan("");
    double coefficient = std::nan("");
    if (n == 2) {
      const auto f = slope_chart(sampler);
      // Differences below ten times the sampled involution defect count as round-off.
      DyadicGrid grid;
      double noise = 1e-15;
      for (int j = grid.j_min; j <= grid.j_max; ++j) {
        const double x = std::ldexp(1.0, -j);
        noise = std::max({noise, std::abs(f(f(x)) - x), std::abs(f(f(-x)) + x)});
      }
      grid.relative_floor = false;
      grid.epsilon = 10.0 * noise / 1e3;
      try {
        const double a2 = involution_parameter(f);
        const auto g = [a2](double x) { return -x / (1.0 + a2 * x); };
        const DeviationFit fit = deviation_exponent(f, g, grid);
        exponent = fit.exponent;
        coefficient = fit.coefficient;
      } catch (const IndistinguishableError&) {
        coefficient = 0.0;
      } catch (const PrecisionError&) {
      }
    }
    csv.row({id, join_vec(d, " "), format_number(plan.scale), format_number(residual), format_number(exponent),
             format_number(coefficient)});
  }
  log << "max residual " << format_number(worst) << "\n";
  if (opts.tol) log << (worst <= *opts.tol ? "within" : "above") << " tolerance " << format_number(*opts.tol) << "\n";
}

void cmd_osculate(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log) {
  const BodyPtr k = cfg.body("K");
  const int n = k->dimension();
  const ConfigSection& e = cfg.experiment();
  const long long points = positive(e, "points", 24);
  const double tol = opts.tol ? *opts.tol : e.number("tol", 1e-6);
  const Vec c = k->interior_point();

  if (n == 2) {
    CsvWriter csv(output_path(opts, "osculate.csv"),
                  {"point", "angle", "x", "y", "gap", "affine_curvature", "affine_curvature_derivative", "sextactic",
                   "c_xx", "c_xy", "c_yy", "c_x", "c_y", "c_1"});
    int sextactic = 0;
    for (long long i = 0; i < points; ++i) {
      const double a = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(points);
      Vec d(2);
      d << std::cos(a), std::sin(a);
      const Vec p = radial_boundary_point(*k, c, d);
      const GraphGerm germ = curve_germ(*k, p);
      const Vec nu = exterior_normal(*k, p);
      Mat frame(2, 2);
      frame.col(0) = rotate_quarter(nu);
      frame.col(1) = -nu;
      const ConicQuadric conic = osculating_conic(germ).affine_image(frame, p);
      const AffineCurvature mu = affine_curvature(germ);
      std::string gap = "nan";
      std::string flag = "unknown";
      try {
        const SextacticTest s = is_sextactic(germ, tol);
        gap = format_number(s.gap);
        flag = s.sextactic ? "yes" : "no";
        if (s.sextactic) ++sextactic;
      } catch (const PrecisionError&) {
      }
      std::vector<std::string> row = {std::to_string(i), format_number(a), format_number(p(0)), format_number(p(1)),
                                      gap, format_number(mu.value), format_number(mu.derivative), flag};
      append(row, conic.coefficients());
      csv.row(row);
    }
    log << "sampled " << points << " boundary points, " << sextactic << " sextactic at tolerance "
        << format_number(tol) << "\n";
    return;
  }

  std::mt19937_64 rng(run_seed(cfg, opts));
  std::vector<std::string> header = {"point"};
  for (const char* p : {"o", "e1_", "en_"}) {
    const auto names = axis_names(p, n);
    header.insert(header.end(), names.begin(), names.end());
  }
  header.push_back("a");
  header.push_back("e");
  const int ncoef = (n + 1) * (n + 2) / 2;
  const auto qnames = axis_names("q", ncoef);
  header.insert(header.end(), qnames.begin(), qnames.end());
  CsvWriter csv(output_path(opts, "osculate.csv"), header);

  for (long long i = 0; i < points; ++i) {
    const Vec o = radial_boundary_point(*k, c, random_unit(rng, n));
    const Vec nu = exterior_normal(*k, o);
    Vec u = random_unit(rng, n);
    u -= u.dot(nu) * nu;
    const PlanarSectionFrame frame = PlanarSectionFrame::make(*k, o, u.normalized(), -nu);
    OsculatingQuadric details{ConicQuadric(Mat::Identity(n + 1, n + 1)), 0.0, 0.0, 0.0, Vec(), Vec(), Mat(), Vec()};
    const ConicQuadric q = osculating_quadric_along_curve(*k, frame, &details);
    std::vector<std::string> row = {std::to_string(i)};
    append(row, frame.origin);
    append(row, frame.e1);
    append(row, frame.en);
    row.push_back(format_number(details.a));
    row.push_back(format_number(details.e));
    append(row, q.coefficients());
    csv.row(row);
  }
  log << "osculating quadrics along " << points << " normal sections\n";
}

void cmd_capacity(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log) {
  const BodyPtr k = cfg.body("K");
  const BodyPtr t = cfg.body("T");
  require_same_dimension(*k, *t);
  const ConfigSection& e = cfg.experiment();
  const int m_max = static_cast<int>(positive(e, "m_max", 5, 2));
  SearchOptions search;
  search.multistarts = static_cast<int>(positive(e, "multistarts", search.multistarts));
  search.seed = run_seed(cfg, opts);
  if (opts.tol) search.stationarity_tol = *opts.tol;

  const CapacityEstimate est = capacity_estimate(*k, *t, m_max, search);
  CsvWriter csv(output_path(opts, "capacity.csv"), {"m", "action", "stationarity", "status"});
  for (const CapacityRow& r : est.table) {
    csv.row({std::to_string(r.bounces), format_number(r.action), format_number(r.stationarity), to_string(r.status)});
  }
  if (k->dimension() == 2 && !est.best.points.empty()) {
    SvgPlot svg;
    svg.polyline(outline(*k), "black", true);
    svg.polyline(est.best.points, "red", true);
    svg.write(output_path(opts, "capacity.svg"));
  }
  log << "capacity " << fixed4(est.value) << "\n";
  log << "viterbo_ratio " << format_number(viterbo_ratio(est.value, *k, *t)) << "\n";
  if (k->symmetric_about_origin()) log << "mahler_product_K " << format_number(mahler_product(k).value) << "\n";
}

void cmd_sweep(const ExperimentConfig& cfg, const RunOptions& opts, std::ostream& log) {
  const ConfigSection& e = cfg.experiment();
  const double p_min = e.number("p_min", 2.0);
  const double p_max = e.number("p_max", 6.0);
  const long long steps = positive(e, "p_steps", 9, 2);
  if (!(p_min > 1.0) || !(p_max >= p_min)) throw ConfigError("need 1 < p_min <= p_max", e.line);
  const double angle = e.number("direction_angle", 0.3);
  SamplePlan plan;
  plan.scale = e.number("patch_scale", plan.scale);
  plan.samples = static_cast<int>(positive(e, "samples", plan.samples, 2));
  Vec axes = Vec::Ones(2);
  if (cfg.has_body("T") && cfg.body_section("T").has("semi_axes")) axes = cfg.body_section("T").vector("semi_axes");
  if (axes.size() != 2) throw ConfigError("sweep runs on planar bodies", cfg.body_section("T").at("semi_axes").line);

  Vec d(2);
  d << std::cos(angle), std::sin(angle);
  CsvWriter csv(output_path(opts, "sweep.csv"), {"p", "residual"});
  std::vector<Vec> curve;
  for (long long i = 0; i < steps; ++i) {
    const double p = p_min + (p_max - p_min) * static_cast<double>(i) / static_cast<double>(steps - 1);
    const BodyPtr t = Superellipsoid::make(axes, p);
    const double r = projectivity_residual(chord_involution_sampler(t, d), plan);
    csv.row({format_number(p), format_number(r)});
    Vec pt(2);
    pt << p, std::log10(std::max(r, 1e-17));
    curve.push_back(pt);
  }
  SvgPlot svg;
  svg.polyline(curve, "blue", false);
  svg.write(output_path(opts, "sweep.svg"));
  log << "swept " << steps << " exponents in [" << format_number(p_min) << ", " << format_number(p_max) << "]\n";
}

}  // namespace ktb::cli
