#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/SVD>

#include "ktb/errors.hpp"
#include "ktb/osculation.hpp"
#include "support.hpp"

using namespace ktb;

namespace {

using Poly = std::vector<double>;

Poly poly_mul(const Poly& a, const Poly& b, std::size_t order) {
  Poly r(order + 1, 0.0);
  for (std::size_t i = 0; i < a.size() && i <= order; ++i) {
    for (std::size_t j = 0; j < b.size() && i + j <= order; ++j) r[i + j] += a[i] * b[j];
  }
  return r;
}

// Coefficients of Q(x, h(x)) for the six conic monomials x^2, xy, y^2, x, y, 1.
std::vector<Poly> conic_monomials_on_graph(const Poly& h, std::size_t order) {
  const Poly x = {0.0, 1.0};
  const Poly one = {1.0};
  return {poly_mul(x, x, order), poly_mul(x, h, order), poly_mul(h, h, order), x, h, one};
}

// Raw x^5 gap between h and the conic through its 4-jet, found as the null
// vector of the five vanishing conditions Q(x, h(x)) = O(x^5).
double oracle_raw_gap(const Poly& h) {
  const auto mons = conic_monomials_on_graph(h, 5);
  Mat a = Mat::Zero(5, 6);
  for (int k = 0; k < 5; ++k) {
    for (int m = 0; m < 6; ++m) {
      const Poly& p = mons[static_cast<std::size_t>(m)];
      a(k, m) = static_cast<std::size_t>(k) < p.size() ? p[static_cast<std::size_t>(k)] : 0.0;
    }
  }
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const Vec q = svd.matrixV().col(5);
  double c5 = 0.0;
  for (int m = 0; m < 6; ++m) {
    const Poly& p = mons[static_cast<std::size_t>(m)];
    if (p.size() > 5) c5 += q(m) * p[5];
  }
  // Near the origin Q(x, y) ~ E (y - y_conic(x)), E the y coefficient.
  return c5 / q(4);
}

double poly_derivative(const Poly& p, int k, double x) {
  double r = 0.0;
  for (std::size_t i = static_cast<std::size_t>(k); i < p.size(); ++i) {
    double f = 1.0;
    for (int j = 0; j < k; ++j) f *= static_cast<double>(i - static_cast<std::size_t>(j));
    r += p[i] * f * std::pow(x, static_cast<double>(i) - k);
  }
  return r;
}

double graph_affine_curvature(const Poly& p, double x) {
  const double f2 = poly_derivative(p, 2, x);
  const double f3 = poly_derivative(p, 3, x);
  const double f4 = poly_derivative(p, 4, x);
  return (3.0 * f2 * f4 - 5.0 * f3 * f3) / (9.0 * std::pow(f2, 8.0 / 3.0));
}

GraphGerm germ_from(const Poly& p) { return GraphGerm::planar(std::span<const double>(p.data(), p.size())); }

TaylorSeries series3(int order, std::initializer_list<std::pair<std::array<int, 2>, double>> terms) {
  TaylorSeries h(2, order);
  for (const auto& [e, v] : terms) h.set_coeff({e[0], e[1]}, v);
  return h;
}

}  // namespace

TEST_CASE("conic quadric normalization and transforms") {
  const ConicQuadric q = ConicQuadric::conic(-2.0, 0.0, -2.0, 0.0, 0.0, 2.0);
  const Vec c = q.coefficients();
  CHECK(c.norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c(0) > 0.0);
  CHECK(q.value(make_vec({1.0, 0.0})) == doctest::Approx(0.0).scale(1.0));
  const ConicQuadric back = ConicQuadric::from_coefficients(2, c);
  CHECK(back.distance(q) <= 1e-15);

  Mat m(2, 2);
  m << 2.0, 0.5, -0.3, 1.2;
  const Vec b = make_vec({0.4, -1.0});
  const ConicQuadric img = q.affine_image(m, b);
  for (int i = 0; i < 8; ++i) {
    const double t = 0.7 * i;
    const Vec x = m * make_vec({std::cos(t), std::sin(t)}) + b;
    CHECK(std::abs(img.value(x)) <= 1e-13);
  }
  CHECK_THROWS_AS(ConicQuadric::conic(0, 0, 0, 0, 0, 0), DegenerateDataError);
}

TEST_CASE("osculating conic of conics and of the quintic germ") {
  const GraphGerm parabola = GraphGerm::planar({0.0, 0.0, 0.5});
  CHECK(osculating_conic(parabola).distance(ConicQuadric::conic(0.5, 0, 0, 0, -1, 0)) <= 1e-14);
  CHECK(fifth_order_gap(parabola, osculating_conic(parabola)) == 0.0);

  const GraphGerm quintic = GraphGerm::planar({0.0, 0.0, 0.5, 0.0, 0.0, 1.0});
  CHECK(osculating_conic(quintic).distance(ConicQuadric::conic(0.5, 0, 0, 0, -1, 0)) <= 1e-14);
  CHECK(fifth_order_gap(quintic, osculating_conic(quintic)) == doctest::Approx(1.0).epsilon(1e-12));
  const SextacticTest s = is_sextactic(quintic, 1e-6);
  CHECK_FALSE(s.sextactic);
  CHECK(s.gap == doctest::Approx(1.0).epsilon(1e-12));

  // Circle x^2 + (y - 1)^2 = 1 through the origin.
  const GraphGerm circle = GraphGerm::planar({0.0, 0.0, 0.5, 0.0, 0.125, 0.0, 0.0625, 0.0});
  CHECK(osculating_conic(circle).distance(ConicQuadric::conic(1, 0, 1, 0, -2, 0)) <= 1e-14);
  CHECK(std::abs(fifth_order_gap(circle, osculating_conic(circle))) <= 1e-12);

  const ParametricCurve unit = ParametricCurve::ellipse(1.0, 1.0);
  const ConicQuadric world_circle = ConicQuadric::conic(1, 0, 1, 0, 0, -1);
  for (int i = 0; i < 12; ++i) {
    CHECK(osculating_conic(unit, 0.5 * i).distance(world_circle) <= 1e-10);
  }
  CHECK_THROWS_AS(GraphGerm::planar({0.0, 0.0, 0.0, 1.0, 0.0, 0.0}), ConvexityError);
}

TEST_CASE("fifth order gap read off and against the null-vector oracle") {
  for (double c0 : {1e-2, -1e-2, 1e-3, -1e-3}) {
    const GraphGerm g = GraphGerm::planar({0.0, 0.0, 0.5, 0.0, 0.0, c0});
    CHECK(fifth_order_gap(g, osculating_conic(g)) == doctest::Approx(c0).epsilon(1e-10));
  }
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const double a2 = 0.3 + std::abs(u(rng));
    const Poly p = {0.0, 0.0, a2, u(rng), u(rng), u(rng), u(rng)};
    const GraphGerm g = germ_from(p);
    const double expected = oracle_raw_gap(p) / std::pow(2.0 * a2, 4);
    CHECK(fifth_order_gap(g, osculating_conic(g)) == doctest::Approx(expected).epsilon(1e-8));
  }
  const GraphGerm g = GraphGerm::planar({0.0, 0.0, 0.5, 0.0, 0.0, 1e-2});
  CHECK_THROWS_AS(fifth_order_gap(g, ConicQuadric::conic(0.6, 0, 0, 0, -1, 0)), PreconditionError);
}

TEST_CASE("gap scaling law under the curvature preserving rescale") {
  // h(x) -> h(lambda x) / lambda^2 keeps the curvature and multiplies the gap by lambda^3.
  const Poly p = {0.0, 0.0, 0.5, 0.3, -0.2, 0.05, 0.1};
  const GraphGerm g = germ_from(p);
  const double base = fifth_order_gap(g, osculating_conic(g));
  for (double lambda : {0.5, 2.0, 3.0}) {
    Poly q(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) q[k] = p[k] * std::pow(lambda, static_cast<double>(k) - 2.0);
    const GraphGerm gq = germ_from(q);
    CHECK(fifth_order_gap(gq, osculating_conic(gq)) ==
          doctest::Approx(std::pow(lambda, 3) * base).epsilon(1e-9));
  }
  // A homothety leaves the normalized gap unchanged.
  Poly h(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) h[k] = p[k] * std::pow(3.0, 1.0 - static_cast<double>(k));
  const GraphGerm gh = germ_from(h);
  CHECK(fifth_order_gap(gh, osculating_conic(gh)) == doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("affine curvature on conics and the quintic germ") {
  const ParametricCurve ellipse = ParametricCurve::ellipse(2.0, 1.0);
  const double mu0 = affine_curvature(ellipse.germ(0.0)).value;
  for (int i = 0; i < 24; ++i) {
    const AffineCurvature k = affine_curvature(ellipse.germ(0.26 * i));
    CHECK(std::abs(k.derivative) <= 1e-9);
    CHECK(k.value == doctest::Approx(mu0).epsilon(1e-9));
    CHECK(is_sextactic(ellipse.germ(0.26 * i), 1e-8).sextactic);
  }
  const ParametricCurve unit = ParametricCurve::ellipse(1.0, 1.0);
  std::vector<double> values;
  for (int i = 0; i < 16; ++i) values.push_back(affine_curvature(unit.germ(0.4 * i)).value);
  for (double v : values) CHECK(std::abs(v - values.front()) <= 1e-8);

  for (double c : {1.0, 1e-2, -1e-3}) {
    const Poly p = {0.0, 0.0, 0.5, 0.0, 0.0, c};
    const double d = affine_curvature(germ_from(p)).derivative;
    const double step = 1e-3;
    const double fd = (graph_affine_curvature(p, step) - graph_affine_curvature(p, -step)) / (2.0 * step);
    CHECK(d != 0.0);
    CHECK(d == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("sextactic points of a bumped ellipse") {
  const ParametricCurve curve = ParametricCurve::bumped_ellipse(2.0, 1.0, 0.05);
  const std::vector<double> roots = sextactic_parameters(curve, 720);
  CHECK(roots.size() >= 6);
  CHECK(roots.size() % 2 == 0);
  CHECK(roots.size() <= 40);
  const double tol = 1e-6;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    CHECK(is_sextactic(curve.germ(roots[i]), tol).sextactic);
    const double next = i + 1 < roots.size() ? roots[i + 1] : roots.front() + curve.period();
    const double mid = 0.5 * (roots[i] + next);
    const GraphGerm g = curve.germ(mid);
    const SextacticTest s = is_sextactic(g, tol);
    const double deriv = affine_curvature(normalize_unit_curvature(g)).derivative;
    CHECK(s.sextactic == (std::abs(deriv) <= 40.0 * tol));
    CHECK_FALSE(s.sextactic);
  }
  // In the unit-curvature chart d(mu)/ds equals 40 times the gap.
  for (int i = 0; i < 30; ++i) {
    const GraphGerm g = curve.germ(0.2 * i + 0.05);
    const double gap = is_sextactic(g, tol).gap;
    const double deriv = affine_curvature(normalize_unit_curvature(g)).derivative;
    CHECK(deriv == doctest::Approx(40.0 * gap).epsilon(1e-9).scale(1e-12));
  }
}

TEST_CASE("osculating conic is affinely natural") {
  const ParametricCurve curve = ParametricCurve::bumped_ellipse(1.5, 1.0, 0.05);
  Mat m(2, 2);
  m << 1.3, 0.4, -0.2, 0.9;
  const Vec b = make_vec({0.3, -0.7});
  const ParametricCurve mapped([m, b](const TaylorSeries& t) {
    const TaylorSeries r = 1.0 + 0.05 * pow_int(sin(t), 5);
    const TaylorSeries x = 1.5 * cos(t) * r;
    const TaylorSeries y = sin(t) * r;
    return std::array<TaylorSeries, 2>{m(0, 0) * x + m(0, 1) * y + b(0), m(1, 0) * x + m(1, 1) * y + b(1)};
  });
  for (int i = 0; i < 10; ++i) {
    const double theta = 0.6 * i + 0.1;
    const ConicQuadric moved = osculating_conic(curve, theta).affine_image(m, b);
    CHECK(osculating_conic(mapped, theta).distance(moved) <= 1e-9);
  }
}

TEST_CASE("osculating quadric read off from the germ") {
  const TaylorSeries h =
      series3(5, {{{2, 0}, 1.0}, {{1, 1}, 1.0}, {{0, 2}, 1.0}, {{2, 1}, 0.3}, {{5, 0}, 1e-2}});
  const OsculatingQuadric q = osculating_quadric_along_curve(GraphGerm(h));
  CHECK(q.d(0) == doctest::Approx(-0.3).epsilon(1e-12));
  CHECK(q.c(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(q.a_hat(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(q.a == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(q.l(0)) <= 1e-14);
  CHECK(q.frame_quadric.distance(
            ConicQuadric::normal_form(1.0, make_vec({1.0}), Mat::Identity(1, 1), make_vec({-0.3}))) <= 1e-12);

  // Restriction to the section plane is the osculating conic of the section.
  Mat plane = Mat::Zero(3, 2);
  plane(0, 0) = 1.0;
  plane(2, 1) = 1.0;
  CHECK(q.frame_quadric.restrict_to(Vec::Zero(3), plane).distance(ConicQuadric::conic(1, 0, 0, 0, -1, 0)) <= 1e-9);

  const TaylorSeries h0 = series3(5, {{{2, 0}, 1.0}, {{1, 1}, 0.4}, {{0, 2}, 2.0}, {{1, 2}, 0.7}});
  const OsculatingQuadric q0 = osculating_quadric_along_curve(GraphGerm(h0));
  CHECK(std::abs(q0.d(0)) <= 1e-14);

  const TaylorSeries h3 = series3(5, {{{2, 0}, 1.0}, {{0, 2}, 1.0}, {{3, 0}, 0.2}});
  CHECK_THROWS_AS(osculating_quadric_along_curve(GraphGerm(h3)), PreconditionError);

  // Four dimensions: d_j = -s_j / a with the x1^2 x_j coefficients s_j.
  TaylorSeries h4(3, 5);
  h4.set_coeff({2, 0, 0}, 0.5);
  h4.set_coeff({0, 2, 0}, 1.0);
  h4.set_coeff({0, 0, 2}, 1.5);
  h4.set_coeff({0, 1, 1}, 0.2);
  h4.set_coeff({1, 1, 0}, -0.4);
  h4.set_coeff({1, 0, 1}, 0.6);
  h4.set_coeff({2, 1, 0}, 0.25);
  h4.set_coeff({2, 0, 1}, -0.5);
  const OsculatingQuadric q4 = osculating_quadric_along_curve(GraphGerm(h4));
  CHECK(q4.d(0) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(q4.d(1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(q4.c(0) == doctest::Approx(-0.4).epsilon(1e-12));
  CHECK(q4.a_hat(0, 1) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("osculating quadric of quadrics is the quadric") {
  const BodyPtr ball = Ellipsoid::ball(3);
  const Vec o = make_vec({0.0, 0.0, 1.0});
  Vec unit_sphere(10);
  unit_sphere << 1, 0, 0, 1, 0, 1, 0, 0, 0, -1;
  const ConicQuadric s = ConicQuadric::from_coefficients(3, unit_sphere);
  const auto through_centre = PlanarSectionFrame::make(*ball, o, make_vec({1, 0, 0}), make_vec({0, 0, 1}));
  CHECK(osculating_quadric_along_curve(*ball, through_centre).distance(s) <= 1e-9);
  const auto tilted = PlanarSectionFrame::make(*ball, o, make_vec({1, 0, 0}), make_vec({0, 0.6, -0.8}));
  CHECK(osculating_quadric_along_curve(*ball, tilted).distance(s) <= 1e-9);

  const BodyPtr ell = Ellipsoid::with_semi_axes(make_vec({1.0, 2.0, 0.7}));
  Vec e(10);
  e << 1.0, 0, 0, 0.25, 0, 1.0 / 0.49, 0, 0, 0, -1;
  const ConicQuadric ref = ConicQuadric::from_coefficients(3, e);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 6; ++i) {
    const Vec dir = testing::random_unit(rng, 3);
    const Vec p = radial_boundary_point(*ell, Vec::Zero(3), dir);
    const auto f = PlanarSectionFrame::make(*ell, p, testing::random_unit(rng, 3), testing::random_unit(rng, 3));
    CHECK((f.matrix().transpose() * f.matrix() - Mat::Identity(3, 3)).norm() <= 1e-12);
    CHECK(std::abs(f.e1.dot(exterior_normal(*ell, p))) <= 1e-12);
    CHECK(osculating_quadric_along_curve(*ell, f).distance(ref) <= 1e-8);
  }
  const Vec t1 = make_vec({1, 0, 0});
  const Vec t2 = make_vec({0, 1, 0});
  CHECK_THROWS_AS(PlanarSectionFrame::make(*ball, o, t1, t2), DomainError);
}

TEST_CASE("normal field gap along the section") {
  DyadicGrid grid;
  const TaylorSeries paraboloid = series3(5, {{{2, 0}, 0.5}, {{1, 1}, 1.0}, {{0, 2}, 1.0}});
  const GraphGerm pg(paraboloid);
  CHECK_THROWS_AS(normal_field_gap(pg, osculating_quadric_along_curve(pg).frame_quadric, grid),
                  IndistinguishableError);

  const double c = 1e-2;
  const GraphGerm alpha(series3(5, {{{2, 0}, 0.5}, {{1, 1}, 1.0}, {{0, 2}, 1.0}, {{2, 1}, 0.3}, {{5, 0}, c}}));
  const OsculatingQuadric q = osculating_quadric_along_curve(alpha);
  CHECK(normal_field_gap(alpha, q.frame_quadric, grid).exponent >= 2.8);

  const GraphGerm generic(series3(5, {{{2, 0}, 0.5},
                                      {{1, 1}, 0.3},
                                      {{0, 2}, 1.0},
                                      {{2, 1}, 0.3},
                                      {{1, 2}, -0.2},
                                      {{0, 3}, 0.4},
                                      {{3, 1}, 0.5},
                                      {{2, 2}, 0.3},
                                      {{5, 0}, c}}));
  const DeviationFit g = normal_field_gap(generic, osculating_quadric_along_curve(generic).frame_quadric, grid);
  CHECK(g.exponent >= 2.8);
  CHECK(g.exponent <= 3.5);

  for (double delta : {1e-2, 1e-3}) {
    const Vec d = q.d + Vec::Constant(1, delta);
    const ConicQuadric perturbed = ConicQuadric::normal_form(q.a, q.c, q.a_hat, d);
    const DeviationFit fit = normal_field_gap(alpha, perturbed, grid);
    CHECK(fit.exponent == doctest::Approx(2.0).epsilon(0.1));
  }

  DyadicGrid fine;
  fine.epsilon = std::numeric_limits<long double>::epsilon();
  for (double cc : {1e-2, -1e-2, 1e-3}) {
    const GraphGerm a(series3(5, {{{2, 0}, 0.5}, {{1, 1}, 1.0}, {{0, 2}, 1.0}, {{2, 1}, 0.3}, {{5, 0}, cc}}));
    const DeviationFit psi = normal_angle_gap(a, osculating_quadric_along_curve(a).frame_quadric, fine);
    CHECK(psi.exponent == doctest::Approx(4.0).epsilon(0.05));
    CHECK(psi.coefficient == doctest::Approx(4.0 * cc).epsilon(0.1));
  }
}

TEST_CASE("planar section conic residual") {
  std::mt19937_64 rng(21);
  const BodyPtr ell = Ellipsoid::make(testing::random_spd(rng, 3, 4.0));
  for (int i = 0; i < 20; ++i) {
    const SectionPlane plane{0.3 * testing::random_unit(rng, 3), testing::random_unit(rng, 3),
                             testing::random_unit(rng, 3)};
    CHECK(planar_section_conic_residual(*ell, plane, 48) <= 1e-9);
  }
  const BodyPtr ball = Ellipsoid::ball(3);
  for (int i = 0; i < 10; ++i) {
    const SectionPlane plane{0.5 * testing::random_unit(rng, 3), testing::random_unit(rng, 3),
                             testing::random_unit(rng, 3)};
    CHECK(planar_section_conic_residual(*ball, plane, 48) <= 1e-12);
  }
  const BodyPtr quartic = Superellipsoid::make(make_vec({1.0, 1.0, 1.0}), 4.0);
  const SectionPlane generic{make_vec({0.1, -0.2, 0.15}), make_vec({1.0, 0.3, -0.2}), make_vec({0.2, 1.0, 0.5})};
  CHECK(planar_section_conic_residual(*quartic, generic, 64) > 1e-4);
  CHECK_THROWS_AS(planar_section_conic_residual(*ball, generic, 5), PlanError);
  const SectionPlane outside{make_vec({2.0, 0.0, 0.0}), make_vec({0, 1, 0}), make_vec({0, 0, 1})};
  CHECK_THROWS_AS(planar_section_conic_residual(*ball, outside, 32), DomainError);
}
