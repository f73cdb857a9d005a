#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "ktb/convex_body.hpp"
#include "ktb/errors.hpp"
#include "support.hpp"

using namespace ktb;
using ktb::testing::random_spd;
using ktb::testing::random_unit;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<BodyPtr> closed_family() {
  std::mt19937_64 rng(7);
  return {
      Ellipsoid::ball(2),
      Ellipsoid::with_semi_axes(make_vec({2.0, 1.0})),
      Ellipsoid::make(random_spd(rng, 3, 10.0)),
      Superellipsoid::make(make_vec({1.0, 1.0}), 4.0),
      Superellipsoid::make(make_vec({1.0, 1.5, 0.8}), 4.0),
      AffineImageBody::make(Superellipsoid::make(make_vec({1.0, 1.0}), 3.0),
                            (Mat(2, 2) << 1.0, 0.4, 0.0, 1.3).finished(), make_vec({0.2, -0.1})),
  };
}

}  // namespace

TEST_CASE("exterior normal: circle and ellipse axis points") {
  const auto circle = Ellipsoid::ball(2);
  const Vec n = exterior_normal(*circle, make_vec({0.0, 1.0}));
  CHECK((n - make_vec({0.0, 1.0})).norm() < 1e-15);

  const auto ellipse = Ellipsoid::with_semi_axes(make_vec({2.0, 1.0}));
  CHECK((exterior_normal(*ellipse, make_vec({2.0, 0.0})) - make_vec({1.0, 0.0})).norm() < 1e-15);
  CHECK_THROWS_AS(exterior_normal(*ellipse, make_vec({1.0, 0.0})), BoundaryMembershipError);
}

TEST_CASE("exterior normal of an ellipsoid is A p / |A p|, checked by finite differences") {
  std::mt19937_64 rng(3);
  const Mat a = random_spd(rng, 3, 5.0);
  const auto body = Ellipsoid::make(a);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec dir = random_unit(rng, 3);
    const Vec p = dir / std::sqrt(dir.dot(a * dir));
    // Finite-difference gradient of <Ax, x>.
    Vec fd(3);
    for (int i = 0; i < 3; ++i) {
      Vec e = Vec::Zero(3);
      e(i) = 1e-6;
      fd(i) = ((p + e).dot(a * (p + e)) - (p - e).dot(a * (p - e))) / 2e-6;
    }
    const Vec n = exterior_normal(*body, p);
    CHECK((n - fd.normalized()).norm() < 1e-8);
    CHECK((n - (a * p).normalized()).norm() < 1e-14);
    CHECK(n.dot(p) > 0);
  }
}

TEST_CASE("gauss inverse examples") {
  const auto circle = Ellipsoid::ball(2);
  CHECK((gauss_inverse(*circle, make_vec({0.0, 1.0})) - make_vec({0.0, 1.0})).norm() < 1e-12);

  const auto super = Superellipsoid::make(make_vec({1.0, 1.0}), 4.0);
  CHECK((gauss_inverse(*super, make_vec({1.0, 0.0})) - make_vec({1.0, 0.0})).norm() < 1e-9);

  std::mt19937_64 rng(11);
  const Mat a = random_spd(rng, 3, 8.0);
  const auto body = Ellipsoid::make(a);
  const Mat ainv = a.inverse();
  for (int trial = 0; trial < 20; ++trial) {
    const Vec u = random_unit(rng, 3);
    // Generic Newton route (bypasses the closed-form support point).
    const Vec p = gauss_inverse(*body, u);
    const Vec expected = ainv * u / std::sqrt(u.dot(ainv * u));
    CHECK((p - expected).norm() < 1e-10);
  }
}

TEST_CASE("gauss round trip over 1000 random normals for each closed family") {
  std::mt19937_64 rng(2024);
  for (const auto& body : closed_family()) {
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const Vec u = random_unit(rng, body->dimension());
      const Vec p = gauss_inverse(*body, u);
      worst = std::max(worst, (exterior_normal(*body, p) - u).norm());
    }
    INFO(body->kind());
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("chord second intersection examples") {
  const auto circle = Ellipsoid::ball(2);
  const double theta = 0.7;
  const Vec b = chord_second_intersection(*circle, make_vec({std::cos(theta), std::sin(theta)}),
                                          make_vec({0.0, -1.0}));
  CHECK((b - make_vec({std::cos(theta), -std::sin(theta)})).norm() < 1e-12);

  const auto ellipse = Ellipsoid::with_semi_axes(make_vec({2.0, 1.0}));
  for (double t : {0.3, 1.2, 2.5, 4.0}) {
    const Vec a = make_vec({2.0 * std::cos(t), std::sin(t)});
    for (double s : {1.0, -1.0}) {
      const Vec bb = chord_second_intersection(*ellipse, a, make_vec({0.0, s}));
      // The quadratic in y has roots +-sin t.
      CHECK((bb - make_vec({2.0 * std::cos(t), -std::sin(t)})).norm() < 1e-12);
    }
  }

  CHECK_THROWS_AS(chord_second_intersection(*circle, make_vec({1.0, 0.0}), make_vec({0.0, -1.0})),
                  DegenerateChordError);
}

TEST_CASE("chord map is an involution for a fixed direction") {
  std::mt19937_64 rng(5);
  for (const auto& body : closed_family()) {
    const int n = body->dimension();
    for (int trial = 0; trial < 50; ++trial) {
      const Vec d = random_unit(rng, n);
      const Vec a = gauss_inverse(*body, random_unit(rng, n));
      if (std::abs(exterior_normal(*body, a).dot(d)) < 0.05) continue;
      const Vec b = chord_second_intersection(*body, a, d);
      const Vec back = chord_second_intersection(*body, b, d);
      CHECK((back - a).norm() <= 1e-10 * body->length_scale());
    }
  }
}

TEST_CASE("polar duality examples") {
  const auto ball = Ellipsoid::ball(3);
  const auto dual = polar_dual(ball);
  const auto* e = dynamic_cast<const Ellipsoid*>(dual.get());
  REQUIRE(e != nullptr);
  CHECK((e->matrix() - Mat::Identity(3, 3)).norm() < 1e-14);

  std::mt19937_64 rng(1);
  const Mat a = random_spd(rng, 3, 4.0);
  const auto dual_a = polar_dual(Ellipsoid::make(a));
  const auto* ed = dynamic_cast<const Ellipsoid*>(dual_a.get());
  REQUIRE(ed != nullptr);
  CHECK((ed->matrix() - a.inverse()).norm() < 1e-12);

  const Polygon cross = polar_dual(Polygon::square());
  CHECK(cross.area() == doctest::Approx(2.0));
  for (const Vec& v : cross.vertices()) CHECK(v.lpNorm<1>() == doctest::Approx(1.0));

  const auto shifted = Ellipsoid::ball(2, 1.0, make_vec({3.0, 0.0}));
  CHECK_THROWS_AS(polar_dual(shifted), DomainError);
}

TEST_CASE("generic polar body matches the closed-form ellipsoid dual") {
  std::mt19937_64 rng(9);
  const Mat a = random_spd(rng, 2, 6.0);
  const auto base = Ellipsoid::make(a);
  const auto generic = std::make_shared<PolarBody>(base);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec u = random_unit(rng, 2);
    const Vec v = u / std::sqrt(u.dot(a.inverse() * u));  // on {<A^-1 y, y> = 1}
    CHECK(std::abs(generic->level(v) - 1.0) < 1e-12);
    CHECK(std::abs(generic->support(u) - std::sqrt(u.dot(a * u))) < 1e-10);
  }
}

TEST_CASE("legendre point examples and involutivity") {
  const auto circle = Ellipsoid::ball(2);
  CHECK((legendre_point(*circle, make_vec({0.0, 1.0})) - make_vec({0.0, 1.0})).norm() < 1e-15);

  const auto r2 = Ellipsoid::ball(2, 2.0);
  CHECK((legendre_point(*r2, make_vec({2.0, 0.0})) - make_vec({0.5, 0.0})).norm() < 1e-15);

  std::mt19937_64 rng(21);
  const Mat a = random_spd(rng, 3, 10.0);
  const auto body = Ellipsoid::make(a);
  const auto dual = polar_dual(body);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec dir = random_unit(rng, 3);
    const Vec v = dir / std::sqrt(dir.dot(a * dir));
    const Vec w = legendre_point(*body, v);
    CHECK((w - a * v).norm() < 1e-12);
    CHECK(std::abs(w.dot(v) - 1.0) < 1e-12);
    CHECK((legendre_point(*dual, w) - v).norm() < 1e-9);
  }

  // Involutivity on a non-quadric indicatrix via the generic polar body.
  const auto super = Superellipsoid::make(make_vec({1.0, 1.3}), 4.0);
  const auto super_dual = polar_dual(super);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec v = radial_boundary_point(*super, Vec::Zero(2), random_unit(rng, 2));
    const Vec w = legendre_point(*super, v);
    CHECK(on_boundary(*super_dual, w, 1e-10));
    CHECK((legendre_point(*super_dual, w) - v).norm() < 1e-9);
  }
}

TEST_CASE("second fundamental form") {
  std::mt19937_64 rng(4);
  const auto sphere = Ellipsoid::ball(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat form = second_fundamental_form(*sphere, random_unit(rng, 3));
    CHECK((form - Mat::Identity(2, 2)).norm() < 1e-12);
  }

  TaylorSeries h(2, 5);
  h.set_coeff({2, 0}, 0.5);
  h.set_coeff({0, 2}, 0.5);
  const auto germ = GraphGermBody::make(GraphGerm(h), 1.0);
  CHECK((second_fundamental_form(*germ, Vec::Zero(3)) - Mat::Identity(2, 2)).norm() < 1e-14);

  // Ellipse x^2/4 + y^2 = 1: curvature ab/(...)^(3/2), i.e. a/b^2 = 2 at (2,0) and b/a^2 = 1/4 at (0,1).
  const auto ellipse = Ellipsoid::with_semi_axes(make_vec({2.0, 1.0}));
  auto fd_curvature = [&](double t) {
    // Curvature of (2cos t, sin t) from finite-difference derivatives.
    const double h = 1e-4;
    auto pt = [](double s) { return Eigen::Vector2d(2 * std::cos(s), std::sin(s)); };
    const Eigen::Vector2d d1 = (pt(t + h) - pt(t - h)) / (2 * h);
    const Eigen::Vector2d d2 = (pt(t + h) - 2 * pt(t) + pt(t - h)) / (h * h);
    return std::abs(d1(0) * d2(1) - d1(1) * d2(0)) / std::pow(d1.norm(), 3);
  };
  const Mat at_vertex = second_fundamental_form(*ellipse, make_vec({2.0, 0.0}));
  CHECK(std::abs(at_vertex(0, 0) - fd_curvature(0.0)) < 1e-6);
  CHECK(at_vertex(0, 0) == doctest::Approx(2.0));
  const Mat at_covertex = second_fundamental_form(*ellipse, make_vec({0.0, 1.0}));
  CHECK(std::abs(at_covertex(0, 0) - fd_curvature(kPi / 2)) < 1e-6);
  CHECK(at_covertex(0, 0) == doctest::Approx(0.25));

  const auto super = Superellipsoid::make(make_vec({1.0, 1.0}), 4.0);
  CHECK_THROWS_AS(second_fundamental_form(*super, make_vec({1.0, 0.0})), ConvexityError);
}

TEST_CASE("line intersection with a disk") {
  const auto disk = Ellipsoid::ball(2);
  const auto hit = line_intersection(*disk, make_vec({-3.0, 0.5}), make_vec({1.0, 0.0}));
  REQUIRE(hit.has_value());
  CHECK(hit->first == doctest::Approx(3.0 - std::sqrt(0.75)));
  CHECK(hit->second == doctest::Approx(3.0 + std::sqrt(0.75)));
  CHECK_FALSE(line_intersection(*disk, make_vec({-3.0, 1.5}), make_vec({1.0, 0.0})).has_value());
}

TEST_CASE("volumes: exact, quadrature and affine invariance") {
  CHECK(volume(*Ellipsoid::ball(2)).value == doctest::Approx(kPi));
  CHECK(volume(*Ellipsoid::ball(3, 2.0)).value == doctest::Approx(4.0 / 3.0 * kPi * 8.0));
  CHECK(volume(*Ellipsoid::ball(2)).exact);

  // Area of x^4 + y^4 <= 1 is Gamma(1/4)^2 / (2 sqrt(pi)).
  const double quartic = std::pow(std::tgamma(0.25), 2) / (2.0 * std::sqrt(kPi));
  const auto super = Superellipsoid::make(make_vec({1.0, 1.0}), 4.0);
  const VolumeEstimate est = volume(*super, 1e-8);
  CHECK_FALSE(est.exact);
  CHECK(std::abs(est.value - quartic) < 1e-7);

  const auto generic_disk = std::make_shared<PolarBody>(Ellipsoid::ball(2));
  CHECK(std::abs(volume(*generic_disk, 1e-9).value - kPi) < 1e-8);

  // Volume of x^4 + y^4 + z^4 <= 1 is 8 Gamma(5/4)^3 / Gamma(7/4).
  const auto super3 = Superellipsoid::make(make_vec({1.0, 1.0, 1.0}), 4.0);
  const double expected3 = 8.0 * std::pow(std::tgamma(1.25), 3) / std::tgamma(1.75);
  CHECK(std::abs(volume(*super3, 1e-6).value - expected3) < 1e-5);
}

TEST_CASE("boundary germ of a sphere recovers 1 - sqrt(1 - r^2)") {
  const auto sphere = Ellipsoid::ball(3);
  Mat frame(3, 3);
  frame << 1, 0, 0, 0, 1, 0, 0, 0, -1;
  const GraphGerm germ = boundary_germ(*sphere, make_vec({0.0, 0.0, 1.0}), frame, 6);
  CHECK(germ.coeff({2, 0}) == doctest::Approx(0.5));
  CHECK(germ.coeff({0, 2}) == doctest::Approx(0.5));
  CHECK(germ.coeff({4, 0}) == doctest::Approx(0.125));
  CHECK(germ.coeff({2, 2}) == doctest::Approx(0.25));
  CHECK(std::abs(germ.coeff({3, 0})) < 1e-14);
  CHECK(germ.tangent_at_origin());
}
