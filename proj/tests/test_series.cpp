#include <cmath>
#include <vector>

#include "doctest.h"
#include "ktb/errors.hpp"
#include "ktb/graph_germ.hpp"
#include "ktb/series.hpp"

using namespace ktb;

TEST_CASE("series arithmetic matches hand expansion") {
  const TaylorSeries x = TaylorSeries::variable(1, 6, 0);
  const TaylorSeries s = (1.0 + x) * (1.0 + x);
  CHECK(s.coeff(0) == doctest::Approx(1.0));
  CHECK(s.coeff(1) == doctest::Approx(2.0));
  CHECK(s.coeff(2) == doctest::Approx(1.0));
  CHECK(s.coeff(3) == doctest::Approx(0.0));

  // 1/(1 - x) = sum x^k
  const TaylorSeries geo = reciprocal(1.0 - x);
  for (int k = 0; k <= 6; ++k) CHECK(geo.coeff(k) == doctest::Approx(1.0));
}

TEST_CASE("elementary functions agree with their Maclaurin series") {
  const TaylorSeries x = TaylorSeries::variable(1, 7, 0);
  const TaylorSeries e = exp(x);
  double fact = 1.0;
  for (int k = 0; k <= 7; ++k) {
    if (k > 0) fact *= k;
    CHECK(e.coeff(k) == doctest::Approx(1.0 / fact));
  }
  const TaylorSeries r = sqrt(1.0 + x);
  CHECK(r.coeff(1) == doctest::Approx(0.5));
  CHECK(r.coeff(2) == doctest::Approx(-0.125));
  CHECK(r.coeff(3) == doctest::Approx(0.0625));
  const TaylorSeries sc = sin(x) * sin(x) + cos(x) * cos(x);
  CHECK(sc.coeff(0) == doctest::Approx(1.0));
  for (int k = 1; k <= 7; ++k) CHECK(std::abs(sc.coeff(k)) < 1e-14);
}

TEST_CASE("reversion inverts composition") {
  const TaylorSeries x = TaylorSeries::variable(1, 6, 0);
  const TaylorSeries f = x + 0.5 * x * x - 0.3 * x * x * x + 0.1 * pow_int(x, 5);
  const TaylorSeries g = f.revert();
  const TaylorSeries id = f.compose(g);
  CHECK(id.coeff(1) == doctest::Approx(1.0));
  for (int k = 2; k <= 6; ++k) CHECK(std::abs(id.coeff(k)) < 1e-13);
}

TEST_CASE("multivariate series evaluation matches the closed form") {
  const TaylorSeries x = TaylorSeries::variable(2, 5, 0);
  const TaylorSeries y = TaylorSeries::variable(2, 5, 1);
  const TaylorSeries s = x * x + 3.0 * x * y - 2.0 * y * y * y;
  const std::vector<double> at{0.3, -0.7};
  CHECK(s.evaluate(std::span<const double>(at)) ==
        doctest::Approx(0.09 + 3.0 * 0.3 * -0.7 - 2.0 * -0.343));
  CHECK(s.coeff({1, 1}) == doctest::Approx(3.0));
  CHECK(s.derivative(1).coeff({0, 2}) == doctest::Approx(-6.0));
}

TEST_CASE("graph germ rejects non-convex or non-tangent data") {
  CHECK_THROWS_AS(GraphGerm::planar({0.0, 0.0, -1.0, 0.0, 0.0, 0.0}), ConvexityError);
  CHECK_THROWS_AS(GraphGerm::planar({0.5, 0.0, 1.0, 0.0, 0.0, 0.0}), Error);
  const GraphGerm tilted = GraphGerm::planar({0.0, 0.2, 1.0, 0.0, 0.0, 0.0});
  CHECK_FALSE(tilted.tangent_at_origin());
}

TEST_CASE("germ jets agree with central finite differences") {
  TaylorSeries h(2, 5);
  h.set_coeff({2, 0}, 0.5);
  h.set_coeff({1, 1}, 1.0);
  h.set_coeff({0, 2}, 1.0);
  h.set_coeff({2, 1}, 0.3);
  h.set_coeff({5, 0}, 0.01);
  h.set_coeff({3, 1}, -0.2);
  h.set_coeff({1, 3}, 0.4);
  const GraphGerm germ(h);
  const Vec at = make_vec({0.11, -0.07});

  // Gradient and Hessian against step-h central differences.
  const double step = 1e-4;
  const Vec grad = germ.gradient(at);
  const Mat hess = germ.hessian(at);
  for (int i = 0; i < 2; ++i) {
    Vec e = Vec::Zero(2);
    e(i) = step;
    const double fd = (germ.value(Vec(at + e)) - germ.value(Vec(at - e))) / (2 * step);
    CHECK(std::abs(fd - grad(i)) <= 1e-6 * std::max(1.0, std::abs(grad(i))));
    const Vec fdg = (germ.gradient(Vec(at + e)) - germ.gradient(Vec(at - e))) / (2 * step);
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(fdg(j) - hess(j, i)) <= 1e-6 * std::max(1.0, std::abs(hess(j, i))));
    }
  }

  // Third mixed partial d^3/dx^2 dy via nested differences of the gradient.
  const int multi[] = {2, 1};
  const double d3 = germ.derivative(multi, at);
  Vec ex = Vec::Zero(2);
  ex(0) = 1e-3;
  const double fd3 = (germ.gradient(Vec(at + ex))(1) - 2 * germ.gradient(at)(1) +
                      germ.gradient(Vec(at - ex))(1)) / 1e-6;
  CHECK(std::abs(fd3 - d3) <= 1e-6 * std::max(1.0, std::abs(d3)) + 1e-6);

  // Fifth derivative along x at the origin equals 5! times the coefficient.
  const int fifth[] = {5, 0};
  CHECK(germ.jet(fifth) == doctest::Approx(120 * 0.01));
}
