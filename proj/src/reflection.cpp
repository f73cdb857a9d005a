#include "ktb/reflection.hpp"

#include <cmath>

#include "ktb/errors.hpp"

namespace ktb {

Vec parallel_chord_involution(const ConvexBody& t, const ParallelClass& cls, const Vec& u_in) {
  const Vec u = normalized(u_in);
  const Vec& d = cls.direction;
  const double s = u.dot(d);
  if (std::abs(s) <= 1e-12) return u;
  const Vec a = gauss_inverse(t, u);
  const Vec b = chord_second_intersection(t, a, s > 0 ? Vec(-d) : d);
  return normalized(t.level_gradient(b));
}

OrientedLine t_billiard_reflect(const ConvexBody& k, const ConvexBody& t, const OrientedLine& line) {
  const auto hit = line_intersection(k, line.point, line.direction);
  if (!hit) throw DomainError("line does not meet the interior of K");
  const Vec q = line.point + hit->second * line.direction;
  const Vec n = normalized(k.level_gradient(q));
  const double incidence = std::asin(std::min(1.0, std::abs(n.dot(line.direction))));
  if (incidence < kGrazingAngle) throw GrazingError("grazing incidence at the boundary of K");
  const Vec out = parallel_chord_involution(t, ParallelClass(n), line.direction);
  return OrientedLine(q, out);
}

Vec euclidean_reflect(const Vec& normal, const Vec& v) { return v - 2.0 * v.dot(normal) * normal; }

Vec projective_reflect_direction(const Vec& tangent_normal, const Vec& transversal, const Vec& v) {
  const double denom = tangent_normal.dot(transversal);
  return v - 2.0 * tangent_normal.dot(v) / denom * transversal;
}

OrientedLine projective_billiard_reflect(const Vec& q, const Vec& tangent_normal,
                                         const Vec& transversal, const OrientedLine& incoming,
                                         double margin) {
  const Vec nu = normalized(tangent_normal);
  const Vec big_n = normalized(transversal);
  if (std::abs(nu.dot(big_n)) < margin) {
    throw DomainError("line field is not transversal to the tangent plane");
  }
  const Vec offset = q - incoming.point;
  const Vec perp = offset - offset.dot(incoming.direction) * incoming.direction;
  if (perp.norm() > 1e-9 * (1.0 + q.norm())) {
    throw DomainError("incoming line does not pass through the reflection point");
  }
  if (std::abs(nu.dot(incoming.direction)) <= 1e-15) return OrientedLine(q, incoming.direction);
  return OrientedLine(q, projective_reflect_direction(nu, big_n, incoming.direction));
}

OrientedLine projective_billiard_bounce(const ConvexBody& k, const TransversalField& field,
                                        const OrientedLine& incoming) {
  const auto hit = line_intersection(k, incoming.point, incoming.direction);
  if (!hit) throw DomainError("line does not meet the interior of K");
  const Vec q = incoming.point + hit->second * incoming.direction;
  const Vec n = normalized(k.level_gradient(q));
  if (std::asin(std::min(1.0, std::abs(n.dot(incoming.direction)))) < kGrazingAngle) {
    throw GrazingError("grazing incidence at the boundary of K");
  }
  return projective_billiard_reflect(q, n, field.field(q), OrientedLine(q, incoming.direction),
                                     field.margin);
}

namespace {

void require_transversal(const ConvexBody& indicatrix, const Vec& eta, const Vec& u) {
  if (!on_boundary(indicatrix, u)) throw BoundaryMembershipError("u is not on the indicatrix");
  const double angle = std::asin(std::min(1.0, std::abs(eta.dot(u)) / u.norm()));
  if (angle < kGrazingAngle) throw GrazingError("u lies in the mirror hyperplane");
}

}  // namespace

Vec finsler_reflect_legendre(const ConvexBody& indicatrix, const Vec& mirror_normal, const Vec& u) {
  const Vec eta = normalized(mirror_normal);
  require_transversal(indicatrix, eta, u);
  const BodyPtr figuratrix = indicatrix.polar();
  const Vec du = legendre_point(indicatrix, u);
  // D(v) = D(u) - mu eta lies on the figuratrix: second end of the chord along eta.
  const Vec dv = chord_second_intersection(*figuratrix, du, u.dot(eta) > 0 ? Vec(-eta) : eta);
  return legendre_point(*figuratrix, dv);
}

Vec finsler_reflect_concurrency(const ConvexBody& indicatrix, const Vec& mirror_normal,
                                const Vec& u) {
  const Vec eta = normalized(mirror_normal);
  require_transversal(indicatrix, eta, u);
  const Vec nu = exterior_normal(indicatrix, u);
  if (projective_distance(nu, eta) <= 1e-12) {
    // Tangent hyperplane parallel to H: they meet at infinity, so T_v is the other parallel one.
    return indicatrix.support_point(-nu);
  }
  // Hyperplanes through T_u ∩ H form the pencil <nu + mu eta, x> = <nu, u>; the
  // second tangent member gives v. phi(mu) = h(nu + mu eta) - <nu, u> is convex with phi(0) = 0.
  const double level_u = nu.dot(u);
  const double side = u.dot(eta) > 0 ? -1.0 : 1.0;
  auto psi = [&](double s) { return indicatrix.support(Vec(nu + side * s * eta)) - level_u; };
  auto dpsi = [&](double s) { return side * indicatrix.support_point(Vec(nu + side * s * eta)).dot(eta); };

  double lo = 0.0;
  double hi = 0.125;
  int guard = 0;
  while (dpsi(hi) < 0) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 60) throw ConvergenceError("concurrency pencil has no minimum", guard, hi);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (dpsi(mid) < 0) lo = mid; else hi = mid;
  }
  const double s_min = 0.5 * (lo + hi);
  if (!(psi(s_min) < 0)) throw DegenerateChordError("concurrency pencil is tangent only at u");
  double gap = std::max(s_min, 0.125);
  double s_far = s_min + gap;
  guard = 0;
  while (psi(s_far) <= 0) {
    gap *= 2.0;
    s_far = s_min + gap;
    if (++guard > 60) throw ConvergenceError("concurrency pencil root not bracketed", guard, s_far);
  }
  double a = s_min;
  double b = s_far;
  for (int it = 0; it < 200 && b - a > 1e-16 * b; ++it) {
    const double mid = 0.5 * (a + b);
    if (psi(mid) < 0) a = mid; else b = mid;
  }
  const double s_root = 0.5 * (a + b);
  return indicatrix.support_point(Vec(nu + side * s_root * eta));
}

double finsler_residual(const ConvexBody& indicatrix, const Vec& mirror_normal, const Vec& u,
                        const Vec& v) {
  const Vec eta = normalized(mirror_normal);
  const Vec diff = legendre_point(indicatrix, u) - legendre_point(indicatrix, v);
  return (diff - diff.dot(eta) * eta).norm();
}

OrientedLine rescale_conjugate(const Vec& b, const OrientedLine& line) {
  if ((b.array() <= 0).any()) throw DomainError("rescaling factors must be positive");
  return OrientedLine(b.cwiseProduct(line.point), b.cwiseProduct(line.direction));
}

BodyPtr rescale_body(const BodyPtr& k, const Vec& b) {
  if ((b.array() <= 0).any()) throw DomainError("rescaling factors must be positive");
  return AffineImageBody::make(k, b.asDiagonal().toDenseMatrix());
}

}  // namespace ktb
