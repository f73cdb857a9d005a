#pragma once

#include <functional>

#include "ktb/convex_body.hpp"
#include "ktb/linalg.hpp"

namespace ktb {

/// Class of lines parallel to a unit direction d (d and -d give the same class).
struct ParallelClass {
  Vec direction;

  explicit ParallelClass(const Vec& d) : direction(normalized(d)) {}
};

/// Line field Q -> N(Q) transversal to the hypersurface. Directions are unit
/// vectors defined up to sign.
struct TransversalField {
  std::function<Vec(const Vec& q)> field;
  double margin = 1e-6;
};

/// Angle below which an incidence counts as grazing.
inline constexpr double kGrazingAngle = 1e-6;

/// Sphere involution over chords of dT in a parallel class: the exterior normal
/// u at A goes to the exterior normal at the other end B of the chord through A.
/// Normals orthogonal to the class are fixed.
Vec parallel_chord_involution(const ConvexBody& t, const ParallelClass& cls, const Vec& u);

/// One T-billiard bounce: the line is continued to its last intersection q with
/// dK and leaves q along R_L(direction), L the class of the normal of K at q.
OrientedLine t_billiard_reflect(const ConvexBody& k, const ConvexBody& t, const OrientedLine& line);

Vec euclidean_reflect(const Vec& normal, const Vec& v);

/// Direction part of the projective billiard reflection: the linear involution
/// fixing the hyperplane normal to `tangent_normal` and negating `transversal`.
Vec projective_reflect_direction(const Vec& tangent_normal, const Vec& transversal, const Vec& v);

/// Projective billiard reflection at q for an incoming line through q.
OrientedLine projective_billiard_reflect(const Vec& q, const Vec& tangent_normal,
                                         const Vec& transversal, const OrientedLine& incoming,
                                         double margin = 1e-6);

/// Projective billiard reflection at the last boundary crossing of a line, with a
/// transversal line field on dK.
OrientedLine projective_billiard_bounce(const ConvexBody& k, const TransversalField& field,
                                        const OrientedLine& incoming);

/// Finsler reflection in a mirror H (given by its normal) with indicatrix I:
/// D(u) - D(v) vanishes on H. Solved on the figuratrix.
Vec finsler_reflect_legendre(const ConvexBody& indicatrix, const Vec& mirror_normal, const Vec& u);

/// Same law in the concurrency form: the tangent hyperplanes at u and v meet on H.
Vec finsler_reflect_concurrency(const ConvexBody& indicatrix, const Vec& mirror_normal,
                                const Vec& u);

/// Residual of the Legendre law: component of D(u) - D(v) along H.
double finsler_residual(const ConvexBody& indicatrix, const Vec& mirror_normal, const Vec& u,
                        const Vec& v);

/// The coordinate scaling q_j -> b_j q_j applied to a line.
OrientedLine rescale_conjugate(const Vec& b, const OrientedLine& line);
/// Image of K under the same scaling.
BodyPtr rescale_body(const BodyPtr& k, const Vec& b);

}  // namespace ktb
