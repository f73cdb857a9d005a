#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ktb/convex_body.hpp"
#include "ktb/linalg.hpp"

namespace ktb {

enum class OrbitStatus { complete, grazing, escaped, stagnated };

std::string to_string(OrbitStatus status);

/// Polygonal T-billiard orbit in K. points[0] is where the initial line enters K
/// (or the first vertex of a closed orbit); segment i joins points[i] and points[i+1].
struct Orbit {
  std::vector<Vec> points;
  std::vector<Vec> directions;
  /// Finsler lengths h_T(points[i+1] - points[i]).
  std::vector<double> lengths;
  double action = 0.0;
  bool closed = false;
  OrbitStatus status = OrbitStatus::complete;
  /// First-order stationarity residual, for closed orbits from the search.
  double stationarity = 0.0;
};

/// One piece of a (K,T)-orbit in R^2n: either q moves along n_T(p) with p fixed
/// on dT, or p moves along -n_K(q) with q fixed on dK.
struct KTSegment {
  bool q_moves;
  Vec q_start;
  Vec q_end;
  Vec p_start;
  Vec p_end;
};

struct KTOrbit {
  std::vector<KTSegment> segments;
  OrbitStatus status = OrbitStatus::complete;
};

/// Applies the T-billiard map `steps` times. Grazing or escape truncates the
/// orbit and is reported in status.
Orbit iterate_t_billiard(const ConvexBody& k, const ConvexBody& t, const OrientedLine& line, int steps);

KTOrbit lift_kt_orbit(const ConvexBody& k, const ConvexBody& t, const OrientedLine& line, int steps);

/// Vertices of the q-projection with consecutive repeats removed.
std::vector<Vec> q_projection(const KTOrbit& orbit);

/// Sum of h_T over the directed closed polygon.
double closed_action(const ConvexBody& t, const std::vector<Vec>& vertices);

/// Largest tangential component of the action gradient over the vertices.
double stationarity_residual(const ConvexBody& k, const ConvexBody& t, const std::vector<Vec>& vertices);

/// Largest violation of the T-billiard law at the vertices: the difference of the
/// support points of consecutive segments must be normal to dK.
double reflection_law_residual(const ConvexBody& k, const ConvexBody& t, const std::vector<Vec>& vertices);

struct SearchOptions {
  int multistarts = 32;
  std::uint64_t seed = 1;
  int max_iterations = 500;
  double stationarity_tol = 1e-8;
  /// Vertices closer than this fraction of the length scale count as repeated.
  double distinct_fraction = 1e-3;
  /// 0 picks the hardware concurrency.
  int threads = 0;
};

/// Closed m-bounce T-billiard orbit of least action among the critical points
/// reached from the multistart seeds.
Orbit closed_orbit_search(const ConvexBody& k, const ConvexBody& t, int bounces,
                          const SearchOptions& options = {});

struct CapacityRow {
  int bounces;
  double action;
  double stationarity;
  OrbitStatus status;
};

struct CapacityEstimate {
  double value;
  std::vector<CapacityRow> table;
  Orbit best;
};

CapacityEstimate capacity_estimate(const ConvexBody& k, const ConvexBody& t, int m_max,
                                   const SearchOptions& options = {});

/// vol(K) vol(K polar) for a body symmetric about the origin.
VolumeEstimate mahler_product(const BodyPtr& k, double target_relative_error = 1e-4);
double mahler_product(const Polygon& k);

/// capacity^n / (n! vol(K) vol(T)).
double viterbo_ratio(double capacity, const ConvexBody& k, const ConvexBody& t);

}  // namespace ktb
