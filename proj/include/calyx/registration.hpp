#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "calyx/geometry.hpp"
#include "calyx/labeled_mesh.hpp"

namespace calyx {

struct IcpParams {
  int max_iterations = 100;
  /// Stop once the residual improves by less than this (mm).
  double convergence_delta_mm = 1e-4;
  /// Correspondences farther apart than this are ignored (mm).
  double correspondence_cutoff_mm = 10.0;

  void validate() const;
};

struct RegistrationResult {
  RigidTransform transform;
  /// Root-mean-square of the cutoff-truncated nearest-neighbour distances
  /// under `transform`. This is the quantity ICP provably never increases.
  double mean_residual_mm = 0.0;
  int iterations_used = 0;
  /// Residual after each accepted iteration, starting with the initial pose.
  std::vector<double> residual_history;
  std::size_t inlier_count = 0;
};

/// Point-to-point ICP from a supplied (manual) initial pose. Moves `source`
/// onto `target`.
RegistrationResult icp_register(std::span<const Vec3> source, std::span<const Vec3> target,
                                const RigidTransform& init, const IcpParams& params = {});

/// Closed-form least-squares alignment of paired points (Umeyama). Without
/// `with_scale` the scale is exactly 1. Needs >= 3 non-collinear pairs.
SimilarityTransform umeyama(std::span<const Vec3> source, std::span<const Vec3> target,
                            bool with_scale);

struct FiducialPair {
  Vec3 source;
  Vec3 target;
};

struct AlignmentParams {
  bool with_scale = true;
  double inlier_threshold_mm = 5.0;
  int ransac_iterations = 1000;
  std::uint64_t seed = 0x5eed;
};

struct AlignmentResult {
  SimilarityTransform transform;
  std::vector<bool> inliers;
};

/// RANSAC over minimal 3-pair samples, then a closed-form fit on the inliers.
/// Throws DegenerateFiducials for fewer than 3 pairs or collinear sources.
AlignmentResult align_fiducials_robust(std::span<const FiducialPair> pairs,
                                       const AlignmentParams& params = {});

inline SimilarityTransform align_fiducials(std::span<const FiducialPair> pairs,
                                           bool with_scale = true) {
  AlignmentParams p;
  p.with_scale = with_scale;
  return align_fiducials_robust(pairs, p).transform;
}

struct DistanceStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

/// Mean and population stddev of |t(source) - target| over held-out pairs.
DistanceStats target_registration_error(const SimilarityTransform& t,
                                        std::span<const FiducialPair> held_out);

/// True when the points span less than a plane's worth of directions.
bool collinear(std::span<const Vec3> points, double tolerance = 1e-9);

}  // namespace calyx
