#pragma once

#include <span>
#include <vector>

#include "calyx/geometry.hpp"
#include "calyx/registration.hpp"
#include "calyx/tri_mesh.hpp"

namespace calyx {

/// Exact point-to-surface distance for every point (parallel, BVH-backed).
std::vector<double> point_to_mesh_distances(std::span<const Vec3> points, const TriMesh& mesh);

/// Mean and population stddev of point-to-surface distance.
DistanceStats single_sided_chamfer(std::span<const Vec3> source, const TriMesh& target);

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value. 0 < p <= 100.
double nearest_rank_percentile(std::vector<double> values, double percent);

double hausdorff_percentile(std::span<const Vec3> source, const TriMesh& target,
                            double percent = 99.0);

/// Percentage of `ct_points` with a `recon_points` neighbour within radius.
double coverage(std::span<const Vec3> ct_points, std::span<const Vec3> recon_points,
                double radius_mm = 1.0);

struct ReprojectionObservation {
  RigidTransform cam_from_world;
  PinholeCamera camera;
  Vec3 point;
  Vec2 observed;
};

struct ReprojectionStats {
  double mean_px = 0.0;
  std::size_t used = 0;
  /// Observations whose point lies behind its camera; excluded from the mean.
  std::size_t behind_camera = 0;
};

ReprojectionStats reprojection_error(std::span<const ReprojectionObservation> observations);

namespace reference {

/// Serial all-faces scan; oracle for point_to_mesh_distances.
std::vector<double> point_to_mesh_distances_serial(std::span<const Vec3> points,
                                                   const TriMesh& mesh);

}  // namespace reference

}  // namespace calyx
