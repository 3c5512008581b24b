#include "calyx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "calyx/error.hpp"
#include "calyx/kd_tree.hpp"

namespace calyx {

namespace {

DistanceStats stats_of(std::span<const double> d) {
  DistanceStats s;
  s.count = d.size();
  if (d.empty()) return s;
  for (double x : d) s.mean += x;
  s.mean /= static_cast<double>(d.size());
  for (double x : d) s.stddev += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(d.size()));
  return s;
}

}  // namespace

std::vector<double> point_to_mesh_distances(std::span<const Vec3> points, const TriMesh& mesh) {
  if (mesh.empty()) throw Error(ErrorCode::kInvalidArgument, "distance to an empty mesh");
  std::vector<double> d(points.size());
  const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::int64_t i = 0; i < n; ++i) {
    d[static_cast<std::size_t>(i)] = closest_point(mesh, points[static_cast<std::size_t>(i)]).distance;
  }
  return d;
}

DistanceStats single_sided_chamfer(std::span<const Vec3> source, const TriMesh& target) {
  if (source.empty()) throw Error(ErrorCode::kInvalidArgument, "empty point cloud");
  const auto d = point_to_mesh_distances(source, target);
  return stats_of(d);
}

double nearest_rank_percentile(std::vector<double> values, double percent) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "percentile of empty set");
  if (!(percent > 0.0 && percent <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "percentile must be in (0, 100]");
  }
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(percent / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

double hausdorff_percentile(std::span<const Vec3> source, const TriMesh& target, double percent) {
  if (source.empty()) throw Error(ErrorCode::kInvalidArgument, "empty point cloud");
  return nearest_rank_percentile(point_to_mesh_distances(source, target), percent);
}

double coverage(std::span<const Vec3> ct_points, std::span<const Vec3> recon_points,
                double radius_mm) {
  if (ct_points.empty() || recon_points.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "coverage needs non-empty clouds");
  }
  const KdTree tree(recon_points);
  const auto n = static_cast<std::int64_t>(ct_points.size());
  std::vector<std::uint8_t> hit(ct_points.size(), 0);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    hit[static_cast<std::size_t>(i)] = tree.any_within(ct_points[static_cast<std::size_t>(i)], radius_mm);
  }
  std::size_t covered = 0;
  for (auto h : hit) covered += h;
  return 100.0 * static_cast<double>(covered) / static_cast<double>(ct_points.size());
}

ReprojectionStats reprojection_error(std::span<const ReprojectionObservation> observations) {
  ReprojectionStats s;
  double sum = 0.0;
  for (const auto& o : observations) {
    const auto px = project(o.camera, o.cam_from_world.apply(o.point));
    if (!px) {
      ++s.behind_camera;
      continue;
    }
    sum += (*px - o.observed).norm();
    ++s.used;
  }
  if (s.used > 0) s.mean_px = sum / static_cast<double>(s.used);
  return s;
}

namespace reference {

std::vector<double> point_to_mesh_distances_serial(std::span<const Vec3> points,
                                                   const TriMesh& mesh) {
  std::vector<double> d;
  d.reserve(points.size());
  for (const Vec3& p : points) d.push_back(distance_naive(mesh, p));
  return d;
}

}  // namespace reference

}  // namespace calyx
