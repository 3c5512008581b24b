#include <algorithm>
#include <iterator>

#include "calyx/error.hpp"
#include "calyx/tri_mesh.hpp"
#include "calyx/visitation.hpp"

namespace calyx {

void VisibilityParams::validate() const {
  if (!(max_view_distance_mm > 0.0) || !(occlusion_epsilon_mm > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "visibility parameters must be positive");
  }
}

namespace {

bool vertex_visible(const TriMesh& mesh, const PinholeCamera& cam, const RigidTransform& pose,
                    const Vec3& center, const Vec3& v, const VisibilityParams& params) {
  const Vec3 pc = pose.apply(v);
  if (!(pc.z() > 0.0)) return false;
  const auto px = project(cam, pc);
  if (!px || !cam.in_image(*px)) return false;
  const double d = (v - center).norm();
  if (d > params.max_view_distance_mm) return false;
  return !occluded(mesh, Ray::through(center, v), d - params.occlusion_epsilon_mm);
}

// Marks newly visible vertices in `seen`; already-marked ones are skipped.
void mark_visible(const TriMesh& mesh, const PinholeCamera& cam, const RigidTransform& pose,
                  const VisibilityParams& params, std::vector<char>& seen) {
  const Vec3 center = camera_center(pose);
  const auto verts = mesh.vertices();
  const auto n = static_cast<std::ptrdiff_t>(verts.size());
#pragma omp parallel for schedule(dynamic, 256)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (seen[k]) continue;
    if (vertex_visible(mesh, cam, pose, center, verts[k], params)) seen[k] = 1;
  }
}

VertexSet to_set(const std::vector<char>& mask) {
  VertexSet out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

}  // namespace

VertexSet visible_vertices(const LabeledMesh& mesh, const PinholeCamera& cam,
                           const RigidTransform& cam_from_world, const VisibilityParams& params) {
  std::vector<char> seen(mesh.mesh().vertex_count(), 0);
  mark_visible(mesh.mesh(), cam, cam_from_world, params, seen);
  return to_set(seen);
}

VertexSet aggregate_visited(std::span<const VertexSet> per_frame) {
  VertexSet out;
  for (const VertexSet& s : per_frame) {
    VertexSet merged;
    merged.reserve(out.size() + s.size());
    std::set_union(out.begin(), out.end(), s.begin(), s.end(), std::back_inserter(merged));
    out = std::move(merged);
  }
  return out;
}

VertexSet visited_over_poses(const LabeledMesh& mesh, const PinholeCamera& cam,
                             std::span<const RigidTransform> poses, const VisibilityParams& params) {
  std::vector<char> seen(mesh.mesh().vertex_count(), 0);
  for (const RigidTransform& pose : poses) mark_visible(mesh.mesh(), cam, pose, params, seen);
  return to_set(seen);
}

}  // namespace calyx
