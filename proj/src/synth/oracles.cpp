#include <algorithm>
#include <map>
#include <utility>

#include "calyx/error.hpp"
#include "calyx/rng.hpp"
#include "calyx/synth.hpp"
#include "calyx/tri_mesh.hpp"

namespace calyx::synth {

VertexSet brute_force_visibility(const TriMesh& mesh, const PinholeCamera& cam,
                                 const RigidTransform& cam_from_world,
                                 const VisibilityParams& params) {
  VertexSet out;
  const Vec3 center = camera_center(cam_from_world);
  const auto verts = mesh.vertices();
  for (std::size_t v = 0; v < verts.size(); ++v) {
    const Vec3 pc = cam_from_world.apply(verts[v]);
    if (!(pc.z() > 0.0)) continue;
    const double u = cam.fx * pc.x() / pc.z() + cam.cx;
    const double w = cam.fy * pc.y() / pc.z() + cam.cy;
    if (!(u >= 0.0 && u < cam.width && w >= 0.0 && w < cam.height)) continue;
    const double d = (verts[v] - center).norm();
    if (d > params.max_view_distance_mm) continue;
    const auto hit = reference::ray_cast_naive(mesh, Ray::through(center, verts[v]));
    if (hit && hit->distance < d - params.occlusion_epsilon_mm) continue;
    out.push_back(static_cast<std::uint32_t>(v));
  }
  return out;
}

Perturbation perturb_trajectory(std::span<const PosedFrame> frames, std::size_t count,
                                double distance_mm, std::uint64_t seed) {
  Perturbation out;
  out.frames.assign(frames.begin(), frames.end());
  if (count == 0) return out;
  if (frames.size() < 2 || count > frames.size() - 1) {
    throw Error(ErrorCode::kInvalidArgument, "more teleports requested than movable frames");
  }
  Rng rng(seed);
  for (std::size_t i : rng.sample_indices(frames.size() - 1, count)) out.injected.push_back(i + 1);
  std::sort(out.injected.begin(), out.injected.end());
  for (std::size_t i : out.injected) {
    Vec3 dir;
    do {
      dir = Vec3(rng.normal(), rng.normal(), rng.normal());
    } while (dir.squaredNorm() < 1e-12);
    PosedFrame& f = out.frames[i];
    const Mat3 r = f.cam_from_world.rotation_matrix();
    const Vec3 moved = f.center() + distance_mm * dir.normalized();
    f.cam_from_world = RigidTransform(r, -(r * moved));
  }
  return out;
}

TriMesh make_icosphere(double radius, int subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  std::vector<Face> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (Vec3& p : v) p.normalize();
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      const auto [it, inserted] = mid.try_emplace({key.first, key.second}, static_cast<std::uint32_t>(v.size()));
      if (inserted) v.push_back((v[a] + v[b]).normalized());
      return it->second;
    };
    std::vector<Face> next;
    next.reserve(f.size() * 4);
    for (const Face& tri : f) {
      const std::uint32_t ab = midpoint(tri[0], tri[1]);
      const std::uint32_t bc = midpoint(tri[1], tri[2]);
      const std::uint32_t ca = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  for (Vec3& p : v) p *= radius;
  return TriMesh(std::move(v), std::move(f));
}

}  // namespace calyx::synth
