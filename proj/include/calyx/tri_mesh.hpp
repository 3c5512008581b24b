#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "calyx/geometry.hpp"

namespace calyx {

class Bvh;

using Face = std::array<std::uint32_t, 3>;

/// Ray hits closer than this are ignored (self-hit guard).
inline constexpr double kEpsilonOrigin = 1e-6;
/// Points this close to the surface count as inside.
inline constexpr double kEpsilonSurface = 1e-3;

struct RayHit {
  double distance = 0.0;
  std::uint32_t face = 0;

  friend bool operator==(const RayHit&, const RayHit&) = default;
};

struct ClosestPoint {
  double distance = 0.0;
  std::uint32_t face = 0;
  Vec3 point = Vec3::Zero();
};

/// Immutable triangle mesh with a BVH built at construction.
///
/// Construction validates indices and rejects zero-area faces. Copies share
/// the acceleration structure.
class TriMesh {
 public:
  TriMesh();
  TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces);

  std::span<const Vec3> vertices() const { return vertices_; }
  std::span<const Face> faces() const { return faces_; }
  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t face_count() const { return faces_.size(); }
  bool empty() const { return faces_.empty(); }

  /// Every undirected edge is shared by exactly two faces.
  bool is_watertight() const { return watertight_; }

  std::array<Vec3, 3> triangle(std::uint32_t f) const {
    const Face& idx = faces_[f];
    return {vertices_[idx[0]], vertices_[idx[1]], vertices_[idx[2]]};
  }
  Vec3 face_normal(std::uint32_t f) const;
  double face_area(std::uint32_t f) const;

  const Bvh& bvh() const { return *bvh_; }

 private:
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  bool watertight_ = false;
  std::shared_ptr<const Bvh> bvh_;
};

/// Watertight ray/triangle test. Returns the signed ray parameter of the
/// supporting-plane hit when the ray line passes through the triangle.
/// Shared by the BVH and every naive scan so that both agree bit-for-bit.
std::optional<double> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b,
                                         const Vec3& c);

/// Nearest hit with distance > kEpsilonOrigin; ties go to the lowest face index.
std::optional<RayHit> ray_cast(const TriMesh& mesh, const Ray& ray);

/// True when some face is hit with kEpsilonOrigin < t < max_distance.
bool occluded(const TriMesh& mesh, const Ray& ray, double max_distance);

/// Number of faces crossed at t > 0.
std::size_t count_crossings(const TriMesh& mesh, const Ray& ray);

/// Exact point-to-surface distance. Mesh must be non-empty.
ClosestPoint closest_point(const TriMesh& mesh, const Vec3& p);

/// Fixed probe direction used for parity tests.
Vec3 default_probe_direction();

/// Parity inside test. Points within kEpsilonSurface of the surface are
/// inside. Throws WatertightnessRequired on open meshes.
bool point_inside(const TriMesh& mesh, const Vec3& p);
bool point_inside(const TriMesh& mesh, const Vec3& p, const Vec3& probe_direction);

/// Closest point on triangle abc to p.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Axis-aligned bounds of a vertex set; zero box when empty.
std::pair<Vec3, Vec3> bounds(std::span<const Vec3> points);

// Serial reference implementations, kept as test oracles and for the
// benchmark. They scan every face.
namespace reference {

std::optional<RayHit> ray_cast_naive(const TriMesh& mesh, const Ray& ray);
std::size_t count_crossings_naive(const TriMesh& mesh, const Ray& ray);
double distance_naive(const TriMesh& mesh, const Vec3& p);

}  // namespace reference

}  // namespace calyx
