#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "calyx/geometry.hpp"
#include "calyx/tri_mesh.hpp"

namespace calyx {

/// Binary SAH bounding-volume hierarchy over the faces of a TriMesh.
///
/// Holds only indices and boxes; queries take the owning mesh. Every query
/// is read-only, so one tree serves any number of threads.
class Bvh {
 public:
  struct Node {
    Vec3 lo;
    Vec3 hi;
    // Interior: index of left child (right child is left + 1).
    // Leaf: offset into face order.
    std::uint32_t index = 0;
    std::uint32_t count = 0;  // 0 for interior nodes

    bool is_leaf() const { return count > 0; }
  };

  Bvh() = default;
  Bvh(std::span<const Vec3> vertices, std::span<const Face> faces);

  std::optional<RayHit> nearest(const TriMesh& mesh, const Ray& ray, double t_min) const;
  bool any_hit(const TriMesh& mesh, const Ray& ray, double t_min, double t_max) const;
  std::size_t count_hits(const TriMesh& mesh, const Ray& ray, double t_min) const;
  ClosestPoint closest(const TriMesh& mesh, const Vec3& p) const;

  std::span<const Node> nodes() const { return nodes_; }
  std::size_t depth() const { return depth_; }

 private:
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
  std::size_t depth_ = 0;
};

}  // namespace calyx
