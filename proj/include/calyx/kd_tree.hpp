#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "calyx/geometry.hpp"

namespace calyx {

/// Static 3-d tree over a point set for nearest-neighbour queries.
class KdTree {
 public:
  struct Neighbor {
    std::uint32_t index = 0;
    double distance_sq = 0.0;
  };

  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points);

  std::size_t size() const { return points_.size(); }
  std::span<const Vec3> points() const { return points_; }

  /// Nearest point; exact ties resolve to the lowest index. Tree must be non-empty.
  Neighbor nearest(const Vec3& q) const;

  /// True when some point lies within `radius` (inclusive).
  bool any_within(const Vec3& q, double radius) const;

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void nearest_rec(std::int32_t node, const Vec3& q, Neighbor& best) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace calyx
