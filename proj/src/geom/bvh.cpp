#include "calyx/bvh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace calyx {

namespace {

constexpr std::uint32_t kLeafSize = 4;
constexpr int kBins = 16;
constexpr int kStackSize = 128;
// Boxes are inflated so rounding in the slab test can never cull a
// triangle that the exact test would hit.
constexpr double kBoxPad = 1e-7;
constexpr double kGamma3 = 3.0 * std::numeric_limits<double>::epsilon() /
                           (1.0 - 3.0 * std::numeric_limits<double>::epsilon());
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Prim {
  Vec3 lo;
  Vec3 hi;
  Vec3 centroid;
};

double half_area(const Vec3& lo, const Vec3& hi) {
  const Vec3 e = (hi - lo).cwiseMax(0.0);
  return e.x() * e.y() + e.y() * e.z() + e.z() * e.x();
}

struct Builder {
  std::vector<Prim> prims;
  std::vector<std::uint32_t>& order;
  std::vector<Bvh::Node>& nodes;
  std::size_t max_depth = 0;

  void build(std::uint32_t node, std::uint32_t begin, std::uint32_t end, std::size_t depth) {
    max_depth = std::max(max_depth, depth);
    Vec3 lo = Vec3::Constant(kInf);
    Vec3 hi = Vec3::Constant(-kInf);
    Vec3 clo = Vec3::Constant(kInf);
    Vec3 chi = Vec3::Constant(-kInf);
    for (std::uint32_t i = begin; i < end; ++i) {
      const Prim& p = prims[order[i]];
      lo = lo.cwiseMin(p.lo);
      hi = hi.cwiseMax(p.hi);
      clo = clo.cwiseMin(p.centroid);
      chi = chi.cwiseMax(p.centroid);
    }
    nodes[node].lo = lo.array() - kBoxPad;
    nodes[node].hi = hi.array() + kBoxPad;

    const std::uint32_t n = end - begin;
    if (n <= kLeafSize) {
      make_leaf(node, begin, n);
      return;
    }

    const Vec3 extent = chi - clo;
    int axis = 0;
    extent.maxCoeff(&axis);
    if (!(extent[axis] > 0.0)) {
      split_median(node, begin, end, axis, depth);
      return;
    }

    // Binned SAH over all three axes.
    double best_cost = kInf;
    int best_axis = -1;
    int best_split = -1;
    for (int a = 0; a < 3; ++a) {
      if (!(extent[a] > 0.0)) continue;
      std::array<std::uint32_t, kBins> counts{};
      std::array<Vec3, kBins> blo;
      std::array<Vec3, kBins> bhi;
      blo.fill(Vec3::Constant(kInf));
      bhi.fill(Vec3::Constant(-kInf));
      const double scale = kBins / extent[a];
      for (std::uint32_t i = begin; i < end; ++i) {
        const Prim& p = prims[order[i]];
        const int b = std::min(kBins - 1, static_cast<int>((p.centroid[a] - clo[a]) * scale));
        ++counts[b];
        blo[b] = blo[b].cwiseMin(p.lo);
        bhi[b] = bhi[b].cwiseMax(p.hi);
      }
      std::array<double, kBins> right_cost{};
      Vec3 rlo = Vec3::Constant(kInf);
      Vec3 rhi = Vec3::Constant(-kInf);
      std::uint32_t rcount = 0;
      for (int b = kBins - 1; b > 0; --b) {
        rlo = rlo.cwiseMin(blo[b]);
        rhi = rhi.cwiseMax(bhi[b]);
        rcount += counts[b];
        right_cost[b] = rcount ? rcount * half_area(rlo, rhi) : 0.0;
      }
      Vec3 llo = Vec3::Constant(kInf);
      Vec3 lhi = Vec3::Constant(-kInf);
      std::uint32_t lcount = 0;
      for (int b = 0; b < kBins - 1; ++b) {
        llo = llo.cwiseMin(blo[b]);
        lhi = lhi.cwiseMax(bhi[b]);
        lcount += counts[b];
        if (lcount == 0 || lcount == n) continue;
        const double cost = lcount * half_area(llo, lhi) + right_cost[b + 1];
        if (cost < best_cost) {
          best_cost = cost;
          best_axis = a;
          best_split = b;
        }
      }
    }

    if (best_axis < 0) {
      split_median(node, begin, end, axis, depth);
      return;
    }

    const double scale = kBins / extent[best_axis];
    const double cmin = clo[best_axis];
    const auto mid_it = std::stable_partition(
        order.begin() + begin, order.begin() + end, [&](std::uint32_t f) {
          const int b = std::min(
              kBins - 1, static_cast<int>((prims[f].centroid[best_axis] - cmin) * scale));
          return b <= best_split;
        });
    const auto mid = static_cast<std::uint32_t>(mid_it - order.begin());
    if (mid == begin || mid == end) {
      split_median(node, begin, end, best_axis, depth);
      return;
    }
    split_at(node, begin, mid, end, depth);
  }

  void make_leaf(std::uint32_t node, std::uint32_t begin, std::uint32_t n) {
    nodes[node].index = begin;
    nodes[node].count = n;
  }

  void split_median(std::uint32_t node, std::uint32_t begin, std::uint32_t end, int axis,
                    std::size_t depth) {
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end,
                     [&](std::uint32_t x, std::uint32_t y) {
                       const double cx = prims[x].centroid[axis];
                       const double cy = prims[y].centroid[axis];
                       return cx < cy || (cx == cy && x < y);
                     });
    split_at(node, begin, mid, end, depth);
  }

  void split_at(std::uint32_t node, std::uint32_t begin, std::uint32_t mid, std::uint32_t end,
                std::size_t depth) {
    const auto left = static_cast<std::uint32_t>(nodes.size());
    nodes.emplace_back();
    nodes.emplace_back();
    nodes[node].index = left;
    nodes[node].count = 0;
    build(left, begin, mid, depth + 1);
    build(left + 1, mid, end, depth + 1);
  }
};

struct RaySetup {
  Vec3 origin;
  Vec3 inv;
  std::array<bool, 3> parallel{};

  explicit RaySetup(const Ray& ray) : origin(ray.origin) {
    for (int a = 0; a < 3; ++a) {
      parallel[a] = ray.direction[a] == 0.0;
      inv[a] = parallel[a] ? 0.0 : 1.0 / ray.direction[a];
    }
  }

  // Entry parameter of the box overlap with [t_min, t_max], or +inf.
  double enter(const Bvh::Node& n, double t_min, double t_max) const {
    double t0 = t_min;
    double t1 = t_max;
    for (int a = 0; a < 3; ++a) {
      if (parallel[a]) {
        if (origin[a] < n.lo[a] || origin[a] > n.hi[a]) return kInf;
        continue;
      }
      double tn = (n.lo[a] - origin[a]) * inv[a];
      double tf = (n.hi[a] - origin[a]) * inv[a];
      if (tn > tf) std::swap(tn, tf);
      tf *= 1.0 + 2.0 * kGamma3;
      t0 = std::max(t0, tn);
      t1 = std::min(t1, tf);
      if (t0 > t1) return kInf;
    }
    return t0;
  }
};

double box_distance_sq(const Bvh::Node& n, const Vec3& p) {
  const Vec3 d = (n.lo - p).cwiseMax(p - n.hi).cwiseMax(0.0);
  return d.squaredNorm();
}

}  // namespace

Bvh::Bvh(std::span<const Vec3> vertices, std::span<const Face> faces) {
  if (faces.empty()) return;
  order_.resize(faces.size());
  std::iota(order_.begin(), order_.end(), 0U);
  Builder builder{{}, order_, nodes_};
  builder.prims.reserve(faces.size());
  for (const Face& f : faces) {
    const Vec3& a = vertices[f[0]];
    const Vec3& b = vertices[f[1]];
    const Vec3& c = vertices[f[2]];
    builder.prims.push_back(
        {a.cwiseMin(b).cwiseMin(c), a.cwiseMax(b).cwiseMax(c), (a + b + c) / 3.0});
  }
  nodes_.reserve(2 * faces.size());
  nodes_.emplace_back();
  builder.build(0, 0, static_cast<std::uint32_t>(faces.size()), 0);
  depth_ = builder.max_depth;
}

std::optional<RayHit> Bvh::nearest(const TriMesh& mesh, const Ray& ray, double t_min) const {
  if (nodes_.empty()) return std::nullopt;
  const RaySetup setup(ray);
  double best_t = kInf;
  std::uint32_t best_f = std::numeric_limits<std::uint32_t>::max();

  struct Entry {
    std::uint32_t node;
    double t_enter;
  };
  std::array<Entry, kStackSize> stack;
  int top = 0;
  const double t_root = setup.enter(nodes_[0], t_min, kInf);
  if (t_root == kInf) return std::nullopt;
  stack[top++] = {0, t_root};

  while (top > 0) {
    const Entry e = stack[--top];
    // Equal entry distance is still visited: it may hold a lower-index tie.
    if (e.t_enter > best_t) continue;
    const Node& n = nodes_[e.node];
    if (n.is_leaf()) {
      for (std::uint32_t i = n.index; i < n.index + n.count; ++i) {
        const std::uint32_t f = order_[i];
        const auto [a, b, c] = mesh.triangle(f);
        const auto t = intersect_triangle(ray, a, b, c);
        if (!t || !(*t > t_min)) continue;
        if (*t < best_t || (*t == best_t && f < best_f)) {
          best_t = *t;
          best_f = f;
        }
      }
      continue;
    }
    const double tl = setup.enter(nodes_[n.index], t_min, best_t);
    const double tr = setup.enter(nodes_[n.index + 1], t_min, best_t);
    // Push the farther child first so the nearer one is processed next.
    if (tl <= tr) {
      if (tr != kInf) stack[top++] = {n.index + 1, tr};
      if (tl != kInf) stack[top++] = {n.index, tl};
    } else {
      if (tl != kInf) stack[top++] = {n.index, tl};
      if (tr != kInf) stack[top++] = {n.index + 1, tr};
    }
  }
  if (best_t == kInf) return std::nullopt;
  return RayHit{best_t, best_f};
}

bool Bvh::any_hit(const TriMesh& mesh, const Ray& ray, double t_min, double t_max) const {
  if (nodes_.empty()) return false;
  const RaySetup setup(ray);
  std::array<std::uint32_t, kStackSize> stack;
  int top = 0;
  if (setup.enter(nodes_[0], t_min, t_max) == kInf) return false;
  stack[top++] = 0;
  while (top > 0) {
    const Node& n = nodes_[stack[--top]];
    if (n.is_leaf()) {
      for (std::uint32_t i = n.index; i < n.index + n.count; ++i) {
        const auto [a, b, c] = mesh.triangle(order_[i]);
        const auto t = intersect_triangle(ray, a, b, c);
        if (t && *t > t_min && *t < t_max) return true;
      }
      continue;
    }
    for (std::uint32_t child : {n.index, n.index + 1}) {
      if (setup.enter(nodes_[child], t_min, t_max) != kInf) stack[top++] = child;
    }
  }
  return false;
}

std::size_t Bvh::count_hits(const TriMesh& mesh, const Ray& ray, double t_min) const {
  if (nodes_.empty()) return 0;
  const RaySetup setup(ray);
  std::array<std::uint32_t, kStackSize> stack;
  int top = 0;
  std::size_t hits = 0;
  if (setup.enter(nodes_[0], t_min, kInf) == kInf) return 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& n = nodes_[stack[--top]];
    if (n.is_leaf()) {
      for (std::uint32_t i = n.index; i < n.index + n.count; ++i) {
        const auto [a, b, c] = mesh.triangle(order_[i]);
        const auto t = intersect_triangle(ray, a, b, c);
        if (t && *t > t_min) ++hits;
      }
      continue;
    }
    for (std::uint32_t child : {n.index, n.index + 1}) {
      if (setup.enter(nodes_[child], t_min, kInf) != kInf) stack[top++] = child;
    }
  }
  return hits;
}

ClosestPoint Bvh::closest(const TriMesh& mesh, const Vec3& p) const {
  ClosestPoint best;
  double best_d2 = kInf;
  best.face = std::numeric_limits<std::uint32_t>::max();

  struct Entry {
    std::uint32_t node;
    double d2;
  };
  std::array<Entry, kStackSize> stack;
  int top = 0;
  stack[top++] = {0, box_distance_sq(nodes_[0], p)};
  while (top > 0) {
    const Entry e = stack[--top];
    if (e.d2 > best_d2) continue;
    const Node& n = nodes_[e.node];
    if (n.is_leaf()) {
      for (std::uint32_t i = n.index; i < n.index + n.count; ++i) {
        const std::uint32_t f = order_[i];
        const auto [a, b, c] = mesh.triangle(f);
        const Vec3 q = closest_point_on_triangle(p, a, b, c);
        const double d2 = (q - p).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && f < best.face)) {
          best_d2 = d2;
          best.face = f;
          best.point = q;
        }
      }
      continue;
    }
    const double dl = box_distance_sq(nodes_[n.index], p);
    const double dr = box_distance_sq(nodes_[n.index + 1], p);
    if (dl <= dr) {
      stack[top++] = {n.index + 1, dr};
      stack[top++] = {n.index, dl};
    } else {
      stack[top++] = {n.index, dl};
      stack[top++] = {n.index + 1, dr};
    }
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

}  // namespace calyx
