#include "calyx/tri_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "calyx/bvh.hpp"
#include "calyx/error.hpp"

namespace calyx {

namespace {

bool compute_watertight(std::span<const Face> faces) {
  if (faces.empty()) return false;
  std::unordered_map<std::uint64_t, std::uint32_t> edge_uses;
  edge_uses.reserve(faces.size() * 3);
  for (const Face& f : faces) {
    for (int k = 0; k < 3; ++k) {
      std::uint64_t a = f[k];
      std::uint64_t b = f[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edge_uses[(a << 32) | b];
    }
  }
  return std::all_of(edge_uses.begin(), edge_uses.end(),
                     [](const auto& kv) { return kv.second == 2; });
}

}  // namespace

TriMesh::TriMesh() : bvh_(std::make_shared<const Bvh>()) {}

TriMesh::TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (!vertices_[i].allFinite()) {
      throw Error(ErrorCode::kDegenerateMesh, "non-finite vertex " + std::to_string(i));
    }
  }
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    for (std::uint32_t idx : faces_[f]) {
      if (idx >= vertices_.size()) {
        throw Error(ErrorCode::kDegenerateMesh,
                    "face " + std::to_string(f) + " references vertex out of range");
      }
    }
    if (face_area(static_cast<std::uint32_t>(f)) <= 0.0) {
      throw Error(ErrorCode::kDegenerateMesh, "face " + std::to_string(f) + " has zero area");
    }
  }
  watertight_ = compute_watertight(faces_);
  bvh_ = std::make_shared<const Bvh>(vertices_, faces_);
}

Vec3 TriMesh::face_normal(std::uint32_t f) const {
  const auto [a, b, c] = triangle(f);
  return (b - a).cross(c - a).normalized();
}

double TriMesh::face_area(std::uint32_t f) const {
  const auto [a, b, c] = triangle(f);
  return 0.5 * (b - a).cross(c - a).norm();
}

std::optional<double> intersect_triangle(const Ray& ray, const Vec3& a, const Vec3& b,
                                         const Vec3& c) {
  const Vec3& d = ray.direction;
  int kz = 0;
  d.cwiseAbs().maxCoeff(&kz);
  int kx = (kz + 1) % 3;
  int ky = (kx + 1) % 3;
  if (d[kz] < 0.0) std::swap(kx, ky);

  const double sx = d[kx] / d[kz];
  const double sy = d[ky] / d[kz];
  const double sz = 1.0 / d[kz];

  const Vec3 pa = a - ray.origin;
  const Vec3 pb = b - ray.origin;
  const Vec3 pc = c - ray.origin;

  const double ax = pa[kx] - sx * pa[kz];
  const double ay = pa[ky] - sy * pa[kz];
  const double bx = pb[kx] - sx * pb[kz];
  const double by = pb[ky] - sy * pb[kz];
  const double cx = pc[kx] - sx * pc[kz];
  const double cy = pc[ky] - sy * pc[kz];

  double u = cx * by - cy * bx;
  double v = ax * cy - ay * cx;
  double w = bx * ay - by * ax;

  // Edge functions that round to zero are re-evaluated in extended precision.
  if (u == 0.0 || v == 0.0 || w == 0.0) {
    using ld = long double;
    u = static_cast<double>(ld(cx) * ld(by) - ld(cy) * ld(bx));
    v = static_cast<double>(ld(ax) * ld(cy) - ld(ay) * ld(cx));
    w = static_cast<double>(ld(bx) * ld(ay) - ld(by) * ld(ax));
  }

  if ((u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0)) return std::nullopt;
  const double det = u + v + w;
  if (det == 0.0) return std::nullopt;

  const double az = sz * pa[kz];
  const double bz = sz * pb[kz];
  const double cz = sz * pc[kz];
  const double t = (u * az + v * bz + w * cz) / det;
  if (!std::isfinite(t)) return std::nullopt;
  return t;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

std::pair<Vec3, Vec3> bounds(std::span<const Vec3> points) {
  if (points.empty()) return {Vec3::Zero(), Vec3::Zero()};
  Vec3 lo = points.front();
  Vec3 hi = points.front();
  for (const Vec3& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return {lo, hi};
}

std::optional<RayHit> ray_cast(const TriMesh& mesh, const Ray& ray) {
  return mesh.bvh().nearest(mesh, ray, kEpsilonOrigin);
}

bool occluded(const TriMesh& mesh, const Ray& ray, double max_distance) {
  return mesh.bvh().any_hit(mesh, ray, kEpsilonOrigin, max_distance);
}

std::size_t count_crossings(const TriMesh& mesh, const Ray& ray) {
  return mesh.bvh().count_hits(mesh, ray, 0.0);
}

ClosestPoint closest_point(const TriMesh& mesh, const Vec3& p) {
  if (mesh.empty()) throw Error(ErrorCode::kInvalidArgument, "closest_point on empty mesh");
  return mesh.bvh().closest(mesh, p);
}

Vec3 default_probe_direction() {
  // Irrational-looking direction, far from the axes and diagonals of the
  // generator's sampling grid.
  return Vec3(0.2873, 0.4119, 0.8648).normalized();
}

bool point_inside(const TriMesh& mesh, const Vec3& p) {
  return point_inside(mesh, p, default_probe_direction());
}

bool point_inside(const TriMesh& mesh, const Vec3& p, const Vec3& probe_direction) {
  if (!mesh.is_watertight()) {
    throw Error(ErrorCode::kWatertightnessRequired, "point_inside needs a closed mesh");
  }
  if (closest_point(mesh, p).distance <= kEpsilonSurface) return true;
  const Ray probe{p, probe_direction.normalized()};
  return count_crossings(mesh, probe) % 2 == 1;
}

namespace reference {

std::optional<RayHit> ray_cast_naive(const TriMesh& mesh, const Ray& ray) {
  std::optional<RayHit> best;
  for (std::uint32_t f = 0; f < mesh.face_count(); ++f) {
    const auto [a, b, c] = mesh.triangle(f);
    const auto t = intersect_triangle(ray, a, b, c);
    if (!t || !(*t > kEpsilonOrigin)) continue;
    // Strict < keeps the lowest face index on exact ties.
    if (!best || *t < best->distance) best = RayHit{*t, f};
  }
  return best;
}

std::size_t count_crossings_naive(const TriMesh& mesh, const Ray& ray) {
  std::size_t n = 0;
  for (std::uint32_t f = 0; f < mesh.face_count(); ++f) {
    const auto [a, b, c] = mesh.triangle(f);
    const auto t = intersect_triangle(ray, a, b, c);
    if (t && *t > 0.0) ++n;
  }
  return n;
}

double distance_naive(const TriMesh& mesh, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t f = 0; f < mesh.face_count(); ++f) {
    const auto [a, b, c] = mesh.triangle(f);
    best = std::min(best, (closest_point_on_triangle(p, a, b, c) - p).norm());
  }
  return best;
}

}  // namespace reference

}  // namespace calyx
