#include "calyx/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "calyx/error.hpp"

namespace calyx {

namespace {

Quat canonical(Quat q) {
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

}  // namespace

RigidTransform::RigidTransform(const Quat& rotation, const Vec3& translation)
    : rotation_(canonical(rotation)), translation_(translation) {}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(canonical(Quat(rotation))), translation_(translation) {}

RigidTransform RigidTransform::from_axis_angle(const Vec3& axis, double angle_rad,
                                               const Vec3& translation) {
  return {Quat(Eigen::AngleAxisd(angle_rad, axis.normalized())), translation};
}

RigidTransform RigidTransform::inverse() const {
  const Quat inv = rotation_.conjugate();
  return {inv, -(inv * translation_)};
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation_ * b.rotation_, a.rotation_ * b.translation_ + a.translation_};
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) { return a * b; }

double rotation_angle_deg(const RigidTransform& a, const RigidTransform& b) {
  const Quat rel = a.rotation().conjugate() * b.rotation();
  const double w = std::clamp(std::abs(rel.w()), 0.0, 1.0);
  // atan2 form stays accurate for tiny angles where acos(w) does not.
  const double s = rel.vec().norm();
  return 2.0 * std::atan2(s, w) * 180.0 / std::numbers::pi;
}

SimilarityTransform::SimilarityTransform(const RigidTransform& rigid, double scale)
    : rigid_(rigid), scale_(scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::kInvalidArgument, "similarity scale must be positive");
  }
}

SimilarityTransform SimilarityTransform::inverse() const {
  const Quat inv = rigid_.rotation().conjugate();
  const double s = 1.0 / scale_;
  return {RigidTransform(inv, -(s * (inv * rigid_.translation()))), s};
}

RigidTransform look_along(const Vec3& center, const Vec3& forward, const Vec3& up_hint) {
  const Vec3 z = forward.normalized();
  Vec3 x = up_hint.cross(z);
  if (x.norm() < 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "look_along: up hint parallel to forward");
  }
  x.normalize();
  const Vec3 y = z.cross(x);
  // Rows of camera-from-world rotation are the camera axes in world frame.
  Mat3 r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return {r, -(r * center)};
}

}  // namespace calyx
