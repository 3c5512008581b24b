#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>

namespace calyx {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Proper rigid motion p' = R p + t. Distances are millimetres.
///
/// The quaternion is normalised and sign-canonicalised (w >= 0) on
/// construction so that equal rotations serialise identically.
class RigidTransform {
 public:
  RigidTransform() : rotation_(Quat::Identity()), translation_(Vec3::Zero()) {}
  RigidTransform(const Quat& rotation, const Vec3& translation);
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Vec3& t) { return {Quat::Identity(), t}; }
  /// Rotation about a unit axis, angle in radians.
  static RigidTransform from_axis_angle(const Vec3& axis, double angle_rad,
                                        const Vec3& translation = Vec3::Zero());

  const Quat& rotation() const { return rotation_; }
  Mat3 rotation_matrix() const { return rotation_.toRotationMatrix(); }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 apply_direction(const Vec3& d) const { return rotation_ * d; }
  RigidTransform inverse() const;

  /// (a * b).apply(p) == a.apply(b.apply(p))
  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);

 private:
  Quat rotation_;
  Vec3 translation_;
};

RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

/// Angle of the relative rotation between two transforms, degrees.
double rotation_angle_deg(const RigidTransform& a, const RigidTransform& b);

class SimilarityTransform {
 public:
  SimilarityTransform() = default;
  SimilarityTransform(const RigidTransform& rigid, double scale);

  const RigidTransform& rigid() const { return rigid_; }
  double scale() const { return scale_; }

  Vec3 apply(const Vec3& p) const {
    return scale_ * (rigid_.rotation() * p) + rigid_.translation();
  }
  SimilarityTransform inverse() const;

 private:
  RigidTransform rigid_;
  double scale_ = 1.0;
};

inline Vec3 apply(const RigidTransform& t, const Vec3& p) { return t.apply(p); }
inline Vec3 apply(const SimilarityTransform& t, const Vec3& p) { return t.apply(p); }

/// Undistorted pinhole intrinsics, pixels.
struct PinholeCamera {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws InvalidArgument unless fx, fy, width, height > 0 and the
  /// principal point lies inside the image.
  void validate() const;

  bool in_image(const Vec2& px) const {
    return px.x() >= 0.0 && px.x() < width && px.y() >= 0.0 && px.y() < height;
  }
  double mean_focal() const { return 0.5 * (fx + fy); }
  Vec2 normalize(const Vec2& px) const { return {(px.x() - cx) / fx, (px.y() - cy) / fy}; }
};

/// Projects a camera-frame point (+z forward). Empty when z <= 0.
std::optional<Vec2> project(const PinholeCamera& cam, const Vec3& p_cam);

/// Inverse of project for a known depth.
Vec3 unproject(const PinholeCamera& cam, const Vec2& px, double depth);

/// Camera centre (world) of a camera-from-world pose.
inline Vec3 camera_center(const RigidTransform& cam_from_world) {
  return cam_from_world.inverse().translation();
}

/// Camera-from-world pose for a camera at `center` looking along `forward`.
/// `up_hint` only fixes the roll and must not be parallel to `forward`.
RigidTransform look_along(const Vec3& center, const Vec3& forward, const Vec3& up_hint);

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length

  static Ray through(const Vec3& origin, const Vec3& target) {
    return {origin, (target - origin).normalized()};
  }
};

/// Skew-symmetric cross-product matrix.
inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

}  // namespace calyx
