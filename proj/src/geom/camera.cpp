#include <string>

#include "calyx/error.hpp"
#include "calyx/geometry.hpp"

namespace calyx {

void PinholeCamera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || width <= 0 || height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "camera focal lengths and image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw Error(ErrorCode::kInvalidArgument, "principal point outside the image");
  }
}

std::optional<Vec2> project(const PinholeCamera& cam, const Vec3& p_cam) {
  if (!(p_cam.z() > 0.0)) return std::nullopt;
  return Vec2(cam.fx * p_cam.x() / p_cam.z() + cam.cx, cam.fy * p_cam.y() / p_cam.z() + cam.cy);
}

Vec3 unproject(const PinholeCamera& cam, const Vec2& px, double depth) {
  return depth * Vec3((px.x() - cam.cx) / cam.fx, (px.y() - cam.cy) / cam.fy, 1.0);
}

}  // namespace calyx
