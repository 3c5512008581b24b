#include <cmath>
#include <string>

#include "calyx/error.hpp"
#include "calyx/rng.hpp"
#include "calyx/synth.hpp"

namespace calyx::synth {

void TrajectorySpec::validate() const {
  if (!(fps > 0.0) || !(speed_mm_per_s > 0.0) || !(dwell_s >= 0.0) ||
      !(max_lateral_offset >= 0.0 && max_lateral_offset < 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid trajectory spec");
  }
}

namespace {

struct Segment {
  Vec3 from;
  Vec3 to;
  Vec3 look;
  std::int64_t frames = 0;
  int target = 0;
};

Vec3 up_hint(const Vec3& forward) {
  const Vec3 a = forward.cwiseAbs();
  if (a.x() <= a.y() && a.x() <= a.z()) return Vec3::UnitX();
  return a.y() <= a.z() ? Vec3::UnitY() : Vec3::UnitZ();
}

std::int64_t frames_for(double seconds, double fps) {
  return static_cast<std::int64_t>(std::ceil(seconds * fps - 1e-9));
}

}  // namespace

std::vector<PosedFrame> generate_trajectory(const Phantom& phantom, const TrajectorySpec& spec) {
  spec.validate();
  const Centerline& cl = phantom.centerline;
  const Vec3 c = cl.pelvis_center;
  Rng rng(combine_seed(spec.seed, 0x7a1));

  std::vector<Segment> segments;
  if (spec.visit_plan.empty()) {
    segments.push_back({c, c, cl.ureter_direction, std::max<std::int64_t>(1, frames_for(spec.dwell_s, spec.fps)), 0});
  }
  for (const int id : spec.visit_plan) {
    if (id < 1 || id > static_cast<int>(cl.calyces.size())) {
      throw Error(ErrorCode::kUnreachableCalyx, "calyx " + std::to_string(id) + " is not in the phantom");
    }
    const CalyxAxis& axis = cl.calyces[static_cast<std::size_t>(id - 1)];
    // Both legs are shifted by the same seeded offset, perpendicular to
    // the neck and the cup, so the path stays inside the tube.
    Vec3 normal = axis.direction.cross(axis.cup_direction);
    if (normal.squaredNorm() < 1e-12) normal = axis.direction.cross(up_hint(axis.direction));
    const Vec3 shift =
        rng.uniform(-1.0, 1.0) * spec.max_lateral_offset * 2.0 * axis.neck_radius_mm * normal.normalized();
    const Vec3 bend = axis.bend + shift;
    const Vec3 dwell = axis.apex() - 1.5 * axis.radius_mm * axis.cup_direction + shift;
    const Vec3 neck_dir = (bend - c).normalized();
    const Vec3 cup_dir = (dwell - bend).normalized();
    auto move_frames = [&](const Vec3& a, const Vec3& b) {
      return std::max<std::int64_t>(1, frames_for((b - a).norm() / spec.speed_mm_per_s, spec.fps));
    };
    segments.push_back({c, bend, neck_dir, move_frames(c, bend), id});
    segments.push_back({bend, dwell, cup_dir, move_frames(bend, dwell), id});
    const std::int64_t stay = frames_for(spec.dwell_s, spec.fps);
    if (stay > 0) segments.push_back({dwell, dwell, cup_dir, stay, id});
    segments.push_back({dwell, bend, -cup_dir, move_frames(bend, dwell), id});
    segments.push_back({bend, c, -neck_dir, move_frames(c, bend), id});
  }

  std::vector<PosedFrame> frames;
  std::int64_t k = 0;
  auto push = [&](const Vec3& pos, const Vec3& look, int target) {
    PosedFrame f;
    f.frame_id = k;
    f.timestamp_s = static_cast<double>(k) / spec.fps;
    f.cam_from_world = look_along(pos, look, up_hint(look));
    f.target_calyx = target;
    frames.push_back(f);
    ++k;
  };
  for (const Segment& s : segments) {
    for (std::int64_t i = 0; i < s.frames; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(s.frames);
      push(s.from + t * (s.to - s.from), s.look, s.target);
    }
  }
  return frames;
}

}  // namespace calyx::synth
