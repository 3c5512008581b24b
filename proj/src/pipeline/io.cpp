#include <string>

#include "calyx/error.hpp"
#include "calyx/pipeline.hpp"
#include "calyx/text_io.hpp"

namespace calyx {

namespace {

constexpr std::string_view kTrajectoryHeader =
    "frame_id,timestamp_s,status,qw,qx,qy,qz,tx_mm,ty_mm,tz_mm,inlier_count,inlier_ratio";
constexpr std::string_view kPosesHeader = "frame_id,qw,qx,qy,qz,tx_mm,ty_mm,tz_mm";

void write_pose_fields(std::ostream& out, const RigidTransform& world_from_cam) {
  const Quat& q = world_from_cam.rotation();
  const Vec3& t = world_from_cam.translation();
  out << text::format_double(q.w()) << ',' << text::format_double(q.x()) << ','
      << text::format_double(q.y()) << ',' << text::format_double(q.z()) << ','
      << text::format_double(t.x()) << ',' << text::format_double(t.y()) << ','
      << text::format_double(t.z());
}

RigidTransform parse_pose_fields(std::span<const std::string_view> f) {
  const Quat q(text::parse_number<double>(f[0], "qw"), text::parse_number<double>(f[1], "qx"),
               text::parse_number<double>(f[2], "qy"), text::parse_number<double>(f[3], "qz"));
  if (!(q.norm() > 0.5)) throw Error(ErrorCode::kParseError, "quaternion is not unit length");
  const Vec3 t(text::parse_number<double>(f[4], "tx"), text::parse_number<double>(f[5], "ty"),
               text::parse_number<double>(f[6], "tz"));
  return RigidTransform(q, t);
}

// Yields non-empty, non-comment lines after checking the header.
template <typename Fn>
void for_each_record(const fs::path& path, std::string_view header, Fn&& fn) {
  auto in = text::open_input(path);
  std::string line;
  std::size_t lineno = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!seen_header) {
      if (t != header) {
        throw Error(ErrorCode::kParseError, path.string() + ": expected header '" + std::string(header) + "'");
      }
      seen_header = true;
      continue;
    }
    try {
      fn(text::split(t, ','));
    } catch (const Error& e) {
      throw Error(ErrorCode::kParseError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!seen_header) throw Error(ErrorCode::kParseError, path.string() + ": empty file");
}

}  // namespace

PinholeCamera load_camera(const fs::path& path) {
  const Config c = Config::load(path);
  static constexpr std::string_view kKeys[] = {"fx", "fy", "cx", "cy", "width", "height"};
  c.check_keys(kKeys);
  PinholeCamera cam;
  cam.fx = c.number("fx");
  cam.fy = c.number("fy");
  cam.cx = c.number("cx");
  cam.cy = c.number("cy");
  cam.width = static_cast<int>(text::parse_number<std::int64_t>(c.get("width"), "width"));
  cam.height = static_cast<int>(text::parse_number<std::int64_t>(c.get("height"), "height"));
  cam.validate();
  return cam;
}

void save_camera(const fs::path& path, const PinholeCamera& cam) {
  auto out = text::open_output(path);
  out << "# pinhole intrinsics, pixels\n"
      << "fx = " << text::format_double(cam.fx) << "\nfy = " << text::format_double(cam.fy)
      << "\ncx = " << text::format_double(cam.cx) << "\ncy = " << text::format_double(cam.cy)
      << "\nwidth = " << cam.width << "\nheight = " << cam.height << '\n';
}

RigidTransform load_transform(const fs::path& path) {
  auto in = text::open_input(path);
  std::string line;
  while (std::getline(in, line)) {
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto tok = text::tokens(t);
    if (tok.size() != 7) {
      throw Error(ErrorCode::kParseError, path.string() + ": expected 'qw qx qy qz tx ty tz'");
    }
    return parse_pose_fields(tok);
  }
  throw Error(ErrorCode::kParseError, path.string() + ": no transform found");
}

void save_transform(const fs::path& path, const RigidTransform& t) {
  auto out = text::open_output(path);
  out << "# qw qx qy qz tx ty tz\n";
  const Quat& q = t.rotation();
  out << text::format_double(q.w()) << ' ' << text::format_double(q.x()) << ' '
      << text::format_double(q.y()) << ' ' << text::format_double(q.z()) << ' '
      << text::format_double(t.translation().x()) << ' ' << text::format_double(t.translation().y())
      << ' ' << text::format_double(t.translation().z()) << '\n';
}

std::map<std::int64_t, RigidTransform> load_poses(const fs::path& path) {
  std::map<std::int64_t, RigidTransform> poses;
  for_each_record(path, kPosesHeader, [&](const std::vector<std::string_view>& f) {
    if (f.size() != 8) throw Error(ErrorCode::kParseError, "expected 8 fields");
    const auto id = text::parse_number<std::int64_t>(f[0], "frame_id");
    const auto fields = std::span(f).subspan(1);
    if (!poses.emplace(id, parse_pose_fields(fields).inverse()).second) {
      throw Error(ErrorCode::kParseError, "duplicate frame id " + std::to_string(id));
    }
  });
  return poses;
}

void save_poses(const fs::path& path,
                std::span<const std::pair<std::int64_t, RigidTransform>> poses) {
  auto out = text::open_output(path);
  out << kPosesHeader << '\n';
  for (const auto& [id, cam_from_world] : poses) {
    out << id << ',';
    write_pose_fields(out, cam_from_world.inverse());
    out << '\n';
  }
}

void write_trajectory(const fs::path& path, std::span<const LocalizedFrame> frames) {
  auto out = text::open_output(path);
  out << kTrajectoryHeader << '\n';
  for (const LocalizedFrame& f : frames) {
    out << f.frame_id << ',' << text::format_double(f.timestamp_s) << ',' << to_string(f.status) << ',';
    if (f.cam_from_world) {
      write_pose_fields(out, f.cam_from_world->inverse());
    } else {
      out << ",,,,,,";
    }
    out << ',' << f.inlier_count << ',' << text::format_double(f.inlier_ratio) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

std::vector<LocalizedFrame> read_trajectory(const fs::path& path) {
  std::vector<LocalizedFrame> frames;
  for_each_record(path, kTrajectoryHeader, [&](const std::vector<std::string_view>& f) {
    if (f.size() != 12) throw Error(ErrorCode::kParseError, "expected 12 fields");
    LocalizedFrame lf;
    lf.frame_id = text::parse_number<std::int64_t>(f[0], "frame_id");
    lf.timestamp_s = text::parse_number<double>(f[1], "timestamp_s");
    lf.status = frame_status_from_string(f[2]);
    if (!text::trim(f[3]).empty()) lf.cam_from_world = parse_pose_fields(std::span(f).subspan(3, 7)).inverse();
    lf.inlier_count = text::parse_number<std::size_t>(f[10], "inlier_count");
    lf.inlier_ratio = text::parse_number<double>(f[11], "inlier_ratio");
    if (lf.status == FrameStatus::kAccepted && !lf.cam_from_world) {
      throw Error(ErrorCode::kParseError, "accepted frame without a pose");
    }
    frames.push_back(lf);
  });
  return frames;
}

ReferenceModel load_reference_model(const fs::path& cloud, const fs::path& features,
                                    const fs::path& poses,
                                    const std::optional<fs::path>& registration) {
  ReferenceModel model;
  model.cloud = load_point_cloud(cloud);
  const auto pose_map = load_poses(poses);
  for (FrameFeatures& f : read_features(features)) {
    const auto it = pose_map.find(f.frame_id);
    if (it == pose_map.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "reference frame " + std::to_string(f.frame_id) + " has no pose in " + poses.string());
    }
    model.frames.push_back({std::move(f), it->second});
  }
  if (registration) model = register_model(std::move(model), load_transform(*registration));
  return model;
}

}  // namespace calyx
