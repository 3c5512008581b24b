#include "calyx/features.hpp"

#include <cmath>
#include <string>

#include "calyx/error.hpp"
#include "calyx/text_io.hpp"

namespace calyx {

namespace {
constexpr std::string_view kMagic = "calyx_features";
}

void ReferenceModel::validate(const PinholeCamera& cam) const {
  const auto n_points = static_cast<std::int64_t>(cloud.size());
  Eigen::Index dim = -1;
  for (const ReferenceFrame& f : frames) {
    const auto& g = f.features.global_descriptor;
    if (dim < 0) dim = g.size();
    if (g.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "reference global descriptors differ in size");
    }
    if (std::abs(g.norm() - 1.0) > 1e-6) {
      throw Error(ErrorCode::kInvalidArgument,
                  "global descriptor of frame " + std::to_string(f.features.frame_id) +
                      " is not unit length");
    }
    const Keypoints& k = f.features.keypoints;
    for (std::size_t i = 0; i < k.size(); ++i) {
      if (k.point_ids[i] != kNoPoint && (k.point_ids[i] < 0 || k.point_ids[i] >= n_points)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "frame " + std::to_string(f.features.frame_id) + " references missing point " +
                        std::to_string(k.point_ids[i]));
      }
      if (!cam.in_image(k.pixels[i])) {
        throw Error(ErrorCode::kInvalidArgument,
                    "keypoint outside image in frame " + std::to_string(f.features.frame_id));
      }
    }
  }
}

ReferenceModel register_model(ReferenceModel model, const RigidTransform& recon_to_ct) {
  for (Vec3& p : model.cloud) p = recon_to_ct.apply(p);
  const RigidTransform ct_to_recon = recon_to_ct.inverse();
  for (ReferenceFrame& f : model.frames) f.cam_from_world = f.cam_from_world * ct_to_recon;
  model.registration.transform = recon_to_ct * model.registration.transform;
  return model;
}

void write_features(const std::filesystem::path& path, std::span<const FrameFeatures> frames) {
  const Eigen::Index gdim = frames.empty() ? 0 : frames.front().global_descriptor.size();
  int ldim = 0;
  for (const auto& f : frames) {
    if (!f.keypoints.empty()) {
      ldim = f.keypoints.descriptor_dim();
      break;
    }
  }
  auto out = text::open_output(path);
  out << kMagic << ",1," << gdim << ',' << ldim << '\n';
  for (const FrameFeatures& f : frames) {
    if (f.global_descriptor.size() != gdim) {
      throw Error(ErrorCode::kDimensionMismatch, "global descriptor size differs between frames");
    }
    out << f.frame_id << ',' << text::format_double(f.timestamp_s) << ',' << f.keypoints.size();
    for (Eigen::Index i = 0; i < gdim; ++i) out << ',' << text::format_double(f.global_descriptor[i]);
    out << '\n';
    const Keypoints& k = f.keypoints;
    if (!k.empty() && k.descriptor_dim() != ldim) {
      throw Error(ErrorCode::kDimensionMismatch, "local descriptor size differs between frames");
    }
    for (std::size_t i = 0; i < k.size(); ++i) {
      out << text::format_double(k.pixels[i].x()) << ',' << text::format_double(k.pixels[i].y());
      for (int j = 0; j < ldim; ++j) {
        out << ',' << text::format_float(k.descriptors(static_cast<Eigen::Index>(i), j));
      }
      out << ',' << k.point_ids[i] << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

std::vector<FrameFeatures> read_features(const std::filesystem::path& path) {
  auto in = text::open_input(path);
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) -> Error {
    return Error(ErrorCode::kParseError, path.string() + ":" + std::to_string(lineno) + ": " + msg);
  };
  auto next = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      const auto t = text::trim(line);
      if (t.empty() || t.front() == '#') continue;
      return true;
    }
    return false;
  };

  if (!next()) throw fail("empty features file");
  const auto head = text::split(text::trim(line), ',');
  if (head.size() != 4 || head[0] != kMagic || text::trim(head[1]) != "1") {
    throw fail("expected header 'calyx_features,1,<global_dim>,<local_dim>'");
  }
  const auto gdim = text::parse_number<int>(head[2], "global_dim");
  const auto ldim = text::parse_number<int>(head[3], "local_dim");

  std::vector<FrameFeatures> frames;
  while (next()) {
    const auto f = text::split(text::trim(line), ',');
    if (f.size() != static_cast<std::size_t>(3 + gdim)) throw fail("bad frame record");
    FrameFeatures rec;
    rec.frame_id = text::parse_number<std::int64_t>(f[0], "frame_id");
    rec.timestamp_s = text::parse_number<double>(f[1], "timestamp");
    const auto n = text::parse_number<std::size_t>(f[2], "n_keypoints");
    rec.global_descriptor.resize(gdim);
    for (int i = 0; i < gdim; ++i) {
      rec.global_descriptor[i] = text::parse_number<double>(f[3 + static_cast<std::size_t>(i)]);
    }
    Keypoints& k = rec.keypoints;
    k.pixels.resize(n);
    k.point_ids.resize(n);
    k.descriptors.resize(static_cast<Eigen::Index>(n), ldim);
    for (std::size_t i = 0; i < n; ++i) {
      if (!next()) throw fail("truncated keypoint list");
      const auto kp = text::split(text::trim(line), ',');
      if (kp.size() != static_cast<std::size_t>(3 + ldim)) throw fail("bad keypoint record");
      k.pixels[i] = {text::parse_number<double>(kp[0], "u"), text::parse_number<double>(kp[1], "v")};
      for (int j = 0; j < ldim; ++j) {
        k.descriptors(static_cast<Eigen::Index>(i), j) =
            text::parse_number<float>(kp[2 + static_cast<std::size_t>(j)], "descriptor");
      }
      k.point_ids[i] = text::parse_number<std::int64_t>(kp.back(), "point id");
    }
    frames.push_back(std::move(rec));
  }
  return frames;
}

}  // namespace calyx
