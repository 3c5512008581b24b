#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "calyx/geometry.hpp"
#include "calyx/labeled_mesh.hpp"
#include "calyx/registration.hpp"

namespace calyx {

using DescriptorMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::int64_t kNoPoint = -1;

/// Keypoints of one image: pixel, local descriptor row, optional 3D point id.
struct Keypoints {
  std::vector<Vec2> pixels;
  DescriptorMatrix descriptors;  // one row per keypoint
  std::vector<std::int64_t> point_ids;

  std::size_t size() const { return pixels.size(); }
  bool empty() const { return pixels.empty(); }
  int descriptor_dim() const { return static_cast<int>(descriptors.cols()); }
};

/// One record of a features file.
struct FrameFeatures {
  std::int64_t frame_id = 0;
  double timestamp_s = 0.0;
  Eigen::VectorXd global_descriptor;
  Keypoints keypoints;
};

using QueryFrame = FrameFeatures;

struct ReferenceFrame {
  FrameFeatures features;
  RigidTransform cam_from_world;
};

/// Localization prior: reconstruction cloud plus posed reference frames, all
/// expressed in the CT (mesh) frame.
struct ReferenceModel {
  PointCloud cloud;
  std::vector<ReferenceFrame> frames;
  RegistrationResult registration;

  /// Throws unless every referenced point id exists, all global descriptors
  /// share one dimension and have unit norm, and keypoints lie in the image.
  void validate(const PinholeCamera& cam) const;
};

/// Moves a model from reconstruction coordinates into the CT frame.
ReferenceModel register_model(ReferenceModel model, const RigidTransform& recon_to_ct);

void write_features(const std::filesystem::path& path, std::span<const FrameFeatures> frames);
std::vector<FrameFeatures> read_features(const std::filesystem::path& path);

}  // namespace calyx
