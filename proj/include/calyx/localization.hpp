#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "calyx/features.hpp"
#include "calyx/geometry.hpp"
#include "calyx/labeled_mesh.hpp"

namespace calyx {

/// Thresholds for query localization. Distances in mm, speeds in mm/s.
struct LocalizationParams {
  std::size_t retrieval_k = 10;
  std::size_t min_match_count = 20;
  std::size_t min_inlier_count = 15;
  double min_inlier_ratio = 0.3;
  double essential_sampson_threshold_px = 2.0;
  double pnp_reprojection_threshold_px = 4.0;
  int ransac_iterations = 2000;
  /// Adaptive RANSAC stops early once this confidence is reached.
  double ransac_confidence = 0.999;
  double match_ratio = 0.8;
  std::uint64_t rng_seed = 42;
  double v_max_mm_per_s = 135.0;

  void validate() const;
};

struct Candidate {
  std::size_t frame_index = 0;  // index into ReferenceModel::frames
  std::int64_t frame_id = 0;
  double similarity = 0.0;
};

/// Top-k reference frames by cosine similarity, descending; ties go to the
/// lower frame id.
std::vector<Candidate> retrieve_candidates(const Eigen::VectorXd& query_descriptor,
                                           const ReferenceModel& model, std::size_t k);

struct Match {
  std::uint32_t query = 0;
  std::uint32_t reference = 0;

  friend bool operator==(const Match&, const Match&) = default;
};

/// Mutual nearest neighbours that also pass the ratio test
/// (best distance < ratio * second-best distance).
std::vector<Match> match_descriptors(const Keypoints& query, const Keypoints& reference,
                                     double ratio = 0.8);

enum class PairRejection { kNone, kTooFewMatches, kTooFewInliers, kLowInlierRatio };

std::string_view to_string(PairRejection r);

struct EssentialVerification {
  std::vector<bool> inlier_mask;  // per match
  std::size_t inlier_count = 0;
  double inlier_ratio = 0.0;
  bool accepted = false;
  PairRejection reason = PairRejection::kNone;
  Mat3 essential = Mat3::Zero();
};

/// Normalised 8-point essential matrix fit (least squares for > 8 points),
/// projected onto the essential manifold. x2^T E x1 = 0.
std::optional<Mat3> essential_eight_point(std::span<const Vec2> x1, std::span<const Vec2> x2);

/// First-order geometric (Sampson) distance in normalised image units.
double sampson_distance(const Mat3& e, const Vec2& x1, const Vec2& x2);

/// RANSAC essential-matrix verification of one query/reference pair.
EssentialVerification verify_pair_essential(std::span<const Match> matches,
                                            const Keypoints& query, const Keypoints& reference,
                                            const PinholeCamera& cam,
                                            const LocalizationParams& params, std::uint64_t seed);

struct Correspondence2D3D {
  Vec2 pixel;
  Vec3 point;
};

/// All real solutions of the perspective-three-point problem for unit
/// bearings. Returns camera-from-world poses.
std::vector<RigidTransform> solve_p3p(const std::array<Vec3, 3>& bearings,
                                      const std::array<Vec3, 3>& points);

struct AbsolutePose {
  RigidTransform cam_from_world;
  std::vector<bool> inliers;
  std::size_t inlier_count = 0;
  /// RMS reprojection error on the RANSAC inlier set, before and after
  /// Levenberg-Marquardt refinement.
  double ransac_rms_px = 0.0;
  double refined_rms_px = 0.0;
};

/// Levenberg-Marquardt refinement of a pose on reprojection residuals.
/// Only cost-decreasing steps are taken.
RigidTransform refine_pose(const RigidTransform& init, std::span<const Correspondence2D3D> corrs,
                           const PinholeCamera& cam, int max_iterations = 50);

double reprojection_rms(const RigidTransform& cam_from_world,
                        std::span<const Correspondence2D3D> corrs, const PinholeCamera& cam);

/// P3P RANSAC with a 4th-point disambiguation and LM refinement. Empty when
/// the frame cannot be localized.
std::optional<AbsolutePose> estimate_absolute_pose(std::span<const Correspondence2D3D> corrs,
                                                   const PinholeCamera& cam,
                                                   const LocalizationParams& params,
                                                   std::uint64_t seed);

enum class FrameStatus { kAccepted, kRejectedSpatial, kRejectedTemporal, kUnlocalized };

std::string_view to_string(FrameStatus s);
FrameStatus frame_status_from_string(std::string_view s);

struct LocalizedFrame {
  std::int64_t frame_id = 0;
  double timestamp_s = 0.0;
  std::optional<RigidTransform> cam_from_world;
  std::size_t inlier_count = 0;
  double inlier_ratio = 0.0;
  FrameStatus status = FrameStatus::kUnlocalized;

  std::optional<Vec3> position() const {
    if (!cam_from_world) return std::nullopt;
    return camera_center(*cam_from_world);
  }
};

/// Rejects accepted frames whose camera centre lies outside the mesh.
std::vector<LocalizedFrame> spatial_filter(std::vector<LocalizedFrame> frames, const TriMesh& mesh);

/// Single forward pass: an accepted frame is kept iff it moved at most
/// v_max * dt from the last kept frame. Rejections do not move the anchor.
std::vector<LocalizedFrame> temporal_filter(std::vector<LocalizedFrame> frames,
                                            double v_max_mm_per_s);

/// Per-frame seed derived from the run seed and the frame id.
std::uint64_t frame_seed(std::uint64_t rng_seed, std::int64_t frame_id);

/// Localizes one frame (retrieval, matching, essential verification,
/// pooling, absolute pose). Filters are not applied.
LocalizedFrame localize_frame(const QueryFrame& query, const ReferenceModel& model,
                              const PinholeCamera& cam, const LocalizationParams& params);

/// Full video localization: per-frame pose estimation (parallel), then the
/// spatial and temporal filters. Output order and length match the input.
std::vector<LocalizedFrame> localize_video(std::span<const QueryFrame> query,
                                           const ReferenceModel& model, const LabeledMesh& mesh,
                                           const PinholeCamera& cam,
                                           const LocalizationParams& params);

}  // namespace calyx
