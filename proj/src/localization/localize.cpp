#include <exception>
#include <unordered_set>

#include "calyx/localization.hpp"
#include "calyx/rng.hpp"

namespace calyx {

std::uint64_t frame_seed(std::uint64_t rng_seed, std::int64_t frame_id) {
  return combine_seed(rng_seed, static_cast<std::uint64_t>(frame_id));
}

LocalizedFrame localize_frame(const QueryFrame& query, const ReferenceModel& model,
                              const PinholeCamera& cam, const LocalizationParams& params) {
  LocalizedFrame out;
  out.frame_id = query.frame_id;
  out.timestamp_s = query.timestamp_s;
  out.status = FrameStatus::kUnlocalized;
  if (query.keypoints.empty() || model.frames.empty()) return out;

  const std::uint64_t seed = frame_seed(params.rng_seed, query.frame_id);
  const auto candidates = retrieve_candidates(query.global_descriptor, model, params.retrieval_k);

  // Candidates arrive most-similar first, so the first claim on a query
  // keypoint wins.
  std::vector<Correspondence2D3D> corrs;
  std::unordered_set<std::uint32_t> claimed;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const ReferenceFrame& ref = model.frames[candidates[c].frame_index];
    const Keypoints& rk = ref.features.keypoints;
    if (rk.empty()) continue;
    const auto matches = match_descriptors(query.keypoints, rk, params.match_ratio);
    const auto check =
        verify_pair_essential(matches, query.keypoints, rk, cam, params, combine_seed(seed, c + 1));
    if (!check.accepted) continue;
    for (std::size_t m = 0; m < matches.size(); ++m) {
      if (!check.inlier_mask[m]) continue;
      const std::int64_t pid = rk.point_ids[matches[m].reference];
      if (pid == kNoPoint) continue;
      if (!claimed.insert(matches[m].query).second) continue;
      corrs.push_back({query.keypoints.pixels[matches[m].query],
                       model.cloud[static_cast<std::size_t>(pid)]});
    }
  }

  const auto pose = estimate_absolute_pose(corrs, cam, params, combine_seed(seed, 0));
  if (!pose) return out;
  out.cam_from_world = pose->cam_from_world;
  out.inlier_count = pose->inlier_count;
  out.inlier_ratio = static_cast<double>(pose->inlier_count) / static_cast<double>(corrs.size());
  out.status = FrameStatus::kAccepted;
  return out;
}

std::vector<LocalizedFrame> localize_video(std::span<const QueryFrame> query,
                                           const ReferenceModel& model, const LabeledMesh& mesh,
                                           const PinholeCamera& cam,
                                           const LocalizationParams& params) {
  params.validate();
  const auto n = static_cast<std::ptrdiff_t>(query.size());
  std::vector<LocalizedFrame> frames(query.size());
  std::vector<std::exception_ptr> errors(query.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      frames[k] = localize_frame(query[k], model, cam, params);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  frames = spatial_filter(std::move(frames), mesh.mesh());
  return temporal_filter(std::move(frames), params.v_max_mm_per_s);
}

}  // namespace calyx
