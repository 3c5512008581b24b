#include <string>

#include "calyx/error.hpp"
#include "calyx/localization.hpp"
#include "calyx/text_io.hpp"

namespace calyx {

std::string_view to_string(FrameStatus s) {
  switch (s) {
    case FrameStatus::kAccepted: return "accepted";
    case FrameStatus::kRejectedSpatial: return "rejected_spatial";
    case FrameStatus::kRejectedTemporal: return "rejected_temporal";
    case FrameStatus::kUnlocalized: return "unlocalized";
  }
  return "unknown";
}

FrameStatus frame_status_from_string(std::string_view s) {
  for (FrameStatus f : {FrameStatus::kAccepted, FrameStatus::kRejectedSpatial,
                        FrameStatus::kRejectedTemporal, FrameStatus::kUnlocalized}) {
    if (text::trim(s) == to_string(f)) return f;
  }
  throw Error(ErrorCode::kParseError, "unknown frame status '" + std::string(s) + "'");
}

std::vector<LocalizedFrame> spatial_filter(std::vector<LocalizedFrame> frames, const TriMesh& mesh) {
  if (!mesh.is_watertight()) {
    throw Error(ErrorCode::kWatertightnessRequired, "spatial filter needs a closed mesh");
  }
  for (LocalizedFrame& f : frames) {
    if (f.status != FrameStatus::kAccepted) continue;
    if (!point_inside(mesh, *f.position())) f.status = FrameStatus::kRejectedSpatial;
  }
  return frames;
}

std::vector<LocalizedFrame> temporal_filter(std::vector<LocalizedFrame> frames,
                                            double v_max_mm_per_s) {
  if (!(v_max_mm_per_s > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "v_max must be positive");
  }
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (!(frames[i].timestamp_s > frames[i - 1].timestamp_s)) {
      throw Error(ErrorCode::kNonMonotonicTimestamps,
                  "frame " + std::to_string(frames[i].frame_id) + " does not advance in time");
    }
  }
  const LocalizedFrame* anchor = nullptr;
  for (LocalizedFrame& f : frames) {
    if (f.status != FrameStatus::kAccepted) continue;
    if (anchor) {
      const double dist = (*f.position() - *anchor->position()).norm();
      if (dist > v_max_mm_per_s * (f.timestamp_s - anchor->timestamp_s)) {
        f.status = FrameStatus::kRejectedTemporal;
        continue;
      }
    }
    anchor = &f;
  }
  return frames;
}

}  // namespace calyx
