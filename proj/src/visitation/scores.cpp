#include <string>

#include "calyx/error.hpp"
#include "calyx/visitation.hpp"

namespace calyx {

CalyxScores visitation_scores(const LabeledMesh& mesh, std::span<const std::uint32_t> visited) {
  const auto labels = mesh.labels();
  std::map<int, std::size_t> hits;
  for (const std::uint32_t v : visited) {
    if (v >= labels.size()) {
      throw Error(ErrorCode::kInvalidArgument, "visited vertex " + std::to_string(v) + " out of range");
    }
    if (labels[v] != kUnannotated) ++hits[labels[v]];
  }
  CalyxScores scores;
  for (const int id : mesh.calyx_ids()) {
    scores[id] = static_cast<double>(hits[id]) / static_cast<double>(mesh.calyx_vertex_count(id));
  }
  return scores;
}

std::string_view to_string(Visitation v) {
  return v == Visitation::kVisited ? "visited" : "missed";
}

std::map<int, Visitation> classify(const CalyxScores& scores, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must lie in [0, 1]");
  }
  std::map<int, Visitation> out;
  for (const auto& [id, s] : scores) out[id] = s > threshold ? Visitation::kVisited : Visitation::kMissed;
  return out;
}

VisitationReport make_report(const LabeledMesh& mesh, std::span<const std::uint32_t> visited,
                             double threshold, std::span<const LocalizedFrame> frames) {
  VisitationReport r;
  r.threshold = threshold;
  r.visited_vertex_count = visited.size();
  const CalyxScores scores = visitation_scores(mesh, visited);
  const auto classes = classify(scores, threshold);
  const auto labels = mesh.labels();
  std::map<int, std::size_t> hits;
  for (const std::uint32_t v : visited) ++hits[labels[v]];
  for (const auto& [id, s] : scores) {
    CalyxResult c;
    c.id = id;
    c.name = mesh.calyx_name(id).value_or("calyx_" + std::to_string(id));
    c.vertex_count = mesh.calyx_vertex_count(id);
    c.visited_count = hits[id];
    c.score = s;
    c.classification = classes.at(id);
    r.calyces.push_back(std::move(c));
  }
  for (FrameStatus st : {FrameStatus::kAccepted, FrameStatus::kRejectedSpatial,
                         FrameStatus::kRejectedTemporal, FrameStatus::kUnlocalized}) {
    r.status_counts[st] = 0;
  }
  for (const LocalizedFrame& f : frames) ++r.status_counts[f.status];
  return r;
}

}  // namespace calyx
