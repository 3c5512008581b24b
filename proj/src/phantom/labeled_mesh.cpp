#include "calyx/labeled_mesh.hpp"

#include <algorithm>
#include <string>

#include "calyx/error.hpp"

namespace calyx {

LabeledMesh::LabeledMesh(TriMesh mesh, std::vector<int> labels, std::map<int, std::string> names,
                         const LabelValidation& validation)
    : mesh_(std::move(mesh)), labels_(std::move(labels)), names_(std::move(names)) {
  if (labels_.size() != mesh_.vertex_count()) {
    throw Error(ErrorCode::kLabelCountMismatch,
                std::to_string(labels_.size()) + " labels for " +
                    std::to_string(mesh_.vertex_count()) + " vertices");
  }
  int max_id = 0;
  for (int l : labels_) {
    if (l < 0) throw Error(ErrorCode::kInvalidArgument, "negative calyx id");
    max_id = std::max(max_id, l);
  }
  counts_.assign(static_cast<std::size_t>(max_id) + 1, 0);
  for (int l : labels_) ++counts_[static_cast<std::size_t>(l)];
  for (int id = 1; id <= max_id; ++id) {
    if (counts_[static_cast<std::size_t>(id)] == 0) {
      throw Error(ErrorCode::kNonContiguousLabels,
                  "calyx id " + std::to_string(id) + " missing below max id " +
                      std::to_string(max_id));
    }
    if (counts_[static_cast<std::size_t>(id)] < validation.min_calyx_vertices) {
      throw Error(ErrorCode::kUndersizedCalyx,
                  "calyx " + std::to_string(id) + " has " +
                      std::to_string(counts_[static_cast<std::size_t>(id)]) + " vertices");
    }
  }
  calyx_count_ = max_id;
}

std::vector<int> LabeledMesh::calyx_ids() const {
  std::vector<int> ids(static_cast<std::size_t>(calyx_count_));
  for (int i = 0; i < calyx_count_; ++i) ids[static_cast<std::size_t>(i)] = i + 1;
  return ids;
}

std::optional<std::string> LabeledMesh::calyx_name(int id) const {
  const auto it = names_.find(id);
  if (it == names_.end()) return std::nullopt;
  return it->second;
}

std::vector<CalyxSummary> calyx_summaries(const LabeledMesh& m) {
  std::vector<CalyxSummary> out(static_cast<std::size_t>(m.calyx_count()));
  for (int id = 1; id <= m.calyx_count(); ++id) out[static_cast<std::size_t>(id - 1)].calyx_id = id;
  const auto vertices = m.mesh().vertices();
  const auto labels = m.labels();
  for (std::size_t v = 0; v < vertices.size(); ++v) {
    if (labels[v] == kUnannotated) continue;
    CalyxSummary& s = out[static_cast<std::size_t>(labels[v] - 1)];
    ++s.vertex_count;
    s.centroid += vertices[v];
  }
  for (CalyxSummary& s : out) s.centroid /= static_cast<double>(s.vertex_count);
  return out;
}

}  // namespace calyx
