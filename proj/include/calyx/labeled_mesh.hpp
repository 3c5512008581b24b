#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "calyx/tri_mesh.hpp"

namespace calyx {

/// Label 0 marks unannotated anatomy (pelvis, ureter, entrance).
inline constexpr int kUnannotated = 0;

struct LabelValidation {
  /// Calyces with fewer vertices than this are rejected as annotation typos.
  std::size_t min_calyx_vertices = 50;
};

struct CalyxSummary {
  int calyx_id = 0;
  std::size_t vertex_count = 0;
  Vec3 centroid = Vec3::Zero();
};

/// Triangle mesh plus a calyx id per vertex.
///
/// Invariants, checked on construction: one label per vertex, labels >= 0,
/// ids >= 1 form the contiguous range 1..n, and every calyx has at least
/// `min_calyx_vertices` vertices.
class LabeledMesh {
 public:
  LabeledMesh() = default;
  LabeledMesh(TriMesh mesh, std::vector<int> labels, std::map<int, std::string> names = {},
              const LabelValidation& validation = {});

  const TriMesh& mesh() const { return mesh_; }
  std::span<const int> labels() const { return labels_; }
  const std::map<int, std::string>& calyx_names() const { return names_; }

  int calyx_count() const { return calyx_count_; }
  /// 1..calyx_count()
  std::vector<int> calyx_ids() const;
  std::size_t calyx_vertex_count(int id) const { return counts_.at(static_cast<std::size_t>(id)); }
  std::size_t unannotated_count() const { return counts_.empty() ? 0 : counts_[0]; }
  std::optional<std::string> calyx_name(int id) const;

 private:
  TriMesh mesh_;
  std::vector<int> labels_;
  std::map<int, std::string> names_;
  int calyx_count_ = 0;
  std::vector<std::size_t> counts_;  // indexed by label
};

std::vector<CalyxSummary> calyx_summaries(const LabeledMesh& m);

/// Reads the ASCII labeled-mesh format (see docs/formats.md).
LabeledMesh load_labeled_mesh(const std::filesystem::path& path,
                              const LabelValidation& validation = {});

/// Writes the labeled-mesh format. With `visited` supplied, adds a per-vertex
/// `visited` flag and an RGB colour for mesh viewers.
void save_labeled_mesh(const std::filesystem::path& path, const LabeledMesh& m,
                       const std::vector<bool>* visited = nullptr);

/// Plain triangle mesh from the same format; labels are ignored if present.
TriMesh load_mesh(const std::filesystem::path& path);

using PointCloud = std::vector<Vec3>;

PointCloud load_point_cloud(const std::filesystem::path& path);
void save_point_cloud(const std::filesystem::path& path, std::span<const Vec3> points);

}  // namespace calyx
