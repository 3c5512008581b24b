#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "calyx/geometry.hpp"
#include "calyx/labeled_mesh.hpp"
#include "calyx/localization.hpp"

namespace calyx {

struct VisibilityParams {
  double max_view_distance_mm = 50.0;
  double occlusion_epsilon_mm = 0.1;

  void validate() const;
};

/// Sorted, duplicate-free vertex indices.
using VertexSet = std::vector<std::uint32_t>;

/// Vertices seen from one pose: in front of the camera, inside the image,
/// within range, and not occluded by any face nearer than
/// distance - occlusion_epsilon.
VertexSet visible_vertices(const LabeledMesh& mesh, const PinholeCamera& cam,
                           const RigidTransform& cam_from_world, const VisibilityParams& params);

VertexSet aggregate_visited(std::span<const VertexSet> per_frame);

/// Union of visible_vertices over all poses. Vertices already seen are not
/// re-tested, so this is cheaper than computing each frame's set.
VertexSet visited_over_poses(const LabeledMesh& mesh, const PinholeCamera& cam,
                             std::span<const RigidTransform> poses, const VisibilityParams& params);

using CalyxScores = std::map<int, double>;

/// Fraction of each calyx's vertices in `visited`. Label 0 is not scored.
CalyxScores visitation_scores(const LabeledMesh& mesh, std::span<const std::uint32_t> visited);

enum class Visitation { kVisited, kMissed };

std::string_view to_string(Visitation v);

/// Visited iff score > threshold.
std::map<int, Visitation> classify(const CalyxScores& scores, double threshold);

struct CalyxResult {
  int id = 0;
  std::string name;
  std::size_t vertex_count = 0;
  std::size_t visited_count = 0;
  double score = 0.0;
  Visitation classification = Visitation::kMissed;
};

struct VisitationReport {
  std::vector<CalyxResult> calyces;
  double threshold = 0.0;
  std::map<FrameStatus, std::size_t> status_counts;
  std::size_t visited_vertex_count = 0;
};

VisitationReport make_report(const LabeledMesh& mesh, std::span<const std::uint32_t> visited,
                             double threshold, std::span<const LocalizedFrame> frames);

/// Midpoint of the two class means. Throws DegenerateFold if either is empty.
double fold_threshold(std::span<const double> visited_scores,
                      std::span<const double> missed_scores);

struct AnnotatedVideo {
  std::string video_id;
  std::map<int, bool> visited;  // expert label per calyx
  CalyxScores scores;
};

struct FoldResult {
  int repeat = 0;
  int fold = 0;
  double threshold = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
};

struct CrossValidationResult {
  std::vector<FoldResult> folds;
  std::vector<double> repeat_accuracy;  // calyces pooled over the folds of a repeat
  double mean_accuracy = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Repeated k-fold cross-validation of the visitation threshold. Each repeat
/// shuffles the videos with its own seed and splits them contiguously.
CrossValidationResult cross_validate(std::span<const AnnotatedVideo> videos, int k = 5,
                                     int repeats = 5, std::uint64_t seed = 0);

}  // namespace calyx
