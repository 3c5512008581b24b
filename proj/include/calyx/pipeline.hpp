#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "calyx/features.hpp"
#include "calyx/localization.hpp"
#include "calyx/synth.hpp"
#include "calyx/visitation.hpp"

namespace calyx {

namespace fs = std::filesystem;

/// `key = value` lines; `#` starts a comment. Relative paths resolve against
/// the directory of the file they were read from.
class Config {
 public:
  static Config load(const fs::path& path);
  static Config parse(std::string_view text, fs::path base_dir = {},
                      std::string source = "<config>");

  bool has(std::string_view key) const { return values_.count(std::string(key)) != 0; }
  std::string get(std::string_view key) const;
  std::string get_or(std::string_view key, std::string_view fallback) const;
  double number(std::string_view key) const;
  double number_or(std::string_view key, double fallback) const;
  std::int64_t integer_or(std::string_view key, std::int64_t fallback) const;
  fs::path path(std::string_view key) const;
  std::optional<fs::path> optional_path(std::string_view key) const;

  /// Throws InvalidArgument naming the first key not in `allowed`.
  void check_keys(std::span<const std::string_view> allowed) const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  fs::path base_dir_;
  std::string source_;
};

PinholeCamera load_camera(const fs::path& path);
void save_camera(const fs::path& path, const PinholeCamera& cam);

/// One line: `qw qx qy qz tx ty tz`.
RigidTransform load_transform(const fs::path& path);
void save_transform(const fs::path& path, const RigidTransform& t);

/// Camera poses as `frame_id,qw,qx,qy,qz,tx_mm,ty_mm,tz_mm`, stored
/// world-from-camera so that t is the camera centre. Returned and accepted
/// as camera-from-world.
std::map<std::int64_t, RigidTransform> load_poses(const fs::path& path);
void save_poses(const fs::path& path, std::span<const std::pair<std::int64_t, RigidTransform>> poses);

/// Trajectory CSV; pose columns hold world-from-camera and are empty for
/// frames without a pose.
void write_trajectory(const fs::path& path, std::span<const LocalizedFrame> frames);
std::vector<LocalizedFrame> read_trajectory(const fs::path& path);

ReferenceModel load_reference_model(const fs::path& cloud, const fs::path& features,
                                    const fs::path& poses,
                                    const std::optional<fs::path>& registration);

struct AssessConfig {
  fs::path mesh;
  fs::path reference_cloud;
  fs::path reference_features;
  fs::path reference_poses;
  std::optional<fs::path> registration;  // reconstruction to CT; identity when absent
  fs::path query_features;
  fs::path camera;
  fs::path output_dir;
  std::size_t frame_stride = 2;
  std::optional<double> threshold;
  std::optional<fs::path> threshold_file;
  std::string phantom_id;
  std::string video_id;
  LocalizationParams localization;
  VisibilityParams visibility;

  static AssessConfig from_config(const Config& c);
};

struct AssessInputs {
  const LabeledMesh* mesh = nullptr;
  const ReferenceModel* model = nullptr;
  std::span<const QueryFrame> query;
  PinholeCamera camera;
};

struct AssessOptions {
  std::size_t frame_stride = 2;
  double threshold = 0.45;
  LocalizationParams localization;
  VisibilityParams visibility;
};

struct AssessResult {
  std::size_t input_frames = 0;
  std::vector<LocalizedFrame> frames;  // processed frames, after filtering
  VertexSet visited;
  VisitationReport report;
};

/// Stride, localize, filter, ray-cast visibility, score and classify.
AssessResult assess(const AssessInputs& inputs, const AssessOptions& options);

/// Loads inputs, runs assess and writes report.json, trajectory.csv and
/// visited_mesh.ply into the output directory.
AssessResult run_assess(const AssessConfig& config);

/// Localization only; writes trajectory.csv.
std::vector<LocalizedFrame> run_localize(const AssessConfig& config);

struct MetricsConfig {
  fs::path mesh;
  fs::path reference_cloud;
  std::optional<fs::path> registration;
  double coverage_radius_mm = 1.0;
  double hausdorff_percent = 99.0;
  // Reprojection error needs all three.
  std::optional<fs::path> reference_features;
  std::optional<fs::path> reference_poses;
  std::optional<fs::path> camera;
  // Target registration error needs both.
  std::optional<fs::path> trajectory;
  std::optional<fs::path> ground_truth;
  std::size_t fiducial_every = 10;
  fs::path output;

  static MetricsConfig from_config(const Config& c);
};

/// Writes the metrics document and returns it as text.
std::string run_metrics(const MetricsConfig& config);

struct SimulateSpec {
  synth::PhantomSpec phantom;
  PinholeCamera camera{200.0, 200.0, 160.0, 160.0, 320, 320};
  synth::TrajectorySpec reference;
  std::size_t reference_stride = 5;
  synth::TrajectorySpec query;
  synth::NoiseSpec reference_noise;
  synth::NoiseSpec query_noise;
  std::size_t landmark_count = 4000;
  std::uint64_t landmark_seed = 7;
  VisibilityParams visibility;

  static SimulateSpec defaults();
  static SimulateSpec from_config(const Config& c);
};

struct Simulation {
  synth::Phantom phantom;
  synth::Landmarks landmarks;
  std::vector<synth::PosedFrame> reference_trajectory;
  ReferenceModel model;
  std::vector<synth::PosedFrame> query_trajectory;
  synth::SynthFeatures query;
};

Simulation simulate(const SimulateSpec& spec);

/// Writes a simulation as files, including a ready-to-run assess.cfg.
void write_simulation(const Simulation& sim, const SimulateSpec& spec, const fs::path& out_dir);

struct CrossvalConfig {
  fs::path annotations;  // CSV: video_id,calyx_id,label,score
  int folds = 5;
  int repeats = 5;
  std::uint64_t seed = 0;
  fs::path output;

  static CrossvalConfig from_config(const Config& c);
};

std::vector<AnnotatedVideo> load_annotations(const fs::path& path);

/// Writes the cross-validation document, including the mean fold threshold
/// under key "threshold" (usable as an assess threshold_file).
std::string run_crossval(const CrossvalConfig& config);

}  // namespace calyx
