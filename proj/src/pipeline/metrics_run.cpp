#include <numeric>

#include "calyx/error.hpp"
#include "calyx/metrics.hpp"
#include "calyx/pipeline.hpp"
#include "calyx/text_io.hpp"
#include "json.hpp"

namespace calyx {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kMetricsKeys[] = {
    "mesh", "reference_cloud", "registration", "coverage_radius_mm", "hausdorff_percentile",
    "reference_features", "reference_poses", "camera", "trajectory", "ground_truth",
    "fiducial_every", "output"};

constexpr std::string_view kCrossvalKeys[] = {"annotations", "folds", "repeats", "seed", "output"};

void write_json(const fs::path& path, const Json& j) {
  auto out = text::open_output(path);
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

Json tre_json(const MetricsConfig& c) {
  const auto estimated = read_trajectory(*c.trajectory);
  std::map<std::int64_t, Vec3> truth;
  for (const LocalizedFrame& f : read_trajectory(*c.ground_truth)) {
    if (f.cam_from_world) truth[f.frame_id] = *f.position();
  }
  std::vector<FiducialPair> fiducials;
  std::vector<FiducialPair> held_out;
  std::size_t localized = 0;
  for (const LocalizedFrame& f : estimated) {
    if (f.status != FrameStatus::kAccepted) continue;
    const auto it = truth.find(f.frame_id);
    if (it == truth.end()) continue;
    (localized % c.fiducial_every == 0 ? fiducials : held_out).push_back({*f.position(), it->second});
    ++localized;
  }
  const AlignmentResult fit = align_fiducials_robust(fiducials);
  const DistanceStats tre = target_registration_error(fit.transform, held_out);
  const std::size_t inliers = static_cast<std::size_t>(std::count(fit.inliers.begin(), fit.inliers.end(), true));
  return {{"fiducials", fiducials.size()}, {"fiducial_inliers", inliers},
          {"held_out", tre.count},         {"scale", fit.transform.scale()},
          {"mean_mm", tre.mean},           {"stddev_mm", tre.stddev}};
}

}  // namespace

MetricsConfig MetricsConfig::from_config(const Config& c) {
  c.check_keys(kMetricsKeys);
  MetricsConfig m;
  m.mesh = c.path("mesh");
  m.reference_cloud = c.path("reference_cloud");
  m.registration = c.optional_path("registration");
  m.coverage_radius_mm = c.number_or("coverage_radius_mm", m.coverage_radius_mm);
  m.hausdorff_percent = c.number_or("hausdorff_percentile", m.hausdorff_percent);
  m.reference_features = c.optional_path("reference_features");
  m.reference_poses = c.optional_path("reference_poses");
  m.camera = c.optional_path("camera");
  m.trajectory = c.optional_path("trajectory");
  m.ground_truth = c.optional_path("ground_truth");
  const std::int64_t every = c.integer_or("fiducial_every", 10);
  if (every < 1) throw Error(ErrorCode::kInvalidArgument, "fiducial_every must be at least 1");
  m.fiducial_every = static_cast<std::size_t>(every);
  m.output = c.has("output") ? c.path("output") : m.reference_cloud.parent_path() / "metrics.json";
  const bool some_reproj = m.reference_features || m.reference_poses || m.camera;
  const bool all_reproj = m.reference_features && m.reference_poses && m.camera;
  if (some_reproj && !all_reproj) {
    throw Error(ErrorCode::kInvalidArgument, "reprojection needs reference_features, reference_poses and camera");
  }
  if (m.trajectory.has_value() != m.ground_truth.has_value()) {
    throw Error(ErrorCode::kInvalidArgument, "TRE needs both trajectory and ground_truth");
  }
  return m;
}

std::string run_metrics(const MetricsConfig& c) {
  const TriMesh mesh = load_mesh(c.mesh);
  ReferenceModel model;
  if (c.reference_features) {
    model = load_reference_model(c.reference_cloud, *c.reference_features, *c.reference_poses, c.registration);
  } else {
    model.cloud = load_point_cloud(c.reference_cloud);
    if (c.registration) model = register_model(std::move(model), load_transform(*c.registration));
  }

  Json j;
  j["schema_version"] = 1;
  const DistanceStats chamfer = single_sided_chamfer(model.cloud, mesh);
  j["chamfer"] = {{"mean_mm", chamfer.mean}, {"stddev_mm", chamfer.stddev}, {"count", chamfer.count}};
  j["hausdorff"] = {{"percentile", c.hausdorff_percent},
                    {"distance_mm", hausdorff_percentile(model.cloud, mesh, c.hausdorff_percent)}};
  j["coverage"] = {{"radius_mm", c.coverage_radius_mm},
                   {"percent", coverage(mesh.vertices(), model.cloud, c.coverage_radius_mm)}};

  if (c.camera) {
    const PinholeCamera cam = load_camera(*c.camera);
    std::vector<ReprojectionObservation> obs;
    for (const ReferenceFrame& f : model.frames) {
      const Keypoints& k = f.features.keypoints;
      for (std::size_t i = 0; i < k.size(); ++i) {
        if (k.point_ids[i] == kNoPoint) continue;
        obs.push_back({f.cam_from_world, cam, model.cloud.at(static_cast<std::size_t>(k.point_ids[i])), k.pixels[i]});
      }
    }
    const ReprojectionStats r = reprojection_error(obs);
    j["reprojection"] = {{"mean_px", r.mean_px}, {"used", r.used}, {"behind_camera", r.behind_camera}};
  } else {
    j["reprojection"] = nullptr;
  }
  j["tre"] = c.trajectory ? tre_json(c) : Json(nullptr);

  write_json(c.output, j);
  return j.dump(2);
}

CrossvalConfig CrossvalConfig::from_config(const Config& c) {
  c.check_keys(kCrossvalKeys);
  CrossvalConfig x;
  x.annotations = c.path("annotations");
  x.folds = static_cast<int>(c.integer_or("folds", x.folds));
  x.repeats = static_cast<int>(c.integer_or("repeats", x.repeats));
  x.seed = static_cast<std::uint64_t>(c.integer_or("seed", 0));
  x.output = c.has("output") ? c.path("output") : x.annotations.parent_path() / "crossval.json";
  return x;
}

std::vector<AnnotatedVideo> load_annotations(const fs::path& path) {
  auto in = text::open_input(path);
  std::vector<AnnotatedVideo> videos;
  std::map<std::string, std::size_t> index;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!header) {
      if (t != "video_id,calyx_id,label,score") {
        throw Error(ErrorCode::kParseError, path.string() + ": expected header 'video_id,calyx_id,label,score'");
      }
      header = true;
      continue;
    }
    const auto f = text::split(t, ',');
    const std::string where = path.string() + ":" + std::to_string(lineno) + ": ";
    if (f.size() != 4) throw Error(ErrorCode::kParseError, where + "expected 4 fields");
    const std::string id(text::trim(f[0]));
    const auto [it, inserted] = index.try_emplace(id, videos.size());
    if (inserted) videos.push_back({id, {}, {}});
    AnnotatedVideo& v = videos[it->second];
    const int calyx = text::parse_number<int>(f[1], "calyx_id");
    const auto label = text::trim(f[2]);
    if (label != "visited" && label != "missed") {
      throw Error(ErrorCode::kParseError, where + "label must be visited or missed");
    }
    if (v.visited.count(calyx)) throw Error(ErrorCode::kParseError, where + "duplicate calyx");
    v.visited[calyx] = label == "visited";
    v.scores[calyx] = text::parse_number<double>(f[3], "score");
  }
  return videos;
}

std::string run_crossval(const CrossvalConfig& c) {
  const auto videos = load_annotations(c.annotations);
  const CrossValidationResult r = cross_validate(videos, c.folds, c.repeats, c.seed);
  Json folds = Json::array();
  double threshold_sum = 0.0;
  for (const FoldResult& f : r.folds) {
    folds.push_back({{"repeat", f.repeat}, {"fold", f.fold}, {"threshold", f.threshold},
                     {"correct", f.correct}, {"total", f.total}, {"accuracy", f.accuracy}});
    threshold_sum += f.threshold;
  }
  Json j;
  j["schema_version"] = 1;
  j["videos"] = videos.size();
  j["folds"] = c.folds;
  j["repeats"] = c.repeats;
  j["seed"] = c.seed;
  j["threshold"] = threshold_sum / static_cast<double>(r.folds.size());
  j["mean_accuracy"] = r.mean_accuracy;
  j["ci95"] = {r.ci_low, r.ci_high};
  j["repeat_accuracy"] = r.repeat_accuracy;
  j["fold_results"] = folds;
  write_json(c.output, j);
  return j.dump(2);
}

}  // namespace calyx
