#include <fstream>
#include <sstream>

#include "calyx/error.hpp"
#include "calyx/pipeline.hpp"
#include "calyx/text_io.hpp"
#include "json.hpp"

namespace calyx {

namespace {

using Json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

constexpr std::string_view kAssessKeys[] = {
    "mesh", "reference_cloud", "reference_features", "reference_poses", "registration",
    "query_features", "camera", "output_dir", "frame_stride", "threshold", "threshold_file",
    "phantom_id", "video_id", "localization.retrieval_k", "localization.min_match_count",
    "localization.min_inlier_count", "localization.min_inlier_ratio",
    "localization.essential_sampson_threshold_px", "localization.pnp_reprojection_threshold_px",
    "localization.ransac_iterations", "localization.ransac_confidence", "localization.match_ratio",
    "localization.rng_seed", "localization.v_max_mm_per_s", "visibility.max_view_distance_mm",
    "visibility.occlusion_epsilon_mm"};

double threshold_from_file(const fs::path& path) {
  auto in = text::open_input(path);
  try {
    const Json j = Json::parse(in);
    return j.at("threshold").get<double>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

double resolve_threshold(const AssessConfig& c) {
  if (c.threshold) return *c.threshold;
  if (c.threshold_file) return threshold_from_file(*c.threshold_file);
  return AssessOptions{}.threshold;
}

Json params_json(const AssessOptions& o) {
  const LocalizationParams& l = o.localization;
  const VisibilityParams& v = o.visibility;
  Json j;
  j["frame_stride"] = o.frame_stride;
  j["threshold"] = o.threshold;
  j["localization"] = {{"retrieval_k", l.retrieval_k},
                       {"min_match_count", l.min_match_count},
                       {"min_inlier_count", l.min_inlier_count},
                       {"min_inlier_ratio", l.min_inlier_ratio},
                       {"essential_sampson_threshold_px", l.essential_sampson_threshold_px},
                       {"pnp_reprojection_threshold_px", l.pnp_reprojection_threshold_px},
                       {"ransac_iterations", l.ransac_iterations},
                       {"ransac_confidence", l.ransac_confidence},
                       {"match_ratio", l.match_ratio},
                       {"rng_seed", l.rng_seed},
                       {"v_max_mm_per_s", l.v_max_mm_per_s}};
  j["visibility"] = {{"max_view_distance_mm", v.max_view_distance_mm},
                     {"occlusion_epsilon_mm", v.occlusion_epsilon_mm}};
  return j;
}

Json report_json(const AssessConfig& c, const AssessOptions& o, const AssessResult& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["phantom_id"] = c.phantom_id;
  j["video_id"] = c.video_id;
  j["params"] = params_json(o);
  Json frames;
  frames["input"] = r.input_frames;
  frames["processed"] = r.frames.size();
  for (const auto& [status, count] : r.report.status_counts) frames[std::string(to_string(status))] = count;
  j["frames"] = frames;
  j["visited_vertex_count"] = r.report.visited_vertex_count;
  Json calyces = Json::array();
  for (const CalyxResult& cr : r.report.calyces) {
    calyces.push_back({{"id", cr.id},
                       {"name", cr.name},
                       {"vertex_count", cr.vertex_count},
                       {"visited_vertex_count", cr.visited_count},
                       {"score", cr.score},
                       {"classification", std::string(to_string(cr.classification))}});
  }
  j["calyces"] = calyces;
  return j;
}

LocalizationParams localization_from(const Config& c) {
  LocalizationParams p;
  auto size = [&](std::string_view key, std::size_t fallback) {
    const std::int64_t v = c.integer_or(key, static_cast<std::int64_t>(fallback));
    if (v < 0) throw Error(ErrorCode::kInvalidArgument, std::string(key) + " must be non-negative");
    return static_cast<std::size_t>(v);
  };
  p.retrieval_k = size("localization.retrieval_k", p.retrieval_k);
  p.min_match_count = size("localization.min_match_count", p.min_match_count);
  p.min_inlier_count = size("localization.min_inlier_count", p.min_inlier_count);
  p.min_inlier_ratio = c.number_or("localization.min_inlier_ratio", p.min_inlier_ratio);
  p.essential_sampson_threshold_px =
      c.number_or("localization.essential_sampson_threshold_px", p.essential_sampson_threshold_px);
  p.pnp_reprojection_threshold_px =
      c.number_or("localization.pnp_reprojection_threshold_px", p.pnp_reprojection_threshold_px);
  p.ransac_iterations = static_cast<int>(c.integer_or("localization.ransac_iterations", p.ransac_iterations));
  p.ransac_confidence = c.number_or("localization.ransac_confidence", p.ransac_confidence);
  p.match_ratio = c.number_or("localization.match_ratio", p.match_ratio);
  p.rng_seed = size("localization.rng_seed", p.rng_seed);
  p.v_max_mm_per_s = c.number_or("localization.v_max_mm_per_s", p.v_max_mm_per_s);
  p.validate();
  return p;
}

struct Loaded {
  LabeledMesh mesh;
  ReferenceModel model;
  std::vector<QueryFrame> query;
  PinholeCamera camera;
};

Loaded load_inputs(const AssessConfig& c) {
  Loaded l;
  l.mesh = load_labeled_mesh(c.mesh);
  l.camera = load_camera(c.camera);
  l.model = load_reference_model(c.reference_cloud, c.reference_features, c.reference_poses, c.registration);
  l.model.validate(l.camera);
  l.query = read_features(c.query_features);
  return l;
}

AssessOptions options_from(const AssessConfig& c) {
  AssessOptions o;
  o.frame_stride = c.frame_stride;
  o.threshold = resolve_threshold(c);
  o.localization = c.localization;
  o.visibility = c.visibility;
  return o;
}

std::vector<QueryFrame> apply_stride(std::span<const QueryFrame> query, std::size_t stride) {
  std::vector<QueryFrame> out;
  out.reserve((query.size() + stride - 1) / stride);
  for (std::size_t i = 0; i < query.size(); i += stride) out.push_back(query[i]);
  return out;
}

}  // namespace

AssessConfig AssessConfig::from_config(const Config& c) {
  c.check_keys(kAssessKeys);
  AssessConfig a;
  a.mesh = c.path("mesh");
  a.reference_cloud = c.path("reference_cloud");
  a.reference_features = c.path("reference_features");
  a.reference_poses = c.path("reference_poses");
  a.registration = c.optional_path("registration");
  a.query_features = c.path("query_features");
  a.camera = c.path("camera");
  a.output_dir = c.path("output_dir");
  const std::int64_t stride = c.integer_or("frame_stride", 2);
  if (stride < 1) throw Error(ErrorCode::kInvalidArgument, "frame_stride must be at least 1");
  a.frame_stride = static_cast<std::size_t>(stride);
  if (c.has("threshold") && c.has("threshold_file")) {
    throw Error(ErrorCode::kInvalidArgument, "set either threshold or threshold_file, not both");
  }
  if (c.has("threshold")) a.threshold = c.number("threshold");
  a.threshold_file = c.optional_path("threshold_file");
  a.phantom_id = c.get_or("phantom_id", "");
  a.video_id = c.get_or("video_id", "");
  a.localization = localization_from(c);
  a.visibility.max_view_distance_mm =
      c.number_or("visibility.max_view_distance_mm", a.visibility.max_view_distance_mm);
  a.visibility.occlusion_epsilon_mm =
      c.number_or("visibility.occlusion_epsilon_mm", a.visibility.occlusion_epsilon_mm);
  a.visibility.validate();
  return a;
}

AssessResult assess(const AssessInputs& in, const AssessOptions& o) {
  if (!in.mesh || !in.model) throw Error(ErrorCode::kInvalidArgument, "assess needs a mesh and a model");
  if (o.frame_stride < 1) throw Error(ErrorCode::kInvalidArgument, "frame_stride must be at least 1");
  if (!(o.threshold >= 0.0 && o.threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must lie in [0, 1]");
  }
  o.visibility.validate();
  in.camera.validate();

  AssessResult r;
  r.input_frames = in.query.size();
  const auto selected = apply_stride(in.query, o.frame_stride);
  r.frames = localize_video(selected, *in.model, *in.mesh, in.camera, o.localization);
  std::vector<RigidTransform> poses;
  for (const LocalizedFrame& f : r.frames) {
    if (f.status == FrameStatus::kAccepted) poses.push_back(*f.cam_from_world);
  }
  r.visited = visited_over_poses(*in.mesh, in.camera, poses, o.visibility);
  r.report = make_report(*in.mesh, r.visited, o.threshold, r.frames);
  return r;
}

AssessResult run_assess(const AssessConfig& c) {
  const Loaded l = load_inputs(c);
  const AssessOptions o = options_from(c);
  AssessResult r = assess({&l.mesh, &l.model, l.query, l.camera}, o);

  {
    auto out = text::open_output(c.output_dir / "report.json");
    out << report_json(c, o, r).dump(2) << '\n';
    if (!out) throw Error(ErrorCode::kIoError, "cannot write report.json");
  }
  write_trajectory(c.output_dir / "trajectory.csv", r.frames);
  std::vector<bool> mask(l.mesh.mesh().vertex_count(), false);
  for (std::uint32_t v : r.visited) mask[v] = true;
  save_labeled_mesh(c.output_dir / "visited_mesh.ply", l.mesh, &mask);
  return r;
}

std::vector<LocalizedFrame> run_localize(const AssessConfig& c) {
  const Loaded l = load_inputs(c);
  const auto selected = apply_stride(l.query, c.frame_stride);
  auto frames = localize_video(selected, l.model, l.mesh, l.camera, c.localization);
  write_trajectory(c.output_dir / "trajectory.csv", frames);
  return frames;
}

}  // namespace calyx
