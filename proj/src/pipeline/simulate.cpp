#include <numeric>

#include "calyx/error.hpp"
#include "calyx/pipeline.hpp"
#include "calyx/text_io.hpp"
#include "json.hpp"

namespace calyx {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::string_view kSimulateKeys[] = {
    "phantom.n_calyces", "phantom.calyx_diameter_mm", "phantom.calyx_depth_mm",
    "phantom.pelvis_radius_mm", "phantom.mesh_resolution", "phantom.seed", "camera.fx",
    "camera.fy", "camera.cx", "camera.cy", "camera.width", "camera.height",
    "reference.speed_mm_per_s", "reference.fps", "reference.dwell_s", "reference.seed",
    "reference.stride", "query.visit_plan", "query.speed_mm_per_s", "query.fps", "query.dwell_s",
    "query.seed", "reference_noise.pixel_sigma_px", "reference_noise.outlier_fraction",
    "reference_noise.seed", "query_noise.pixel_sigma_px", "query_noise.outlier_fraction",
    "query_noise.seed", "descriptor_dim", "landmarks.count", "landmarks.seed",
    "visibility.max_view_distance_mm", "visibility.occlusion_epsilon_mm"};

std::vector<int> parse_plan(std::string_view s) {
  std::vector<int> plan;
  std::string normalized(s);
  for (char& ch : normalized) {
    if (ch == ',') ch = ' ';
  }
  for (const auto tok : text::tokens(normalized)) plan.push_back(text::parse_number<int>(tok, "calyx id"));
  return plan;
}

void read_trajectory_spec(const Config& c, std::string_view prefix, synth::TrajectorySpec& t) {
  const std::string p(prefix);
  t.speed_mm_per_s = c.number_or(p + ".speed_mm_per_s", t.speed_mm_per_s);
  t.fps = c.number_or(p + ".fps", t.fps);
  t.dwell_s = c.number_or(p + ".dwell_s", t.dwell_s);
  t.seed = static_cast<std::uint64_t>(c.integer_or(p + ".seed", static_cast<std::int64_t>(t.seed)));
}

void read_noise_spec(const Config& c, std::string_view prefix, synth::NoiseSpec& n) {
  const std::string p(prefix);
  n.pixel_noise_sigma_px = c.number_or(p + ".pixel_sigma_px", n.pixel_noise_sigma_px);
  n.outlier_fraction = c.number_or(p + ".outlier_fraction", n.outlier_fraction);
  n.seed = static_cast<std::uint64_t>(c.integer_or(p + ".seed", static_cast<std::int64_t>(n.seed)));
}

}  // namespace

SimulateSpec SimulateSpec::defaults() {
  SimulateSpec s;
  s.reference.speed_mm_per_s = 10.0;
  s.reference.dwell_s = 1.0;
  s.reference.seed = 11;
  s.query.visit_plan = {1, 2, 3};
  s.query.seed = 21;
  s.reference_noise.pixel_noise_sigma_px = 0.5;
  s.reference_noise.outlier_fraction = 0.1;
  s.reference_noise.seed = 31;
  s.query_noise.pixel_noise_sigma_px = 1.0;
  s.query_noise.outlier_fraction = 0.2;
  s.query_noise.seed = 41;
  return s;
}

SimulateSpec SimulateSpec::from_config(const Config& c) {
  c.check_keys(kSimulateKeys);
  SimulateSpec s = defaults();
  synth::PhantomSpec& p = s.phantom;
  p.n_calyces = static_cast<int>(c.integer_or("phantom.n_calyces", p.n_calyces));
  p.calyx_diameter_mm = c.number_or("phantom.calyx_diameter_mm", p.calyx_diameter_mm);
  p.calyx_depth_mm = c.number_or("phantom.calyx_depth_mm", p.calyx_depth_mm);
  p.pelvis_radius_mm = c.number_or("phantom.pelvis_radius_mm", p.pelvis_radius_mm);
  p.mesh_resolution = static_cast<int>(c.integer_or("phantom.mesh_resolution", p.mesh_resolution));
  p.seed = static_cast<std::uint64_t>(c.integer_or("phantom.seed", static_cast<std::int64_t>(p.seed)));

  s.camera.fx = c.number_or("camera.fx", s.camera.fx);
  s.camera.fy = c.number_or("camera.fy", s.camera.fy);
  s.camera.width = static_cast<int>(c.integer_or("camera.width", s.camera.width));
  s.camera.height = static_cast<int>(c.integer_or("camera.height", s.camera.height));
  s.camera.cx = c.number_or("camera.cx", 0.5 * s.camera.width);
  s.camera.cy = c.number_or("camera.cy", 0.5 * s.camera.height);

  read_trajectory_spec(c, "reference", s.reference);
  const std::int64_t stride = c.integer_or("reference.stride", static_cast<std::int64_t>(s.reference_stride));
  if (stride < 1) throw Error(ErrorCode::kInvalidArgument, "reference.stride must be at least 1");
  s.reference_stride = static_cast<std::size_t>(stride);
  read_trajectory_spec(c, "query", s.query);
  if (c.has("query.visit_plan")) s.query.visit_plan = parse_plan(c.get("query.visit_plan"));

  read_noise_spec(c, "reference_noise", s.reference_noise);
  read_noise_spec(c, "query_noise", s.query_noise);
  const auto dim = static_cast<int>(c.integer_or("descriptor_dim", s.query_noise.descriptor_dim));
  s.reference_noise.descriptor_dim = dim;
  s.query_noise.descriptor_dim = dim;
  const std::int64_t count = c.integer_or("landmarks.count", static_cast<std::int64_t>(s.landmark_count));
  if (count < 1) throw Error(ErrorCode::kInvalidArgument, "landmarks.count must be positive");
  s.landmark_count = static_cast<std::size_t>(count);
  s.landmark_seed = static_cast<std::uint64_t>(c.integer_or("landmarks.seed", static_cast<std::int64_t>(s.landmark_seed)));
  s.visibility.max_view_distance_mm = c.number_or("visibility.max_view_distance_mm", s.visibility.max_view_distance_mm);
  s.visibility.occlusion_epsilon_mm = c.number_or("visibility.occlusion_epsilon_mm", s.visibility.occlusion_epsilon_mm);
  return s;
}

Simulation simulate(const SimulateSpec& spec) {
  spec.camera.validate();
  spec.visibility.validate();
  if (spec.reference_noise.descriptor_dim != spec.query_noise.descriptor_dim) {
    throw Error(ErrorCode::kDimensionMismatch, "reference and query descriptor sizes differ");
  }
  Simulation sim;
  sim.phantom = synth::generate_phantom(spec.phantom);
  const TriMesh& mesh = sim.phantom.mesh.mesh();
  sim.landmarks = synth::make_landmarks(mesh, spec.landmark_count, spec.query_noise.descriptor_dim,
                                        spec.landmark_seed);

  // The reference exploration always visits every calyx.
  synth::TrajectorySpec ref_spec = spec.reference;
  ref_spec.visit_plan.resize(static_cast<std::size_t>(spec.phantom.n_calyces));
  std::iota(ref_spec.visit_plan.begin(), ref_spec.visit_plan.end(), 1);
  const auto full = synth::generate_trajectory(sim.phantom, ref_spec);
  for (std::size_t i = 0; i < full.size(); i += spec.reference_stride) sim.reference_trajectory.push_back(full[i]);

  synth::FeatureOptions ref_opts;
  ref_opts.emit_point_ids = true;
  ref_opts.visibility = spec.visibility;
  auto ref = synth::synthesize_features(mesh, sim.landmarks, sim.reference_trajectory, spec.camera,
                                        spec.reference_noise, ref_opts);
  sim.model.cloud = sim.landmarks.points;
  for (std::size_t i = 0; i < ref.frames.size(); ++i) {
    sim.model.frames.push_back({std::move(ref.frames[i]), sim.reference_trajectory[i].cam_from_world});
  }

  sim.query_trajectory = synth::generate_trajectory(sim.phantom, spec.query);
  synth::FeatureOptions query_opts;
  query_opts.visibility = spec.visibility;
  sim.query = synth::synthesize_features(mesh, sim.landmarks, sim.query_trajectory, spec.camera,
                                         spec.query_noise, query_opts);
  return sim;
}

void write_simulation(const Simulation& sim, const SimulateSpec& spec, const fs::path& dir) {
  fs::create_directories(dir);
  save_labeled_mesh(dir / "phantom.ply", sim.phantom.mesh);
  save_point_cloud(dir / "reference_cloud.ply", sim.model.cloud);
  std::vector<FrameFeatures> ref_features;
  std::vector<std::pair<std::int64_t, RigidTransform>> ref_poses;
  for (const ReferenceFrame& f : sim.model.frames) {
    ref_features.push_back(f.features);
    ref_poses.emplace_back(f.features.frame_id, f.cam_from_world);
  }
  write_features(dir / "reference_features.txt", ref_features);
  save_poses(dir / "reference_poses.csv", ref_poses);
  write_features(dir / "query_features.txt", sim.query.frames);
  save_camera(dir / "camera.cfg", spec.camera);

  std::vector<LocalizedFrame> gt;
  for (const synth::PosedFrame& f : sim.query_trajectory) {
    LocalizedFrame lf;
    lf.frame_id = f.frame_id;
    lf.timestamp_s = f.timestamp_s;
    lf.cam_from_world = f.cam_from_world;
    lf.status = FrameStatus::kAccepted;
    gt.push_back(lf);
  }
  write_trajectory(dir / "query_gt.csv", gt);

  Json truth;
  truth["schema_version"] = 1;
  truth["phantom"] = {{"n_calyces", spec.phantom.n_calyces},
                      {"calyx_diameter_mm", spec.phantom.calyx_diameter_mm},
                      {"calyx_depth_mm", spec.phantom.calyx_depth_mm},
                      {"pelvis_radius_mm", spec.phantom.pelvis_radius_mm},
                      {"mesh_resolution", spec.phantom.mesh_resolution},
                      {"seed", spec.phantom.seed},
                      {"vertex_count", sim.phantom.mesh.mesh().vertex_count()}};
  truth["visit_plan"] = spec.query.visit_plan;
  Json expected = Json::object();
  for (const int id : sim.phantom.mesh.calyx_ids()) {
    const bool planned = std::find(spec.query.visit_plan.begin(), spec.query.visit_plan.end(), id) !=
                         spec.query.visit_plan.end();
    expected[std::to_string(id)] = planned ? "visited" : "missed";
  }
  truth["expected_classification"] = expected;
  truth["query_empty_frames"] = sim.query.empty_frames;
  Json kp = Json::array();
  for (std::size_t i = 0; i < sim.query.frames.size(); ++i) {
    kp.push_back({{"frame_id", sim.query.frames[i].frame_id}, {"landmark_ids", sim.query.truth[i]}});
  }
  truth["query_keypoint_truth"] = kp;
  {
    auto out = text::open_output(dir / "truth.json");
    out << truth.dump(1) << '\n';
  }
  {
    auto out = text::open_output(dir / "assess.cfg");
    out << "# Generated by simulate. Paths are relative to this file.\n"
           "mesh = phantom.ply\n"
           "reference_cloud = reference_cloud.ply\n"
           "reference_features = reference_features.txt\n"
           "reference_poses = reference_poses.csv\n"
           "query_features = query_features.txt\n"
           "camera = camera.cfg\n"
           "output_dir = assess_out\n"
           "frame_stride = 2\n"
           "threshold = 0.45\n"
           "phantom_id = sim_phantom_"
        << spec.phantom.seed << "\nvideo_id = sim_video_" << spec.query.seed << '\n';
  }
  {
    auto out = text::open_output(dir / "metrics.cfg");
    out << "# Run after assess; the trajectory comes from assess_out.\n"
           "mesh = phantom.ply\n"
           "reference_cloud = reference_cloud.ply\n"
           "reference_features = reference_features.txt\n"
           "reference_poses = reference_poses.csv\n"
           "camera = camera.cfg\n"
           "trajectory = assess_out/trajectory.csv\n"
           "ground_truth = query_gt.csv\n"
           "output = metrics.json\n";
  }
}

}  // namespace calyx
