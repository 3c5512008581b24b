#include <fstream>
#include <sstream>

#include "calyx/pipeline.hpp"
#include "json.hpp"
#include "test_util.hpp"

namespace calyx {
namespace {

using Json = nlohmann::json;

std::string slurp(const fs::path& p) {
  std::stringstream s;
  s << std::ifstream(p).rdbuf();
  return s.str();
}

TEST(Config, ParsesValuesAndComments) {
  const Config c = Config::parse("# header\na = 1.5\n  b=hello world  # trailing\n\nc = rel/x.ply\n", "/base");
  EXPECT_DOUBLE_EQ(c.number("a"), 1.5);
  EXPECT_EQ(c.get("b"), "hello world");
  EXPECT_EQ(c.path("c"), fs::path("/base/rel/x.ply"));
  EXPECT_EQ(c.integer_or("missing", 7), 7);
  EXPECT_FALSE(c.optional_path("missing"));
}

TEST(Config, Errors) {
  EXPECT_CALYX_ERROR(Config::parse("a = 1\na = 2\n"), ErrorCode::kParseError);
  EXPECT_CALYX_ERROR(Config::parse("novalue\n"), ErrorCode::kParseError);
  const Config c = Config::parse("a = x\nzz = 1\n");
  EXPECT_CALYX_ERROR(c.number("a"), ErrorCode::kParseError);
  EXPECT_ANY_THROW(c.get("nope"));
  constexpr std::string_view allowed[] = {"a"};
  EXPECT_CALYX_ERROR(c.check_keys(allowed), ErrorCode::kInvalidArgument);
  EXPECT_CALYX_ERROR(Config::load("/nonexistent/calyx.cfg"), ErrorCode::kIoError);
}

TEST(AssessConfig, ThresholdSources) {
  const Config both = Config::parse(
      "mesh=m\nreference_cloud=c\nreference_features=f\nreference_poses=p\nquery_features=q\n"
      "camera=k\noutput_dir=o\nthreshold=0.4\nthreshold_file=t.json\n");
  EXPECT_CALYX_ERROR(AssessConfig::from_config(both), ErrorCode::kInvalidArgument);
  const Config ok = Config::parse(
      "mesh=m\nreference_cloud=c\nreference_features=f\nreference_poses=p\nquery_features=q\n"
      "camera=k\noutput_dir=o\nframe_stride=3\nlocalization.v_max_mm_per_s=100\n");
  const AssessConfig a = AssessConfig::from_config(ok);
  EXPECT_EQ(a.frame_stride, 3u);
  EXPECT_DOUBLE_EQ(a.localization.v_max_mm_per_s, 100.0);
  EXPECT_FALSE(a.threshold);
}

TEST(Io, CameraTransformAndPoses) {
  const test::TempDir dir;
  const PinholeCamera cam{210.5, 199.25, 150.0, 161.0, 300, 322};
  save_camera(dir / "cam.cfg", cam);
  const PinholeCamera back = load_camera(dir / "cam.cfg");
  EXPECT_EQ(back.fx, cam.fx);
  EXPECT_EQ(back.cy, cam.cy);
  EXPECT_EQ(back.height, cam.height);

  Rng rng(1);
  const RigidTransform t = test::random_rigid(rng, 3.0, 40.0);
  save_transform(dir / "t.txt", t);
  const RigidTransform tb = load_transform(dir / "t.txt");
  EXPECT_LT(rotation_angle_deg(t, tb), 1e-9);
  EXPECT_LT((t.translation() - tb.translation()).norm(), 1e-12);

  std::vector<std::pair<std::int64_t, RigidTransform>> poses;
  for (int i = 0; i < 5; ++i) poses.emplace_back(i * 3, test::random_rigid(rng, 3.0, 40.0));
  save_poses(dir / "poses.csv", poses);
  const auto loaded = load_poses(dir / "poses.csv");
  ASSERT_EQ(loaded.size(), 5u);
  for (const auto& [id, pose] : poses) {
    EXPECT_LT((camera_center(loaded.at(id)) - camera_center(pose)).norm(), 1e-9);
    EXPECT_TRUE(slurp(dir / "poses.csv").find("frame_id,qw") == 0);
  }
}

TEST(Io, TrajectoryRoundTrip) {
  const test::TempDir dir;
  Rng rng(2);
  std::vector<LocalizedFrame> frames(4);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    frames[i].frame_id = static_cast<std::int64_t>(2 * i);
    frames[i].timestamp_s = 2.0 * static_cast<double>(i) / 30.0;
    frames[i].status = static_cast<FrameStatus>(i);
    if (i != 3) frames[i].cam_from_world = test::random_rigid(rng, 3.0, 20.0);
    frames[i].inlier_count = 10 * i;
    frames[i].inlier_ratio = 0.25 * static_cast<double>(i);
  }
  write_trajectory(dir / "t.csv", frames);
  const auto back = read_trajectory(dir / "t.csv");
  ASSERT_EQ(back.size(), frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    EXPECT_EQ(back[i].frame_id, frames[i].frame_id);
    EXPECT_EQ(back[i].timestamp_s, frames[i].timestamp_s);
    EXPECT_EQ(back[i].status, frames[i].status);
    EXPECT_EQ(back[i].inlier_count, frames[i].inlier_count);
    EXPECT_EQ(back[i].cam_from_world.has_value(), frames[i].cam_from_world.has_value());
    if (frames[i].cam_from_world) {
      EXPECT_LT((*back[i].position() - *frames[i].position()).norm(), 1e-9);
    }
  }
}

TEST(Io, FeaturesRoundTrip) {
  const test::TempDir dir;
  SimulateSpec spec = SimulateSpec::defaults();
  spec.query.visit_plan = {1};
  const Simulation sim = simulate(spec);
  write_features(dir / "q.txt", sim.query.frames);
  const auto back = read_features(dir / "q.txt");
  ASSERT_EQ(back.size(), sim.query.frames.size());
  for (std::size_t i = 0; i < back.size(); i += 17) {
    const auto& a = sim.query.frames[i];
    EXPECT_EQ(back[i].frame_id, a.frame_id);
    EXPECT_EQ(back[i].global_descriptor, a.global_descriptor);
    EXPECT_EQ(back[i].keypoints.pixels, a.keypoints.pixels);
    EXPECT_EQ(back[i].keypoints.descriptors, a.keypoints.descriptors);
    EXPECT_EQ(back[i].keypoints.point_ids, a.keypoints.point_ids);
  }
}

class AssessTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { sim_ = new Simulation(simulate(SimulateSpec::defaults())); }
  static void TearDownTestSuite() {
    delete sim_;
    sim_ = nullptr;
  }
  static AssessInputs inputs(std::span<const QueryFrame> query) {
    return {&sim_->phantom.mesh, &sim_->model, query, SimulateSpec::defaults().camera};
  }
  static Simulation* sim_;
};

Simulation* AssessTest::sim_ = nullptr;

TEST_F(AssessTest, EmptyQueryMissesEverything) {
  const AssessResult r = assess(inputs({}), {});
  EXPECT_EQ(r.input_frames, 0u);
  EXPECT_TRUE(r.frames.empty());
  EXPECT_EQ(r.report.status_counts.at(FrameStatus::kAccepted), 0u);
  ASSERT_EQ(r.report.calyces.size(), 6u);
  for (const CalyxResult& c : r.report.calyces) {
    EXPECT_EQ(c.classification, Visitation::kMissed);
    EXPECT_EQ(c.score, 0.0);
  }
}

TEST_F(AssessTest, StrideTwoHalvesFrames) {
  std::vector<QueryFrame> query(1800);
  for (std::size_t i = 0; i < query.size(); ++i) {
    query[i].frame_id = static_cast<std::int64_t>(i);
    query[i].timestamp_s = static_cast<double>(i) / 30.0;
    query[i].global_descriptor = sim_->model.frames[0].features.global_descriptor;
  }
  const AssessResult r = assess(inputs(query), {});
  EXPECT_EQ(r.input_frames, 1800u);
  EXPECT_EQ(r.frames.size(), 900u);
  std::size_t total = 0;
  for (const auto& [status, n] : r.report.status_counts) total += n;
  EXPECT_EQ(total, 900u);
  EXPECT_EQ(r.frames[1].frame_id, 2);
}

TEST_F(AssessTest, DefaultSimulationClassifiesPlan) {
  const AssessResult r = assess(inputs(sim_->query.frames), {});
  for (const CalyxResult& c : r.report.calyces) {
    EXPECT_EQ(c.classification, c.id <= 3 ? Visitation::kVisited : Visitation::kMissed)
        << "calyx " << c.id << " score " << c.score;
  }
  std::size_t total = 0;
  for (const auto& [status, n] : r.report.status_counts) total += n;
  EXPECT_EQ(total, r.frames.size());
}

TEST_F(AssessTest, RunAssessWritesOutputs) {
  const test::TempDir dir;
  write_simulation(*sim_, SimulateSpec::defaults(), dir.path());
  const AssessResult r = run_assess(AssessConfig::from_config(Config::load(dir / "assess.cfg")));
  const Json report = Json::parse(slurp(dir / "assess_out/report.json"));
  EXPECT_EQ(report["schema_version"], 1);
  EXPECT_EQ(report["frames"]["processed"], r.frames.size());
  EXPECT_EQ(report["calyces"].size(), 6u);
  EXPECT_EQ(read_trajectory(dir / "assess_out/trajectory.csv").size(), r.frames.size());
  EXPECT_EQ(load_labeled_mesh(dir / "assess_out/visited_mesh.ply").calyx_count(), 6);

  const Json m = Json::parse(run_metrics(MetricsConfig::from_config(Config::load(dir / "metrics.cfg"))));
  EXPECT_LT(m["tre"]["mean_mm"].get<double>(), 1.0);
  EXPECT_LT(m["reprojection"]["mean_px"].get<double>(), 2.0);
}

TEST(Metrics, IdenticalCloudAndExactTrajectory) {
  const test::TempDir dir;
  SimulateSpec spec = SimulateSpec::defaults();
  spec.query.visit_plan = {2};
  const Simulation sim = simulate(spec);
  save_labeled_mesh(dir / "mesh.ply", sim.phantom.mesh);
  save_point_cloud(dir / "cloud.ply", sim.phantom.mesh.mesh().vertices());
  std::vector<LocalizedFrame> gt;
  for (const auto& f : sim.query_trajectory) {
    LocalizedFrame lf;
    lf.frame_id = f.frame_id;
    lf.timestamp_s = f.timestamp_s;
    lf.cam_from_world = f.cam_from_world;
    lf.status = FrameStatus::kAccepted;
    gt.push_back(lf);
  }
  write_trajectory(dir / "gt.csv", gt);
  const Config c = Config::parse(
      "mesh = mesh.ply\nreference_cloud = cloud.ply\ntrajectory = gt.csv\nground_truth = gt.csv\n"
      "output = m.json\n",
      dir.path());
  const Json m = Json::parse(run_metrics(MetricsConfig::from_config(c)));
  EXPECT_LT(m["chamfer"]["mean_mm"].get<double>(), 1e-9);
  EXPECT_LT(m["hausdorff"]["distance_mm"].get<double>(), 1e-9);
  EXPECT_EQ(m["coverage"]["percent"].get<double>(), 100.0);
  EXPECT_LT(m["tre"]["mean_mm"].get<double>(), 1e-9);
  EXPECT_TRUE(m["reprojection"].is_null());
  EXPECT_TRUE(fs::exists(dir / "m.json"));
}

TEST(Crossval, AnnotationsFile) {
  const test::TempDir dir;
  std::ofstream out(dir / "a.csv");
  out << "video_id,calyx_id,label,score\n";
  for (int v = 0; v < 10; ++v) {
    for (int c = 1; c <= 4; ++c) {
      const bool visited = (v + c) % 2 == 0;
      out << "v" << v << ',' << c << ',' << (visited ? "visited" : "missed") << ','
          << (visited ? 0.8 : 0.2) << '\n';
    }
  }
  out.close();
  const auto videos = load_annotations(dir / "a.csv");
  ASSERT_EQ(videos.size(), 10u);
  EXPECT_EQ(videos[3].scores.at(1), 0.8);
  const Json j = Json::parse(run_crossval(CrossvalConfig::from_config(
      Config::parse("annotations = a.csv\noutput = cv.json\n", dir.path()))));
  EXPECT_EQ(j["mean_accuracy"].get<double>(), 1.0);
  EXPECT_NEAR(j["threshold"].get<double>(), 0.5, 1e-12);
}

TEST(Crossval, MalformedAnnotations) {
  const test::TempDir dir;
  std::ofstream(dir / "bad.csv") << "video_id,calyx_id,label,score\nv0,1,maybe,0.3\n";
  EXPECT_CALYX_ERROR(load_annotations(dir / "bad.csv"), ErrorCode::kParseError);
  std::ofstream(dir / "hdr.csv") << "video,calyx\n";
  EXPECT_CALYX_ERROR(load_annotations(dir / "hdr.csv"), ErrorCode::kParseError);
}

TEST(Simulate, SpecFromConfig) {
  const SimulateSpec s = SimulateSpec::from_config(
      Config::parse("phantom.n_calyces = 4\nquery.visit_plan = 1, 4\nreference.stride = 3\n"));
  EXPECT_EQ(s.phantom.n_calyces, 4);
  EXPECT_EQ(s.query.visit_plan, (std::vector<int>{1, 4}));
  EXPECT_EQ(s.reference_stride, 3u);
  EXPECT_CALYX_ERROR(SimulateSpec::from_config(Config::parse("phantom.colour = red\n")),
                     ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace calyx
