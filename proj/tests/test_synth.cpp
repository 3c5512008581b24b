#include <set>

#include "calyx/synth.hpp"
#include "test_util.hpp"

namespace calyx {
namespace {

using synth::PhantomSpec;
using synth::TrajectorySpec;

const PinholeCamera kCam{200.0, 200.0, 160.0, 160.0, 320, 320};

std::set<int> label_ids(const LabeledMesh& m) { return {m.labels().begin(), m.labels().end()}; }

TEST(Phantom, DefaultSpec) {
  const auto p = synth::generate_phantom({});
  EXPECT_EQ(label_ids(p.mesh), (std::set<int>{0, 1, 2, 3, 4, 5, 6}));
  EXPECT_TRUE(p.mesh.mesh().is_watertight());
  EXPECT_EQ(p.centerline.calyces.size(), 6u);
  EXPECT_TRUE(point_inside(p.mesh.mesh(), p.centerline.pelvis_center));
}

TEST(Phantom, SingleCalyx) {
  PhantomSpec spec;
  spec.n_calyces = 1;
  EXPECT_EQ(label_ids(synth::generate_phantom(spec).mesh), (std::set<int>{0, 1}));
}

TEST(Phantom, SameSeedIsBitIdentical) {
  const auto a = synth::generate_phantom({});
  const auto b = synth::generate_phantom({});
  ASSERT_EQ(a.mesh.mesh().vertex_count(), b.mesh.mesh().vertex_count());
  EXPECT_TRUE(std::equal(a.mesh.mesh().vertices().begin(), a.mesh.mesh().vertices().end(),
                         b.mesh.mesh().vertices().begin()));
  EXPECT_TRUE(std::equal(a.mesh.labels().begin(), a.mesh.labels().end(), b.mesh.labels().begin()));
  PhantomSpec other;
  other.seed = 2;
  const auto c = synth::generate_phantom(other);
  EXPECT_FALSE(c.mesh.mesh().vertex_count() == a.mesh.mesh().vertex_count() &&
               std::equal(a.mesh.mesh().vertices().begin(), a.mesh.mesh().vertices().end(),
                          c.mesh.mesh().vertices().begin()));
}

TEST(Phantom, CalyxAxesLieInsideTheirCups) {
  const auto p = synth::generate_phantom({});
  for (const auto& axis : p.centerline.calyces) {
    EXPECT_TRUE(point_inside(p.mesh.mesh(), axis.bend)) << axis.id;
    EXPECT_TRUE(point_inside(p.mesh.mesh(), axis.apex() - axis.radius_mm * axis.cup_direction)) << axis.id;
  }
}

TEST(Phantom, ResolutionTooLow) {
  PhantomSpec spec;
  spec.mesh_resolution = 4;
  EXPECT_CALYX_ERROR(synth::generate_phantom(spec), ErrorCode::kGenerationFailed);
}

TEST(Phantom, InvalidSpec) {
  PhantomSpec spec;
  spec.n_calyces = 0;
  EXPECT_ANY_THROW(synth::generate_phantom(spec));
}

TEST(Trajectory, EmptyPlanStaysInPelvis) {
  const auto p = synth::generate_phantom({});
  const auto traj = synth::generate_trajectory(p, {});
  ASSERT_FALSE(traj.empty());
  for (const auto& f : traj) {
    EXPECT_TRUE(point_inside(p.mesh.mesh(), f.center()));
    EXPECT_EQ(f.target_calyx, 0);
  }
}

TEST(Trajectory, AllCalyces) {
  const auto p = synth::generate_phantom({});
  TrajectorySpec spec;
  spec.visit_plan = {1, 2, 3, 4, 5, 6};
  const auto traj = synth::generate_trajectory(p, spec);
  const double duration = static_cast<double>(traj.size()) / spec.fps;
  EXPECT_GE(duration, 6 * (2 * 25.0 / spec.speed_mm_per_s + 2.0));
  std::set<int> targets;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    ASSERT_TRUE(point_inside(p.mesh.mesh(), traj[i].center())) << "frame " << i;
    targets.insert(traj[i].target_calyx);
    EXPECT_EQ(traj[i].frame_id, static_cast<std::int64_t>(i));
    if (i == 0) continue;
    const double speed = (traj[i].center() - traj[i - 1].center()).norm() * spec.fps;
    EXPECT_LE(speed, 1.05 * spec.speed_mm_per_s) << "frame " << i;
  }
  EXPECT_EQ(targets, (std::set<int>{1, 2, 3, 4, 5, 6}));
}

TEST(Trajectory, ThirtyFpsForSixtySeconds) {
  const auto p = synth::generate_phantom({});
  TrajectorySpec spec;
  spec.visit_plan = {};
  spec.dwell_s = 60.0;
  const auto traj = synth::generate_trajectory(p, spec);
  EXPECT_EQ(traj.size(), 1800u);
  EXPECT_NEAR(traj.back().timestamp_s, 1799 / 30.0, 1e-12);
}

TEST(Trajectory, UnreachableCalyx) {
  const auto p = synth::generate_phantom({});
  TrajectorySpec spec;
  spec.visit_plan = {7};
  EXPECT_CALYX_ERROR(synth::generate_trajectory(p, spec), ErrorCode::kUnreachableCalyx);
}

TEST(Features, OutlierCountIsExact) {
  const auto p = synth::generate_phantom({});
  const auto landmarks = synth::make_landmarks(p.mesh.mesh(), 6000, 32, 1);
  TrajectorySpec ts;
  ts.visit_plan = {1};
  const auto traj = synth::generate_trajectory(p, ts);
  synth::NoiseSpec noise;
  noise.outlier_fraction = 0.3;
  noise.descriptor_dim = 32;
  const auto feats = synth::synthesize_features(p.mesh.mesh(), landmarks, traj, kCam, noise);
  std::size_t checked = 0;
  for (std::size_t f = 0; f < feats.frames.size(); ++f) {
    if (feats.frames[f].keypoints.size() != 200) continue;
    ++checked;
    std::size_t outliers = 0;
    for (auto id : feats.truth[f]) outliers += id == kNoPoint;
    EXPECT_EQ(outliers, 60u);
  }
  EXPECT_GT(checked, 0u);
}

TEST(Features, TruthMatchesProjection) {
  const auto p = synth::generate_phantom({});
  const auto landmarks = synth::make_landmarks(p.mesh.mesh(), 3000, 16, 2);
  TrajectorySpec ts;
  ts.visit_plan = {2};
  const auto traj = synth::generate_trajectory(p, ts);
  synth::NoiseSpec noise;
  noise.descriptor_dim = 16;
  synth::FeatureOptions opts;
  opts.emit_point_ids = true;
  const auto feats = synth::synthesize_features(p.mesh.mesh(), landmarks, traj, kCam, noise, opts);
  ASSERT_EQ(feats.frames.size(), traj.size());
  for (std::size_t f = 0; f < traj.size(); f += 11) {
    const Keypoints& k = feats.frames[f].keypoints;
    EXPECT_NEAR(feats.frames[f].global_descriptor.norm(), 1.0, 1e-12);
    for (std::size_t i = 0; i < k.size(); ++i) {
      const auto id = feats.truth[f][i];
      ASSERT_NE(id, kNoPoint);
      EXPECT_EQ(k.point_ids[i], id);
      const auto px = project(kCam, traj[f].cam_from_world.apply(landmarks.points[static_cast<std::size_t>(id)]));
      ASSERT_TRUE(px);
      EXPECT_LT((*px - k.pixels[i]).norm(), 1e-9);
      EXPECT_EQ(k.descriptors.row(static_cast<Eigen::Index>(i)),
                landmarks.descriptors.row(static_cast<Eigen::Index>(id)));
    }
  }
}

TEST(Features, DisjointViewsAreLessSimilar) {
  const auto p = synth::generate_phantom({});
  const auto landmarks = synth::make_landmarks(p.mesh.mesh(), 4000, 16, 3);
  TrajectorySpec ts;
  ts.visit_plan = {1, 2, 3, 4, 5, 6};
  const auto traj = synth::generate_trajectory(p, ts);
  synth::NoiseSpec noise;
  noise.descriptor_dim = 16;
  const auto feats = synth::synthesize_features(p.mesh.mesh(), landmarks, traj, kCam, noise);
  std::vector<std::set<std::int64_t>> seen(traj.size());
  for (std::size_t f = 0; f < traj.size(); ++f) {
    seen[f] = {feats.truth[f].begin(), feats.truth[f].end()};
  }
  double max_disjoint = -1.0, min_overlap = 2.0;
  for (std::size_t a = 0; a < traj.size(); a += 13) {
    for (std::size_t b = a + 13; b < traj.size(); b += 13) {
      if (seen[a].empty() || seen[b].empty()) continue;
      std::size_t common = 0;
      for (auto id : seen[a]) common += seen[b].count(id);
      const double sim = feats.frames[a].global_descriptor.dot(feats.frames[b].global_descriptor);
      if (common == 0) max_disjoint = std::max(max_disjoint, sim);
      if (common * 2 > std::min(seen[a].size(), seen[b].size())) min_overlap = std::min(min_overlap, sim);
    }
  }
  ASSERT_GE(max_disjoint, 0.0);
  EXPECT_LT(max_disjoint, min_overlap);
}

TEST(BruteForce, SingleTriangleAndEmptyMesh) {
  const TriMesh tri({{-1, -1, 10}, {1, -1, 10}, {0, 1, 10}}, {{0, 1, 2}});
  EXPECT_EQ(synth::brute_force_visibility(tri, kCam, {}, {}), (VertexSet{0, 1, 2}));
  EXPECT_TRUE(synth::brute_force_visibility(TriMesh(), kCam, {}, {}).empty());
}

TEST(Perturb, InjectsExactCount) {
  const auto p = synth::generate_phantom({});
  TrajectorySpec ts;
  ts.visit_plan = {3};
  const auto traj = synth::generate_trajectory(p, ts);
  const auto a = synth::perturb_trajectory(traj, 5, 50.0, 4);
  ASSERT_EQ(a.injected.size(), 5u);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double moved = (a.frames[i].center() - traj[i].center()).norm();
    const bool injected = std::binary_search(a.injected.begin(), a.injected.end(), i);
    EXPECT_NEAR(moved, injected ? 50.0 : 0.0, 1e-9);
  }
  EXPECT_EQ(synth::perturb_trajectory(traj, 5, 50.0, 4).injected, a.injected);
  const auto none = synth::perturb_trajectory(traj, 0, 50.0, 4);
  EXPECT_TRUE(none.injected.empty());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    EXPECT_EQ(none.frames[i].cam_from_world.translation(), traj[i].cam_from_world.translation());
  }
}

TEST(Icosphere, RadiusAndClosure) {
  const TriMesh s = synth::make_icosphere(3.0, 2);
  EXPECT_EQ(s.vertex_count(), 162u);
  EXPECT_EQ(s.face_count(), 320u);
  EXPECT_TRUE(s.is_watertight());
  for (const Vec3& v : s.vertices()) EXPECT_NEAR(v.norm(), 3.0, 1e-12);
  EXPECT_GT(s.face_normal(0).dot(s.triangle(0)[0]), 0.0);
}

}  // namespace
}  // namespace calyx
