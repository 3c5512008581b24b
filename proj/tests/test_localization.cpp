#include <numbers>

#include "calyx/localization.hpp"
#include "calyx/pipeline.hpp"
#include "test_util.hpp"

namespace calyx {
namespace {

const PinholeCamera kCam{200.0, 200.0, 160.0, 160.0, 320, 320};

ReferenceModel model_with_descriptors(const std::vector<Eigen::VectorXd>& descs) {
  ReferenceModel m;
  for (std::size_t i = 0; i < descs.size(); ++i) {
    ReferenceFrame f;
    f.features.frame_id = static_cast<std::int64_t>(10 * i);
    f.features.global_descriptor = descs[i];
    m.frames.push_back(f);
  }
  return m;
}

Eigen::VectorXd unit(int dim, int axis) { return Eigen::VectorXd::Unit(dim, axis); }

TEST(Retrieval, ExactMatchRanksFirst) {
  Rng rng(1);
  std::vector<Eigen::VectorXd> d;
  for (int i = 0; i < 8; ++i) {
    Eigen::VectorXd v(16);
    for (auto& x : v) x = rng.normal();
    d.push_back(v.normalized());
  }
  const auto c = retrieve_candidates(d[5], model_with_descriptors(d), 3);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].frame_index, 5u);
  EXPECT_NEAR(c[0].similarity, 1.0, 1e-12);
  EXPECT_GE(c[0].similarity, c[1].similarity);
  EXPECT_GE(c[1].similarity, c[2].similarity);
}

TEST(Retrieval, OrthogonalQueryAndTies) {
  const auto model = model_with_descriptors({unit(4, 0), unit(4, 1), unit(4, 2)});
  const auto c = retrieve_candidates(unit(4, 3), model, 10);
  ASSERT_EQ(c.size(), 3u);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_EQ(c[i].similarity, 0.0);
    EXPECT_EQ(c[i].frame_index, i);
  }
}

TEST(Retrieval, DimensionMismatch) {
  EXPECT_CALYX_ERROR(retrieve_candidates(unit(3, 0), model_with_descriptors({unit(4, 0)}), 1),
                     ErrorCode::kDimensionMismatch);
}

Keypoints random_keypoints(Rng& rng, int n, int dim) {
  Keypoints k;
  k.descriptors.resize(n, dim);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXf v(dim);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    k.descriptors.row(i) = v.normalized().transpose();
    k.pixels.emplace_back(rng.uniform(0, 320), rng.uniform(0, 320));
    k.point_ids.push_back(kNoPoint);
  }
  return k;
}

TEST(Matching, IdenticalListsGiveIdentity) {
  Rng rng(2);
  const Keypoints k = random_keypoints(rng, 60, 32);
  const auto m = match_descriptors(k, k);
  ASSERT_EQ(m.size(), 60u);
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(m[i], (Match{std::uint32_t(i), std::uint32_t(i)}));
}

TEST(Matching, EquidistantIsAmbiguous) {
  Keypoints q, r;
  q.descriptors.resize(1, 3);
  q.descriptors << 1, 0, 0;
  q.pixels = {{1, 1}};
  q.point_ids = {kNoPoint};
  r.descriptors.resize(2, 3);
  r.descriptors << 0, 1, 0, 0, 0, 1;
  r.pixels = {{1, 1}, {2, 2}};
  r.point_ids = {kNoPoint, kNoPoint};
  EXPECT_TRUE(match_descriptors(q, r).empty());
}

TEST(Matching, RecoversNoisyCorrespondences) {
  Rng rng(3);
  const Keypoints r = random_keypoints(rng, 200, 64);
  Keypoints q = r;
  for (Eigen::Index i = 0; i < q.descriptors.rows(); ++i) {
    for (Eigen::Index j = 0; j < q.descriptors.cols(); ++j) q.descriptors(i, j) += static_cast<float>(0.02 * rng.normal());
  }
  const auto m = match_descriptors(q, r);
  std::size_t correct = 0;
  for (const Match& x : m) correct += x.query == x.reference;
  EXPECT_GE(correct, 190u);
  EXPECT_EQ(correct, m.size());
}

// Two views of random points at 20-50 mm depth.
struct TwoViewScene {
  Keypoints query;
  Keypoints reference;
  std::vector<Match> matches;
  std::size_t true_count = 0;
};

TwoViewScene two_view_scene(std::uint64_t seed, std::size_t n_true, std::size_t n_out, double sigma) {
  Rng rng(seed);
  const RigidTransform ref_pose = RigidTransform::identity();
  const RigidTransform query_pose =
      RigidTransform::from_axis_angle(Vec3(0.2, 1, 0.1).normalized(), 0.15, Vec3(4, -1, 0.5));
  TwoViewScene s;
  s.true_count = n_true;
  auto add = [&](Keypoints& k, const Vec2& px) {
    k.pixels.push_back(px);
    k.point_ids.push_back(kNoPoint);
  };
  while (s.matches.size() < n_true) {
    const Vec3 p = unproject(kCam, Vec2(rng.uniform(20, 300), rng.uniform(20, 300)), rng.uniform(20, 50));
    const auto a = project(kCam, query_pose.apply(ref_pose.inverse().apply(p)));
    if (!a || !kCam.in_image(*a)) continue;
    const auto b = project(kCam, ref_pose.apply(p));
    add(s.query, *a + sigma * Vec2(rng.normal(), rng.normal()));
    add(s.reference, *b + sigma * Vec2(rng.normal(), rng.normal()));
    s.matches.push_back({std::uint32_t(s.matches.size()), std::uint32_t(s.matches.size())});
  }
  for (std::size_t i = 0; i < n_out; ++i) {
    add(s.query, {rng.uniform(0, 320), rng.uniform(0, 320)});
    add(s.reference, {rng.uniform(0, 320), rng.uniform(0, 320)});
    s.matches.push_back({std::uint32_t(s.matches.size()), std::uint32_t(s.matches.size())});
  }
  return s;
}

TEST(Essential, AcceptsInliersAndRejectsOutliers) {
  const TwoViewScene s = two_view_scene(4, 100, 100, 0.5);
  const auto v = verify_pair_essential(s.matches, s.query, s.reference, kCam, {}, 7);
  EXPECT_TRUE(v.accepted);
  std::size_t true_in = 0, out_in = 0;
  for (std::size_t i = 0; i < s.matches.size(); ++i) (i < s.true_count ? true_in : out_in) += v.inlier_mask[i];
  EXPECT_GE(true_in, 90u);
  EXPECT_LE(out_in, 5u);
}

TEST(Essential, TooFewMatches) {
  const TwoViewScene s = two_view_scene(5, 5, 0, 0.0);
  const auto v = verify_pair_essential(s.matches, s.query, s.reference, kCam, {}, 7);
  EXPECT_FALSE(v.accepted);
  EXPECT_EQ(v.reason, PairRejection::kTooFewMatches);
}

TEST(Essential, AllOutliersRejected) {
  const TwoViewScene s = two_view_scene(6, 0, 200, 0.0);
  const auto v = verify_pair_essential(s.matches, s.query, s.reference, kCam, {}, 7);
  EXPECT_FALSE(v.accepted);
  EXPECT_LT(v.inlier_ratio, 0.3);
}

TEST(Essential, EightPointSatisfiesEpipolarConstraint) {
  const TwoViewScene s = two_view_scene(7, 30, 0, 0.0);
  std::vector<Vec2> x1, x2;
  for (const Match& m : s.matches) {
    x1.push_back(kCam.normalize(s.reference.pixels[m.reference]));
    x2.push_back(kCam.normalize(s.query.pixels[m.query]));
  }
  const auto e = essential_eight_point(x1, x2);
  ASSERT_TRUE(e);
  for (std::size_t i = 0; i < x1.size(); ++i) EXPECT_LT(sampson_distance(*e, x1[i], x2[i]), 1e-8);
}

std::vector<Correspondence2D3D> pnp_scene(Rng& rng, const RigidTransform& pose, int n, double sigma,
                                          double outlier_fraction) {
  std::vector<Correspondence2D3D> out;
  const RigidTransform world_from_cam = pose.inverse();
  for (int i = 0; i < n; ++i) {
    const Vec2 px(rng.uniform(0, 320), rng.uniform(0, 320));
    const Vec3 p = world_from_cam.apply(unproject(kCam, px, rng.uniform(20, 50)));
    out.push_back({px + sigma * Vec2(rng.normal(), rng.normal()), p});
  }
  const auto n_out = static_cast<std::size_t>(std::llround(outlier_fraction * n));
  for (std::size_t i = 0; i < n_out; ++i) out[i].pixel = Vec2(rng.uniform(0, 320), rng.uniform(0, 320));
  return out;
}

TEST(P3p, RecoversExactPose) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const RigidTransform pose = test::random_rigid(rng, 3.0, 30.0);
    const auto c = pnp_scene(rng, pose, 3, 0.0, 0.0);
    std::array<Vec3, 3> bearings, points;
    for (int i = 0; i < 3; ++i) {
      bearings[i] = Vec3(kCam.normalize(c[i].pixel).x(), kCam.normalize(c[i].pixel).y(), 1.0).normalized();
      points[i] = c[i].point;
    }
    const auto sols = solve_p3p(bearings, points);
    double best = 1e9;
    for (const auto& s : sols) best = std::min(best, test::translation_error(s, pose));
    EXPECT_LT(best, 1e-6) << "trial " << trial << " solutions " << sols.size();
  }
}

TEST(Pnp, NoiselessRecovery) {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const RigidTransform pose = test::random_rigid(rng, 3.0, 30.0);
    const auto c = pnp_scene(rng, pose, 50, 0.0, 0.0);
    const auto r = estimate_absolute_pose(c, kCam, {}, trial);
    ASSERT_TRUE(r);
    EXPECT_LT(test::translation_error(r->cam_from_world, pose), 1e-3);
    EXPECT_LT(rotation_angle_deg(r->cam_from_world, pose), 1e-4);
    EXPECT_EQ(r->inlier_count, 50u);
  }
}

TEST(Pnp, NoisyWithOutliers) {
  Rng rng(10);
  const RigidTransform pose = test::random_rigid(rng, 3.0, 30.0);
  const auto c = pnp_scene(rng, pose, 200, 1.0, 0.3);
  const auto r = estimate_absolute_pose(c, kCam, {}, 3);
  ASSERT_TRUE(r);
  EXPECT_LT(test::translation_error(r->cam_from_world, pose), 1.0);
  EXPECT_LE(r->refined_rms_px, r->ransac_rms_px + 1e-12);
  std::size_t outliers_in = 0;
  for (std::size_t i = 0; i < 60; ++i) outliers_in += r->inliers[i];
  EXPECT_LE(outliers_in, 3u);
}

TEST(Pnp, ThreeCorrespondencesUnlocalized) {
  Rng rng(11);
  const auto c = pnp_scene(rng, RigidTransform::identity(), 3, 0.0, 0.0);
  EXPECT_FALSE(estimate_absolute_pose(c, kCam, {}, 1));
}

TEST(Pnp, RefinementNeverIncreasesCost) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const RigidTransform pose = test::random_rigid(rng, 3.0, 30.0);
    const auto c = pnp_scene(rng, pose, 40, 1.0, 0.0);
    const RigidTransform start = pose * test::random_rigid(rng, 0.05, 1.0);
    const RigidTransform refined = refine_pose(start, c, kCam);
    EXPECT_LE(reprojection_rms(refined, c, kCam), reprojection_rms(start, c, kCam));
  }
}

TEST(Pnp, DeterministicForSeed) {
  Rng rng(13);
  const auto c = pnp_scene(rng, test::random_rigid(rng, 3.0, 30.0), 100, 1.0, 0.3);
  const auto a = estimate_absolute_pose(c, kCam, {}, 5);
  const auto b = estimate_absolute_pose(c, kCam, {}, 5);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->cam_from_world.translation(), b->cam_from_world.translation());
  EXPECT_EQ(a->inliers, b->inliers);
}

TEST(Params, Validation) {
  LocalizationParams p;
  EXPECT_NO_THROW(p.validate());
  p.min_inlier_ratio = 1.5;
  EXPECT_CALYX_ERROR(p.validate(), ErrorCode::kInvalidArgument);
  p = {};
  p.v_max_mm_per_s = 0.0;
  EXPECT_CALYX_ERROR(p.validate(), ErrorCode::kInvalidArgument);
}

TEST(LocalizeVideo, ExactFeaturesAreAccurate) {
  SimulateSpec spec = SimulateSpec::defaults();
  spec.query_noise.pixel_noise_sigma_px = 0.0;
  spec.query_noise.outlier_fraction = 0.0;
  const Simulation sim = simulate(spec);
  const auto frames = localize_video(sim.query.frames, sim.model, sim.phantom.mesh, spec.camera, {});
  ASSERT_EQ(frames.size(), sim.query_trajectory.size());
  std::size_t accepted = 0;
  double err = 0.0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    EXPECT_EQ(frames[i].frame_id, sim.query_trajectory[i].frame_id);
    if (frames[i].status != FrameStatus::kAccepted) continue;
    ++accepted;
    err += (*frames[i].position() - sim.query_trajectory[i].center()).norm();
  }
  EXPECT_GE(accepted, frames.size() * 95 / 100);
  EXPECT_LT(err / static_cast<double>(accepted), 1.0);
}

TEST(LocalizeVideo, RandomDescriptorsAreUnlocalized) {
  const Simulation sim = simulate(SimulateSpec::defaults());
  std::vector<QueryFrame> query(sim.query.frames.begin(), sim.query.frames.begin() + 40);
  Rng rng(14);
  for (QueryFrame& q : query) {
    for (auto& x : q.global_descriptor) x = rng.normal();
    q.global_descriptor.normalize();
    for (Eigen::Index i = 0; i < q.keypoints.descriptors.rows(); ++i) {
      for (Eigen::Index j = 0; j < q.keypoints.descriptors.cols(); ++j) {
        q.keypoints.descriptors(i, j) = static_cast<float>(rng.normal());
      }
      q.keypoints.descriptors.row(i).normalize();
    }
  }
  const auto frames = localize_video(query, sim.model, sim.phantom.mesh, SimulateSpec::defaults().camera, {});
  ASSERT_EQ(frames.size(), query.size());
  for (const LocalizedFrame& f : frames) {
    EXPECT_EQ(f.status, FrameStatus::kUnlocalized);
    EXPECT_FALSE(f.cam_from_world);
  }
}

}  // namespace
}  // namespace calyx
