#include "calyx/synth.hpp"
#include "test_util.hpp"

namespace calyx {
namespace {

using test::cube_mesh;
using test::square_mesh;

TEST(RayCast, SquareAhead) {
  const auto hit = ray_cast(square_mesh(5.0), {Vec3::Zero(), Vec3::UnitZ()});
  ASSERT_TRUE(hit);
  EXPECT_NEAR(hit->distance, 5.0, 1e-12);
}

TEST(RayCast, SquareBehind) {
  EXPECT_FALSE(ray_cast(square_mesh(5.0), {Vec3::Zero(), -Vec3::UnitZ()}));
}

TEST(RayCast, NearestOfTwoSquares) {
  std::vector<Vec3> v;
  std::vector<Face> f;
  test::add_square(v, f, 7.0, 0.5);
  test::add_square(v, f, 3.0, 0.5);
  const TriMesh mesh(std::move(v), std::move(f));
  const auto hit = ray_cast(mesh, {Vec3(0.1, 0.2, 0.0), Vec3::UnitZ()});
  ASSERT_TRUE(hit);
  EXPECT_NEAR(hit->distance, 3.0, 1e-12);
  EXPECT_GE(hit->face, 2u);
}

TEST(RayCast, IgnoresSelfHitAtOrigin) {
  const TriMesh mesh = square_mesh(0.0);
  EXPECT_FALSE(ray_cast(mesh, {Vec3(0.1, 0.1, 0.0), Vec3::UnitZ()}));
}

TEST(RayCast, CoincidentFacesTieToLowestIndex) {
  std::vector<Vec3> v;
  std::vector<Face> f;
  test::add_square(v, f, 2.0, 1.0);
  test::add_square(v, f, 2.0, 1.0);
  const TriMesh mesh(std::move(v), std::move(f));
  const Ray ray{Vec3(0.3, -0.2, 0.0), Vec3::UnitZ()};
  const auto hit = ray_cast(mesh, ray);
  const auto naive = reference::ray_cast_naive(mesh, ray);
  ASSERT_TRUE(hit && naive);
  EXPECT_EQ(*hit, *naive);
  EXPECT_LT(hit->face, 2u);
}

TEST(RayCast, BvhMatchesNaiveOnRandomRays) {
  synth::PhantomSpec spec;
  const TriMesh mesh = synth::generate_phantom(spec).mesh.mesh();
  Rng rng(11);
  const auto [lo, hi] = bounds(mesh.vertices());
  int hits = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 o(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()), rng.uniform(lo.z(), hi.z()));
    const Ray ray{o, test::random_unit(rng)};
    const auto a = ray_cast(mesh, ray);
    const auto b = reference::ray_cast_naive(mesh, ray);
    ASSERT_EQ(a.has_value(), b.has_value()) << "ray " << i;
    if (a) {
      EXPECT_EQ(*a, *b) << "ray " << i;
      ++hits;
    }
    EXPECT_EQ(count_crossings(mesh, ray), reference::count_crossings_naive(mesh, ray));
  }
  EXPECT_GT(hits, 100);
}

TEST(RayCast, OccludedAgreesWithNearestHit) {
  const TriMesh mesh = synth::make_icosphere(10.0, 2);
  Rng rng(12);
  for (int i = 0; i < 300; ++i) {
    const Ray ray{Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)), test::random_unit(rng)};
    const double maxd = rng.uniform(0.0, 20.0);
    const auto hit = reference::ray_cast_naive(mesh, ray);
    EXPECT_EQ(occluded(mesh, ray, maxd), hit && hit->distance < maxd);
  }
}

TEST(TriMesh, RejectsBadFaces) {
  std::vector<Vec3> v{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  EXPECT_CALYX_ERROR(TriMesh(v, {{0, 1, 2}}), ErrorCode::kDegenerateMesh);
  EXPECT_ANY_THROW(TriMesh(v, {{0, 1, 7}}));
}

TEST(TriMesh, Watertightness) {
  EXPECT_TRUE(cube_mesh().is_watertight());
  EXPECT_TRUE(synth::make_icosphere(1.0, 1).is_watertight());
  EXPECT_FALSE(square_mesh(0.0).is_watertight());
}

TEST(PointInside, CubeExamples) {
  const TriMesh cube = cube_mesh();
  EXPECT_TRUE(point_inside(cube, Vec3::Zero()));
  EXPECT_FALSE(point_inside(cube, Vec3(2, 0, 0)));
  EXPECT_TRUE(point_inside(cube, Vec3(0.5, 0, 0)));
  EXPECT_TRUE(point_inside(cube, Vec3(0.5 + 0.5 * kEpsilonSurface, 0, 0)));
  EXPECT_FALSE(point_inside(cube, Vec3(0.5 + 2 * kEpsilonSurface, 0, 0)));
}

TEST(PointInside, OpenMeshThrows) {
  EXPECT_CALYX_ERROR(point_inside(square_mesh(0.0), Vec3::Zero()), ErrorCode::kWatertightnessRequired);
}

TEST(PointInside, ProbeDirectionInvariant) {
  const TriMesh mesh = synth::generate_phantom({}).mesh.mesh();
  const auto [lo, hi] = bounds(mesh.vertices());
  Rng rng(13);
  const Vec3 probes[] = {default_probe_direction(), Vec3(0.267, -0.534, 0.802).normalized(),
                         Vec3(-0.7, 0.1, -0.707).normalized()};
  int inside = 0;
  for (int i = 0; i < 500; ++i) {
    const Vec3 p(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()), rng.uniform(lo.z(), hi.z()));
    const bool a = point_inside(mesh, p, probes[0]);
    EXPECT_EQ(a, point_inside(mesh, p, probes[1])) << p.transpose();
    EXPECT_EQ(a, point_inside(mesh, p, probes[2])) << p.transpose();
    inside += a;
  }
  EXPECT_GT(inside, 10);
}

TEST(ClosestPoint, MatchesNaiveScan) {
  const TriMesh mesh = synth::make_icosphere(8.0, 2);
  Rng rng(14);
  for (int i = 0; i < 300; ++i) {
    const Vec3 p(rng.uniform(-15, 15), rng.uniform(-15, 15), rng.uniform(-15, 15));
    const ClosestPoint c = closest_point(mesh, p);
    EXPECT_NEAR(c.distance, reference::distance_naive(mesh, p), 1e-12);
    EXPECT_NEAR((c.point - p).norm(), c.distance, 1e-9);
  }
}

TEST(ClosestPoint, TriangleRegions) {
  const Vec3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
  EXPECT_LT((closest_point_on_triangle({0.2, 0.2, 3}, a, b, c) - Vec3(0.2, 0.2, 0)).norm(), 1e-15);
  EXPECT_LT((closest_point_on_triangle({-1, -1, 0}, a, b, c) - a).norm(), 1e-15);
  EXPECT_LT((closest_point_on_triangle({2, 2, 0}, a, b, c) - Vec3(0.5, 0.5, 0)).norm(), 1e-15);
}

}  // namespace
}  // namespace calyx
