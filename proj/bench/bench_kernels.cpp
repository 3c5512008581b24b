// Accelerated and parallel kernels against their serial reference versions.
#include <benchmark/benchmark.h>

#include "calyx/metrics.hpp"
#include "calyx/rng.hpp"
#include "calyx/synth.hpp"
#include "calyx/visitation.hpp"

namespace {

using namespace calyx;

const synth::Phantom& phantom() {
  static const synth::Phantom p = synth::generate_phantom({});
  return p;
}

std::vector<Ray> random_rays(std::size_t n) {
  const auto [lo, hi] = bounds(phantom().mesh.mesh().vertices());
  Rng rng(1);
  std::vector<Ray> rays;
  while (rays.size() < n) {
    const Vec3 o(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()), rng.uniform(lo.z(), hi.z()));
    const Vec3 d(rng.normal(), rng.normal(), rng.normal());
    if (d.squaredNorm() > 1e-12) rays.push_back({o, d.normalized()});
  }
  return rays;
}

void BM_RayCastBvh(benchmark::State& state) {
  const auto rays = random_rays(256);
  const TriMesh& mesh = phantom().mesh.mesh();
  for (auto _ : state) {
    for (const Ray& r : rays) benchmark::DoNotOptimize(ray_cast(mesh, r));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rays.size()));
}
BENCHMARK(BM_RayCastBvh);

void BM_RayCastNaive(benchmark::State& state) {
  const auto rays = random_rays(256);
  const TriMesh& mesh = phantom().mesh.mesh();
  for (auto _ : state) {
    for (const Ray& r : rays) benchmark::DoNotOptimize(reference::ray_cast_naive(mesh, r));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rays.size()));
}
BENCHMARK(BM_RayCastNaive);

RigidTransform pelvis_pose() {
  return look_along(phantom().centerline.pelvis_center, phantom().centerline.calyces[0].direction,
                    Vec3::UnitZ());
}

const PinholeCamera kCam{200.0, 200.0, 160.0, 160.0, 320, 320};

void BM_VisibleVertices(benchmark::State& state) {
  const RigidTransform pose = pelvis_pose();
  for (auto _ : state) benchmark::DoNotOptimize(visible_vertices(phantom().mesh, kCam, pose, {}));
}
BENCHMARK(BM_VisibleVertices)->Unit(benchmark::kMillisecond);

void BM_VisibleVerticesBruteForce(benchmark::State& state) {
  const RigidTransform pose = pelvis_pose();
  for (auto _ : state) {
    benchmark::DoNotOptimize(synth::brute_force_visibility(phantom().mesh.mesh(), kCam, pose, {}));
  }
}
BENCHMARK(BM_VisibleVerticesBruteForce)->Unit(benchmark::kMillisecond);

std::vector<Vec3> query_points() {
  return synth::make_landmarks(phantom().mesh.mesh(), 2000, 4, 2).points;
}

void BM_DistancesParallel(benchmark::State& state) {
  const auto pts = query_points();
  for (auto _ : state) benchmark::DoNotOptimize(point_to_mesh_distances(pts, phantom().mesh.mesh()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pts.size()));
}
BENCHMARK(BM_DistancesParallel)->Unit(benchmark::kMillisecond);

void BM_DistancesSerial(benchmark::State& state) {
  const auto pts = query_points();
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::point_to_mesh_distances_serial(pts, phantom().mesh.mesh()));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pts.size()));
}
BENCHMARK(BM_DistancesSerial)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
