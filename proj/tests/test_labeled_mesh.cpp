#include <fstream>
#include <sstream>

#include "calyx/labeled_mesh.hpp"
#include "calyx/synth.hpp"
#include "test_util.hpp"

namespace calyx {
namespace {

// Icosphere (162 vertices) with the first `per_calyx` vertices per id.
LabeledMesh labeled_sphere(const std::vector<int>& ids, std::size_t per_calyx,
                           const LabelValidation& validation = {}) {
  TriMesh mesh = synth::make_icosphere(10.0, 2);
  std::vector<int> labels(mesh.vertex_count(), 0);
  std::size_t k = 0;
  for (int id : ids) {
    for (std::size_t i = 0; i < per_calyx; ++i) labels[k++] = id;
  }
  return LabeledMesh(std::move(mesh), std::move(labels), {}, validation);
}

TEST(LabeledMesh, ThreeCalyces) {
  const LabeledMesh m = labeled_sphere({1, 2, 3}, 50);
  EXPECT_EQ(m.calyx_count(), 3);
  EXPECT_EQ(m.calyx_ids(), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(m.calyx_vertex_count(2), 50u);
  EXPECT_EQ(m.unannotated_count(), m.mesh().vertex_count() - 150);
}

TEST(LabeledMesh, LabelCountMismatch) {
  TriMesh mesh = synth::make_icosphere(10.0, 1);
  std::vector<int> labels(mesh.vertex_count() - 1, 0);
  EXPECT_CALYX_ERROR(LabeledMesh(mesh, labels), ErrorCode::kLabelCountMismatch);
}

TEST(LabeledMesh, NonContiguousLabels) {
  EXPECT_CALYX_ERROR(labeled_sphere({1, 3}, 50), ErrorCode::kNonContiguousLabels);
}

TEST(LabeledMesh, NegativeLabelRejected) {
  TriMesh mesh = synth::make_icosphere(10.0, 1);
  std::vector<int> labels(mesh.vertex_count(), 0);
  labels[3] = -1;
  EXPECT_ANY_THROW(LabeledMesh(mesh, labels));
}

TEST(LabeledMesh, UndersizedCalyx) {
  EXPECT_CALYX_ERROR(labeled_sphere({1, 2}, 20), ErrorCode::kUndersizedCalyx);
  EXPECT_NO_THROW(labeled_sphere({1, 2}, 20, LabelValidation{10}));
}

TEST(CalyxSummaries, OneCalyx) {
  const auto s = calyx_summaries(labeled_sphere({1}, 100));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].calyx_id, 1);
  EXPECT_EQ(s[0].vertex_count, 100u);
}

TEST(CalyxSummaries, DefaultPhantomHasSix) {
  const auto s = calyx_summaries(synth::generate_phantom({}).mesh);
  EXPECT_EQ(s.size(), 6u);
}

TEST(CalyxSummaries, CentroidOfCoincidentVertices) {
  // Every calyx vertex sits at (1,1,1), one per disjoint triangle.
  std::vector<Vec3> v;
  std::vector<Face> f;
  for (std::uint32_t i = 0; i < 20; ++i) {
    v.push_back({1, 1, 1});
    v.push_back({1 + 0.1 * (i + 1), 0, 0});
    v.push_back({0, 1 + 0.1 * (i + 1), 0});
    f.push_back({3 * i, 3 * i + 1, 3 * i + 2});
  }
  std::vector<int> labels(v.size(), 0);
  for (std::size_t i = 0; i < v.size(); i += 3) labels[i] = 1;
  const LabeledMesh m(TriMesh(v, f), labels, {}, LabelValidation{1});
  const auto s = calyx_summaries(m);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_LT((s[0].centroid - Vec3(1, 1, 1)).norm(), 1e-12);
}

TEST(LabeledMeshIo, RoundTripIsBitExact) {
  const test::TempDir dir;
  synth::PhantomSpec spec;
  spec.n_calyces = 3;
  const LabeledMesh m = synth::generate_phantom(spec).mesh;
  save_labeled_mesh(dir / "a.ply", m);
  const LabeledMesh back = load_labeled_mesh(dir / "a.ply");
  ASSERT_EQ(back.mesh().vertex_count(), m.mesh().vertex_count());
  for (std::size_t i = 0; i < m.mesh().vertex_count(); ++i) {
    ASSERT_EQ(back.mesh().vertices()[i], m.mesh().vertices()[i]) << i;
  }
  EXPECT_TRUE(std::equal(back.labels().begin(), back.labels().end(), m.labels().begin()));
  EXPECT_EQ(back.calyx_names(), m.calyx_names());
  save_labeled_mesh(dir / "b.ply", back);
  std::stringstream a, b;
  a << std::ifstream(dir / "a.ply").rdbuf();
  b << std::ifstream(dir / "b.ply").rdbuf();
  EXPECT_EQ(a.str(), b.str());
}

TEST(LabeledMeshIo, VisitedFlagsAreOptional) {
  const test::TempDir dir;
  const LabeledMesh m = labeled_sphere({1}, 60);
  std::vector<bool> visited(m.mesh().vertex_count(), false);
  visited[0] = true;
  save_labeled_mesh(dir / "v.ply", m, &visited);
  const LabeledMesh back = load_labeled_mesh(dir / "v.ply");
  EXPECT_EQ(back.calyx_count(), 1);
  std::vector<bool> short_flags(3, true);
  EXPECT_CALYX_ERROR(save_labeled_mesh(dir / "w.ply", m, &short_flags), ErrorCode::kInvalidArgument);
}

TEST(LabeledMeshIo, MalformedFiles) {
  const test::TempDir dir;
  const auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream(dir / name) << body;
    return dir / name;
  };
  EXPECT_CALYX_ERROR(load_labeled_mesh(write("a.ply", "plyx\n")), ErrorCode::kParseError);
  EXPECT_CALYX_ERROR(load_labeled_mesh(write("b.ply",
                                             "ply\nformat ascii 1.0\nelement vertex 2\n"
                                             "property double x\nproperty double y\nproperty double z\n"
                                             "property int calyx_id\nend_header\n0 0 0 0\n")),
                     ErrorCode::kParseError);
  EXPECT_CALYX_ERROR(load_labeled_mesh(write("c.ply",
                                             "ply\nformat ascii 1.0\nelement vertex 1\n"
                                             "property double x\nproperty double y\nproperty double z\n"
                                             "end_header\n0 0 0\n")),
                     ErrorCode::kParseError);
  EXPECT_CALYX_ERROR(load_labeled_mesh(dir / "missing.ply"), ErrorCode::kIoError);
}

TEST(PointCloudIo, RoundTrip) {
  const test::TempDir dir;
  Rng rng(3);
  PointCloud pts;
  for (int i = 0; i < 100; ++i) pts.emplace_back(rng.normal(), rng.normal() * 1e-7, rng.normal() * 1e5);
  save_point_cloud(dir / "p.ply", pts);
  EXPECT_EQ(load_point_cloud(dir / "p.ply"), pts);
}

}  // namespace
}  // namespace calyx
