#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "calyx/error.hpp"
#include "calyx/geometry.hpp"
#include "calyx/rng.hpp"
#include "calyx/tri_mesh.hpp"

namespace calyx::test {

#define EXPECT_CALYX_ERROR(stmt, expected_code)                              \
  do {                                                                       \
    try {                                                                    \
      stmt;                                                                  \
      ADD_FAILURE() << "expected " << ::calyx::to_string(expected_code);     \
    } catch (const ::calyx::Error& e) {                                      \
      EXPECT_EQ(e.code(), expected_code) << e.what();                        \
    }                                                                        \
  } while (false)

// Axis-aligned square [-h, h]^2 in the plane z, normal +z.
inline void add_square(std::vector<Vec3>& v, std::vector<Face>& f, double z, double h) {
  const auto base = static_cast<std::uint32_t>(v.size());
  v.insert(v.end(), {{-h, -h, z}, {h, -h, z}, {h, h, z}, {-h, h, z}});
  f.push_back({base, base + 1, base + 2});
  f.push_back({base, base + 2, base + 3});
}

inline TriMesh square_mesh(double z, double h = 0.5) {
  std::vector<Vec3> v;
  std::vector<Face> f;
  add_square(v, f, z, h);
  return TriMesh(std::move(v), std::move(f));
}

// Closed axis-aligned cube with outward faces.
inline TriMesh cube_mesh(double half = 0.5, const Vec3& center = Vec3::Zero()) {
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i) {
    v.push_back(center + half * Vec3(i & 1 ? 1 : -1, i & 2 ? 1 : -1, i & 4 ? 1 : -1));
  }
  std::vector<Face> f{{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                      {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return TriMesh(std::move(v), std::move(f));
}

inline Vec3 random_unit(Rng& rng) {
  Vec3 d;
  do {
    d = Vec3(rng.normal(), rng.normal(), rng.normal());
  } while (d.squaredNorm() < 1e-12);
  return d.normalized();
}

inline RigidTransform random_rigid(Rng& rng, double max_angle_rad, double max_shift) {
  return RigidTransform::from_axis_angle(random_unit(rng), rng.uniform(0.0, max_angle_rad),
                                         max_shift * rng.uniform() * random_unit(rng));
}

inline double translation_error(const RigidTransform& a, const RigidTransform& b) {
  return (camera_center(a) - camera_center(b)).norm();
}

// Fresh scratch directory per test, removed on destruction.
class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = std::filesystem::temp_directory_path() /
            ("calyx_" + std::string(info->test_suite_name()) + "_" + info->name());
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace calyx::test
