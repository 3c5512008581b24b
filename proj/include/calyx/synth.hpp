#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "calyx/features.hpp"
#include "calyx/geometry.hpp"
#include "calyx/labeled_mesh.hpp"
#include "calyx/visitation.hpp"

// Procedural test data: tube-tree phantoms, ground-truth trajectories,
// synthetic features and naive oracles.
namespace calyx::synth {

struct PhantomSpec {
  int n_calyces = 6;
  double calyx_diameter_mm = 10.0;
  double calyx_depth_mm = 25.0;
  double pelvis_radius_mm = 15.0;
  /// Grid cells per calyx circumference; sets the mesh density.
  int mesh_resolution = 16;
  std::uint64_t seed = 1;

  void validate() const;
};

/// A calyx is a neck (infundibulum) leaving the pelvis along `direction`,
/// then a bend into the cup along `cup_direction`. Only the cup is labeled.
struct CalyxAxis {
  int id = 0;
  Vec3 direction = Vec3::UnitX();  // unit, neck axis from the pelvis centre
  double entry_mm = 0.0;           // where the neck axis leaves the pelvis
  Vec3 bend = Vec3::Zero();        // end of the neck, start of the cup
  Vec3 cup_direction = Vec3::UnitX();
  double cup_length_mm = 0.0;      // bend to the apex of the cap
  double radius_mm = 0.0;       // cup radius
  double neck_radius_mm = 0.0;

  Vec3 apex() const { return bend + cup_length_mm * cup_direction; }
};

/// Axes of the tube tree, all rooted at the pelvis centre.
struct Centerline {
  Vec3 pelvis_center = Vec3::Zero();
  Vec3 ureter_direction = -Vec3::UnitZ();
  std::vector<CalyxAxis> calyces;  // index i holds calyx id i + 1
};

struct Phantom {
  LabeledMesh mesh;
  Centerline centerline;
};

/// Watertight pelvis ellipsoid plus capsule calyces and a ureter stub, meshed
/// by marching tetrahedra. Throws GenerationFailed if the mesh cannot close.
Phantom generate_phantom(const PhantomSpec& spec);

struct TrajectorySpec {
  std::vector<int> visit_plan;  // calyx ids in order; empty stays in the pelvis
  double speed_mm_per_s = 20.0;
  double fps = 30.0;
  double dwell_s = 2.0;
  std::uint64_t seed = 1;
  /// Lateral offset of each excursion, as a fraction of calyx diameter.
  double max_lateral_offset = 0.2;

  void validate() const;
};

struct PosedFrame {
  std::int64_t frame_id = 0;
  double timestamp_s = 0.0;
  RigidTransform cam_from_world;
  int target_calyx = 0;  // calyx being entered, dwelt in or left; 0 in the pelvis

  Vec3 center() const { return camera_center(cam_from_world); }
};

/// From the pelvis centre into each planned calyx and back, looking along
/// the motion, with a dwell near each tip. Segment durations are rounded up
/// to whole frames so that no frame interval straddles a turn.
std::vector<PosedFrame> generate_trajectory(const Phantom& phantom, const TrajectorySpec& spec);

struct NoiseSpec {
  double pixel_noise_sigma_px = 0.0;
  double outlier_fraction = 0.0;
  int descriptor_dim = 64;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Surface points with a persistent unit descriptor each.
struct Landmarks {
  std::vector<Vec3> points;
  DescriptorMatrix descriptors;
};

Landmarks make_landmarks(const TriMesh& mesh, std::size_t count, int descriptor_dim,
                         std::uint64_t seed);

struct FeatureOptions {
  std::size_t max_keypoints = 200;
  /// Reference frames carry landmark ids; query frames carry kNoPoint.
  bool emit_point_ids = false;
  int grid_cells = 6;  // global descriptor histogram cells per axis
  VisibilityParams visibility;
};

struct SynthFeatures {
  std::vector<FrameFeatures> frames;
  /// Per frame and keypoint: true landmark id, or kNoPoint for outliers.
  std::vector<std::vector<std::int64_t>> truth;
  std::size_t empty_frames = 0;
};

SynthFeatures synthesize_features(const TriMesh& mesh, const Landmarks& landmarks,
                                  std::span<const PosedFrame> frames, const PinholeCamera& cam,
                                  const NoiseSpec& noise, const FeatureOptions& options = {});

/// Naive visibility: every vertex ray is tested against every face.
VertexSet brute_force_visibility(const TriMesh& mesh, const PinholeCamera& cam,
                                 const RigidTransform& cam_from_world,
                                 const VisibilityParams& params);

struct Perturbation {
  std::vector<PosedFrame> frames;
  std::vector<std::size_t> injected;  // sorted frame indices
};

/// Moves `count` random frames (never the first) by `distance_mm` in a
/// random direction.
Perturbation perturb_trajectory(std::span<const PosedFrame> frames, std::size_t count,
                                double distance_mm, std::uint64_t seed);

/// Outward-facing geodesic sphere centred at the origin.
TriMesh make_icosphere(double radius, int subdivisions);

}  // namespace calyx::synth
