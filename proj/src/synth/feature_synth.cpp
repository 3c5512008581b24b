#include <algorithm>
#include <cmath>

#include "calyx/error.hpp"
#include "calyx/rng.hpp"
#include "calyx/synth.hpp"
#include "calyx/tri_mesh.hpp"

namespace calyx::synth {

void NoiseSpec::validate() const {
  if (!(pixel_noise_sigma_px >= 0.0) || !(outlier_fraction >= 0.0 && outlier_fraction < 1.0) ||
      descriptor_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "invalid noise spec");
  }
}

namespace {

void random_unit_row(Rng& rng, DescriptorMatrix& m, Eigen::Index row) {
  double norm2 = 0.0;
  Eigen::VectorXd v(m.cols());
  do {
    for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = rng.normal();
    norm2 = v.squaredNorm();
  } while (norm2 < 1e-12);
  m.row(row) = (v / std::sqrt(norm2)).cast<float>().transpose();
}

}  // namespace

Landmarks make_landmarks(const TriMesh& mesh, std::size_t count, int descriptor_dim,
                         std::uint64_t seed) {
  if (mesh.empty() || descriptor_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "landmarks need a non-empty mesh");
  }
  std::vector<double> cumulative(mesh.face_count());
  double total = 0.0;
  for (std::uint32_t f = 0; f < mesh.face_count(); ++f) {
    total += mesh.face_area(f);
    cumulative[f] = total;
  }
  Rng rng(seed);
  Landmarks out;
  out.points.reserve(count);
  out.descriptors.resize(static_cast<Eigen::Index>(count), descriptor_dim);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = rng.uniform() * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
    const auto f = static_cast<std::uint32_t>(std::min<std::ptrdiff_t>(
        it - cumulative.begin(), static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
    const auto [a, b, c] = mesh.triangle(f);
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    out.points.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
    random_unit_row(rng, out.descriptors, static_cast<Eigen::Index>(i));
  }
  return out;
}

SynthFeatures synthesize_features(const TriMesh& mesh, const Landmarks& landmarks,
                                  std::span<const PosedFrame> frames, const PinholeCamera& cam,
                                  const NoiseSpec& noise, const FeatureOptions& options) {
  noise.validate();
  cam.validate();
  if (landmarks.descriptors.cols() != noise.descriptor_dim) {
    throw Error(ErrorCode::kDimensionMismatch, "landmark descriptors differ from descriptor_dim");
  }
  const auto [lo, hi] = bounds(mesh.vertices());
  const Vec3 extent = (hi - lo).cwiseMax(Vec3::Constant(1e-9));
  const int g = options.grid_cells;
  const Eigen::Index gdim = static_cast<Eigen::Index>(g) * g * g;

  SynthFeatures out;
  out.frames.resize(frames.size());
  out.truth.resize(frames.size());
  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    const PosedFrame& pf = frames[fi];
    const Vec3 center = pf.center();
    Rng rng(combine_seed(noise.seed, static_cast<std::uint64_t>(pf.frame_id)));

    std::vector<std::size_t> visible;
    std::vector<Vec2> pixels;
    for (std::size_t l = 0; l < landmarks.points.size(); ++l) {
      const Vec3& p = landmarks.points[l];
      const auto px = project(cam, pf.cam_from_world.apply(p));
      if (!px || !cam.in_image(*px)) continue;
      const double d = (p - center).norm();
      if (d > options.visibility.max_view_distance_mm) continue;
      if (occluded(mesh, Ray::through(center, p), d - options.visibility.occlusion_epsilon_mm)) continue;
      visible.push_back(l);
      pixels.push_back(*px);
    }

    FrameFeatures& ff = out.frames[fi];
    ff.frame_id = pf.frame_id;
    ff.timestamp_s = pf.timestamp_s;
    ff.global_descriptor = Eigen::VectorXd::Zero(gdim);
    for (std::size_t l : visible) {
      const Vec3 rel = (landmarks.points[l] - lo).cwiseQuotient(extent) * g;
      std::array<int, 3> cell{};
      for (int a = 0; a < 3; ++a) cell[static_cast<std::size_t>(a)] = std::clamp(static_cast<int>(rel[a]), 0, g - 1);
      ff.global_descriptor[(cell[2] * g + cell[1]) * g + cell[0]] += 1.0;
    }
    if (visible.empty()) {
      ff.global_descriptor.setOnes();
      ++out.empty_frames;
    }
    ff.global_descriptor.normalize();

    std::vector<std::size_t> chosen(visible.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) chosen[i] = i;
    if (chosen.size() > options.max_keypoints) {
      chosen = rng.sample_indices(visible.size(), options.max_keypoints);
      std::sort(chosen.begin(), chosen.end());
    }
    const std::size_t n = chosen.size();
    Keypoints& k = ff.keypoints;
    k.pixels.resize(n);
    k.point_ids.resize(n);
    k.descriptors.resize(static_cast<Eigen::Index>(n), noise.descriptor_dim);
    std::vector<std::int64_t>& truth = out.truth[fi];
    truth.resize(n);
    const double u_max = std::nextafter(static_cast<double>(cam.width), 0.0);
    const double v_max = std::nextafter(static_cast<double>(cam.height), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t l = visible[chosen[i]];
      Vec2 px = pixels[chosen[i]];
      if (noise.pixel_noise_sigma_px > 0.0) {
        px.x() += noise.pixel_noise_sigma_px * rng.normal();
        px.y() += noise.pixel_noise_sigma_px * rng.normal();
        px = Vec2(std::clamp(px.x(), 0.0, u_max), std::clamp(px.y(), 0.0, v_max));
      }
      k.pixels[i] = px;
      k.descriptors.row(static_cast<Eigen::Index>(i)) = landmarks.descriptors.row(static_cast<Eigen::Index>(l));
      truth[i] = static_cast<std::int64_t>(l);
      k.point_ids[i] = options.emit_point_ids ? truth[i] : kNoPoint;
    }
    const auto n_out = static_cast<std::size_t>(std::llround(noise.outlier_fraction * static_cast<double>(n)));
    for (std::size_t i : rng.sample_indices(n, n_out)) {
      k.pixels[i] = Vec2(rng.uniform(0.0, cam.width), rng.uniform(0.0, cam.height));
      random_unit_row(rng, k.descriptors, static_cast<Eigen::Index>(i));
      truth[i] = kNoPoint;
      k.point_ids[i] = kNoPoint;
    }
  }
  return out;
}

}  // namespace calyx::synth
