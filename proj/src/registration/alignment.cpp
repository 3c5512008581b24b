#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

#include "calyx/error.hpp"
#include "calyx/registration.hpp"
#include "calyx/rng.hpp"

namespace calyx {

bool collinear(std::span<const Vec3> points, double tolerance) {
  if (points.size() < 3) return true;
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : points) cov += (p - mean) * (p - mean).transpose();
  const Eigen::JacobiSVD<Mat3> svd(cov);
  const Vec3 s = svd.singularValues();
  // Second principal variance vanishing relative to the first.
  return !(s[0] > 0.0) || s[1] <= tolerance * s[0];
}

SimilarityTransform umeyama(std::span<const Vec3> source, std::span<const Vec3> target,
                            bool with_scale) {
  if (source.size() != target.size() || source.size() < 3) {
    throw Error(ErrorCode::kDegenerateFiducials, "need at least 3 point pairs");
  }
  const double n = static_cast<double>(source.size());
  Vec3 mu_s = Vec3::Zero();
  Vec3 mu_t = Vec3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    mu_s += source[i];
    mu_t += target[i];
  }
  mu_s /= n;
  mu_t /= n;

  Mat3 cov = Mat3::Zero();
  double var_s = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vec3 ds = source[i] - mu_s;
    cov += (target[i] - mu_t) * ds.transpose();
    var_s += ds.squaredNorm();
  }
  cov /= n;
  var_s /= n;

  const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) d(2, 2) = -1.0;
  const Mat3 r = svd.matrixU() * d * svd.matrixV().transpose();
  double scale = 1.0;
  if (with_scale) {
    if (!(var_s > 0.0)) throw Error(ErrorCode::kDegenerateFiducials, "source points coincide");
    scale = (svd.singularValues().asDiagonal() * d).trace() / var_s;
  }
  const Vec3 t = mu_t - scale * (r * mu_s);
  return {RigidTransform(r, t), scale};
}

AlignmentResult align_fiducials_robust(std::span<const FiducialPair> pairs,
                                       const AlignmentParams& params) {
  if (pairs.size() < 3) {
    throw Error(ErrorCode::kDegenerateFiducials,
                std::to_string(pairs.size()) + " fiducial pairs (need >= 3)");
  }
  std::vector<Vec3> src;
  std::vector<Vec3> dst;
  src.reserve(pairs.size());
  dst.reserve(pairs.size());
  for (const FiducialPair& p : pairs) {
    src.push_back(p.source);
    dst.push_back(p.target);
  }
  if (collinear(src)) throw Error(ErrorCode::kDegenerateFiducials, "fiducials are collinear");

  const double thr2 = params.inlier_threshold_mm * params.inlier_threshold_mm;
  auto inliers_of = [&](const SimilarityTransform& t, std::vector<bool>& mask) {
    std::size_t count = 0;
    mask.assign(pairs.size(), false);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if ((t.apply(src[i]) - dst[i]).squaredNorm() < thr2) {
        mask[i] = true;
        ++count;
      }
    }
    return count;
  };

  Rng rng(params.seed);
  std::vector<bool> best_mask;
  std::size_t best_count = 0;
  std::vector<bool> mask;
  for (int it = 0; it < params.ransac_iterations && pairs.size() > 3; ++it) {
    const auto idx = rng.sample_indices(pairs.size(), 3);
    const std::array<Vec3, 3> s{src[idx[0]], src[idx[1]], src[idx[2]]};
    const std::array<Vec3, 3> t{dst[idx[0]], dst[idx[1]], dst[idx[2]]};
    if (collinear(s, 1e-6)) continue;
    const SimilarityTransform model = umeyama(s, t, params.with_scale);
    const std::size_t count = inliers_of(model, mask);
    if (count > best_count) {
      best_count = count;
      best_mask = mask;
      if (count == pairs.size()) break;
    }
  }

  std::vector<Vec3> fit_src;
  std::vector<Vec3> fit_dst;
  if (best_count >= 3) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (best_mask[i]) {
        fit_src.push_back(src[i]);
        fit_dst.push_back(dst[i]);
      }
    }
  }
  if (fit_src.size() < 3 || collinear(fit_src)) {
    fit_src = src;
    fit_dst = dst;
    best_mask.assign(pairs.size(), true);
  }
  AlignmentResult result{umeyama(fit_src, fit_dst, params.with_scale), {}};
  inliers_of(result.transform, result.inliers);
  return result;
}

DistanceStats target_registration_error(const SimilarityTransform& t,
                                        std::span<const FiducialPair> held_out) {
  if (held_out.empty()) throw Error(ErrorCode::kInvalidArgument, "empty held-out set");
  std::vector<double> d;
  d.reserve(held_out.size());
  for (const FiducialPair& p : held_out) d.push_back((t.apply(p.source) - p.target).norm());
  DistanceStats s;
  s.count = d.size();
  for (double x : d) s.mean += x;
  s.mean /= static_cast<double>(d.size());
  for (double x : d) s.stddev += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(d.size()));
  return s;
}

}  // namespace calyx
