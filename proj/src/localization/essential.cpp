#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "calyx/localization.hpp"
#include "calyx/rng.hpp"

namespace calyx {

std::string_view to_string(PairRejection r) {
  switch (r) {
    case PairRejection::kNone: return "none";
    case PairRejection::kTooFewMatches: return "TooFewMatches";
    case PairRejection::kTooFewInliers: return "TooFewInliers";
    case PairRejection::kLowInlierRatio: return "LowInlierRatio";
  }
  return "unknown";
}

std::optional<Mat3> essential_eight_point(std::span<const Vec2> x1, std::span<const Vec2> x2) {
  if (x1.size() != x2.size() || x1.size() < 8) return std::nullopt;
  Eigen::Matrix<double, Eigen::Dynamic, 9> a(static_cast<Eigen::Index>(x1.size()), 9);
  for (std::size_t i = 0; i < x1.size(); ++i) {
    const double u1 = x1[i].x(), v1 = x1[i].y();
    const double u2 = x2[i].x(), v2 = x2[i].y();
    a.row(static_cast<Eigen::Index>(i)) << u2 * u1, u2 * v1, u2, v2 * u1, v2 * v1, v2, u1, v1, 1.0;
  }
  const Eigen::JacobiSVD<Eigen::Matrix<double, Eigen::Dynamic, 9>> svd(a, Eigen::ComputeFullV);
  const Eigen::Matrix<double, 9, 1> e = svd.matrixV().col(8);
  Mat3 raw;
  raw << e[0], e[1], e[2], e[3], e[4], e[5], e[6], e[7], e[8];
  if (!raw.allFinite()) return std::nullopt;

  // Nearest essential matrix: equal leading singular values, rank two.
  const Eigen::JacobiSVD<Mat3> esvd(raw, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 ess = esvd.matrixU() * Vec3(1.0, 1.0, 0.0).asDiagonal() * esvd.matrixV().transpose();
  return ess;
}

double sampson_distance(const Mat3& e, const Vec2& x1, const Vec2& x2) {
  const Vec3 p1(x1.x(), x1.y(), 1.0);
  const Vec3 p2(x2.x(), x2.y(), 1.0);
  const Vec3 ex1 = e * p1;
  const Vec3 etx2 = e.transpose() * p2;
  const double num = p2.dot(ex1);
  const double den = ex1.x() * ex1.x() + ex1.y() * ex1.y() + etx2.x() * etx2.x() + etx2.y() * etx2.y();
  if (!(den > 0.0)) return std::numeric_limits<double>::infinity();
  return std::abs(num) / std::sqrt(den);
}

namespace {

std::size_t adaptive_iterations(std::size_t inliers, std::size_t total, int sample_size,
                                double confidence, int max_iterations) {
  if (inliers == 0) return static_cast<std::size_t>(max_iterations);
  const double w = static_cast<double>(inliers) / static_cast<double>(total);
  const double p_good = std::pow(w, sample_size);
  if (p_good >= 1.0) return 1;
  const double n = std::log(1.0 - confidence) / std::log(1.0 - p_good);
  if (!std::isfinite(n) || n > max_iterations) return static_cast<std::size_t>(max_iterations);
  return static_cast<std::size_t>(std::ceil(n));
}

}  // namespace

EssentialVerification verify_pair_essential(std::span<const Match> matches,
                                            const Keypoints& query, const Keypoints& reference,
                                            const PinholeCamera& cam,
                                            const LocalizationParams& params, std::uint64_t seed) {
  EssentialVerification out;
  const std::size_t n = matches.size();
  out.inlier_mask.assign(n, false);
  if (n < 8) {
    out.reason = PairRejection::kTooFewMatches;
    return out;
  }

  std::vector<Vec2> x1(n);
  std::vector<Vec2> x2(n);
  for (std::size_t i = 0; i < n; ++i) {
    x1[i] = cam.normalize(query.pixels[matches[i].query]);
    x2[i] = cam.normalize(reference.pixels[matches[i].reference]);
  }
  const double threshold = params.essential_sampson_threshold_px / cam.mean_focal();

  auto score = [&](const Mat3& e) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) count += sampson_distance(e, x1[i], x2[i]) < threshold;
    return count;
  };

  Rng rng(seed);
  std::optional<Mat3> best;
  std::size_t best_count = 0;
  std::size_t needed = static_cast<std::size_t>(params.ransac_iterations);
  std::array<Vec2, 8> s1;
  std::array<Vec2, 8> s2;
  for (std::size_t it = 0; it < needed; ++it) {
    const auto idx = rng.sample_indices(n, 8);
    for (int k = 0; k < 8; ++k) {
      s1[k] = x1[idx[k]];
      s2[k] = x2[idx[k]];
    }
    const auto e = essential_eight_point(s1, s2);
    if (!e) continue;
    const std::size_t count = score(*e);
    if (count > best_count) {
      best_count = count;
      best = *e;
      needed = std::min(needed, adaptive_iterations(count, n, 8, params.ransac_confidence,
                                                    params.ransac_iterations));
    }
  }

  if (best && best_count >= 8) {
    // Least-squares refit on the consensus set; kept only if it does not lose support.
    std::vector<Vec2> r1;
    std::vector<Vec2> r2;
    for (std::size_t i = 0; i < n; ++i) {
      if (sampson_distance(*best, x1[i], x2[i]) < threshold) {
        r1.push_back(x1[i]);
        r2.push_back(x2[i]);
      }
    }
    if (const auto refit = essential_eight_point(r1, r2)) {
      if (score(*refit) >= best_count) best = *refit;
    }
  }

  if (best) {
    out.essential = *best;
    for (std::size_t i = 0; i < n; ++i) {
      out.inlier_mask[i] = sampson_distance(*best, x1[i], x2[i]) < threshold;
      out.inlier_count += out.inlier_mask[i];
    }
  }
  out.inlier_ratio = static_cast<double>(out.inlier_count) / static_cast<double>(n);

  if (n < params.min_match_count) {
    out.reason = PairRejection::kTooFewMatches;
  } else if (out.inlier_count < params.min_inlier_count) {
    out.reason = PairRejection::kTooFewInliers;
  } else if (out.inlier_ratio < params.min_inlier_ratio) {
    out.reason = PairRejection::kLowInlierRatio;
  } else {
    out.accepted = true;
  }
  return out;
}

}  // namespace calyx
