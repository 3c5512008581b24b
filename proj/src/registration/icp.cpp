#include <cmath>
#include <string>

#include "calyx/error.hpp"
#include "calyx/kd_tree.hpp"
#include "calyx/registration.hpp"

namespace calyx {

void IcpParams::validate() const {
  if (max_iterations <= 0 || !(convergence_delta_mm > 0.0) || !(correspondence_cutoff_mm > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "ICP parameters must be positive");
  }
}

namespace {

struct Correspondences {
  std::vector<std::uint32_t> target_index;
  std::vector<double> distance_sq;
  std::size_t inliers = 0;
  double residual = 0.0;
};

Correspondences correspond(std::span<const Vec3> source, const KdTree& tree,
                           const RigidTransform& t, double cutoff) {
  const auto n = static_cast<std::int64_t>(source.size());
  Correspondences c;
  c.target_index.resize(source.size());
  c.distance_sq.resize(source.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto nn = tree.nearest(t.apply(source[static_cast<std::size_t>(i)]));
    c.target_index[static_cast<std::size_t>(i)] = nn.index;
    c.distance_sq[static_cast<std::size_t>(i)] = nn.distance_sq;
  }
  // Fixed-order reduction keeps the residual independent of thread count.
  const double c2 = cutoff * cutoff;
  double sum = 0.0;
  for (double d2 : c.distance_sq) {
    if (d2 <= c2) {
      ++c.inliers;
      sum += d2;
    } else {
      sum += c2;
    }
  }
  c.residual = std::sqrt(sum / static_cast<double>(source.size()));
  return c;
}

}  // namespace

RegistrationResult icp_register(std::span<const Vec3> source, std::span<const Vec3> target,
                                const RigidTransform& init, const IcpParams& params) {
  params.validate();
  if (source.empty() || target.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "ICP needs non-empty source and target");
  }
  const KdTree tree(target);
  const double cutoff = params.correspondence_cutoff_mm;
  const double c2 = cutoff * cutoff;

  RegistrationResult result;
  result.transform = init;
  Correspondences corr = correspond(source, tree, init, cutoff);
  if (corr.inliers == 0) {
    throw Error(ErrorCode::kInitializationTooFar,
                "no correspondences within " + std::to_string(cutoff) + " mm of the initial pose");
  }
  result.mean_residual_mm = corr.residual;
  result.residual_history.push_back(corr.residual);
  result.inlier_count = corr.inliers;

  std::vector<Vec3> src;
  std::vector<Vec3> dst;
  for (int it = 1; it <= params.max_iterations; ++it) {
    if (corr.inliers < 3) break;
    src.clear();
    dst.clear();
    for (std::size_t i = 0; i < source.size(); ++i) {
      if (corr.distance_sq[i] <= c2) {
        src.push_back(source[i]);
        dst.push_back(target[corr.target_index[i]]);
      }
    }
    if (collinear(src)) break;
    const RigidTransform candidate = umeyama(src, dst, false).rigid();
    Correspondences next = correspond(source, tree, candidate, cutoff);
    // The truncated residual cannot grow in exact arithmetic; a rounding-level
    // increase means we are converged, so keep the previous pose.
    if (next.residual > corr.residual) break;
    const double improvement = corr.residual - next.residual;
    result.transform = candidate;
    result.mean_residual_mm = next.residual;
    result.residual_history.push_back(next.residual);
    result.iterations_used = it;
    result.inlier_count = next.inliers;
    corr = std::move(next);
    if (improvement < params.convergence_delta_mm) break;
  }
  return result;
}

}  // namespace calyx
