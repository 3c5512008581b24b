#include <algorithm>
#include <limits>
#include <string>

#include "calyx/error.hpp"
#include "calyx/localization.hpp"

namespace calyx {

void LocalizationParams::validate() const {
  const bool ok = retrieval_k > 0 && min_match_count > 0 && min_inlier_count > 0 &&
                  min_inlier_ratio > 0.0 && min_inlier_ratio <= 1.0 &&
                  essential_sampson_threshold_px > 0.0 && pnp_reprojection_threshold_px > 0.0 &&
                  ransac_iterations > 0 && ransac_confidence > 0.0 && ransac_confidence < 1.0 &&
                  match_ratio > 0.0 && match_ratio <= 1.0 && v_max_mm_per_s > 0.0;
  if (!ok) throw Error(ErrorCode::kInvalidArgument, "invalid localization parameters");
}

std::vector<Candidate> retrieve_candidates(const Eigen::VectorXd& query_descriptor,
                                           const ReferenceModel& model, std::size_t k) {
  std::vector<Candidate> all;
  all.reserve(model.frames.size());
  const double qn = query_descriptor.norm();
  for (std::size_t i = 0; i < model.frames.size(); ++i) {
    const auto& f = model.frames[i].features;
    if (f.global_descriptor.size() != query_descriptor.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "query descriptor has " + std::to_string(query_descriptor.size()) +
                      " dims, reference " + std::to_string(f.global_descriptor.size()));
    }
    const double rn = f.global_descriptor.norm();
    const double sim = (qn > 0.0 && rn > 0.0) ? query_descriptor.dot(f.global_descriptor) / (qn * rn)
                                              : 0.0;
    all.push_back({i, f.frame_id, sim});
  }
  const auto by_rank = [](const Candidate& a, const Candidate& b) {
    return a.similarity > b.similarity || (a.similarity == b.similarity && a.frame_id < b.frame_id);
  };
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), by_rank);
  all.resize(keep);
  return all;
}

std::vector<Match> match_descriptors(const Keypoints& query, const Keypoints& reference,
                                     double ratio) {
  std::vector<Match> matches;
  if (query.empty() || reference.empty()) return matches;
  if (query.descriptor_dim() != reference.descriptor_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "local descriptor sizes differ");
  }
  const Eigen::Index nq = query.descriptors.rows();
  const Eigen::Index nr = reference.descriptors.rows();
  // Squared distances via |a|^2 + |b|^2 - 2ab, in double for stable ties.
  const Eigen::MatrixXd q = query.descriptors.cast<double>();
  const Eigen::MatrixXd r = reference.descriptors.cast<double>();
  const Eigen::VectorXd qn = q.rowwise().squaredNorm();
  const Eigen::VectorXd rn = r.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * (q * r.transpose());
  d2.colwise() += qn;
  d2.rowwise() += rn.transpose();
  d2 = d2.cwiseMax(0.0);

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Index> best_q_for_r(static_cast<std::size_t>(nr), -1);
  std::vector<double> best_q_dist(static_cast<std::size_t>(nr), kInf);
  for (Eigen::Index i = 0; i < nq; ++i) {
    for (Eigen::Index j = 0; j < nr; ++j) {
      if (d2(i, j) < best_q_dist[static_cast<std::size_t>(j)]) {
        best_q_dist[static_cast<std::size_t>(j)] = d2(i, j);
        best_q_for_r[static_cast<std::size_t>(j)] = i;
      }
    }
  }
  const double ratio2 = ratio * ratio;
  for (Eigen::Index i = 0; i < nq; ++i) {
    double best = kInf;
    double second = kInf;
    Eigen::Index best_j = -1;
    for (Eigen::Index j = 0; j < nr; ++j) {
      const double d = d2(i, j);
      if (d < best) {
        second = best;
        best = d;
        best_j = j;
      } else if (d < second) {
        second = d;
      }
    }
    if (best_j < 0 || best_q_for_r[static_cast<std::size_t>(best_j)] != i) continue;
    if (!(best < ratio2 * second)) continue;
    matches.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(best_j)});
  }
  return matches;
}

}  // namespace calyx
