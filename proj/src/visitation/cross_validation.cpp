#include <cmath>
#include <numeric>
#include <string>

#include "calyx/error.hpp"
#include "calyx/rng.hpp"
#include "calyx/visitation.hpp"

namespace calyx {

namespace {

double mean(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

double fold_threshold(std::span<const double> visited_scores,
                      std::span<const double> missed_scores) {
  if (visited_scores.empty() || missed_scores.empty()) {
    throw Error(ErrorCode::kDegenerateFold,
                visited_scores.empty() ? "no visited calyces" : "no missed calyces");
  }
  return 0.5 * (mean(visited_scores) + mean(missed_scores));
}

CrossValidationResult cross_validate(std::span<const AnnotatedVideo> videos, int k, int repeats,
                                     std::uint64_t seed) {
  if (k < 2 || repeats < 1 || videos.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::kInvalidArgument, "need k >= 2, repeats >= 1 and at least k videos");
  }
  for (const AnnotatedVideo& v : videos) {
    bool same_keys = v.visited.size() == v.scores.size();
    for (const auto& [id, label] : v.visited) same_keys = same_keys && v.scores.count(id) == 1;
    if (!same_keys) {
      throw Error(ErrorCode::kInvalidArgument, "video " + v.video_id + " labels and scores differ");
    }
  }

  CrossValidationResult out;
  const std::size_t n = videos.size();
  const auto folds = static_cast<std::size_t>(k);
  for (int r = 0; r < repeats; ++r) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(combine_seed(seed, static_cast<std::uint64_t>(r)));
    rng.shuffle(std::span<std::size_t>(order));

    std::size_t repeat_correct = 0;
    std::size_t repeat_total = 0;
    for (std::size_t f = 0; f < folds; ++f) {
      const std::size_t lo = f * n / folds;
      const std::size_t hi = (f + 1) * n / folds;
      std::vector<double> vis;
      std::vector<double> mis;
      for (std::size_t i = 0; i < n; ++i) {
        if (i >= lo && i < hi) continue;
        const AnnotatedVideo& v = videos[order[i]];
        for (const auto& [id, label] : v.visited) (label ? vis : mis).push_back(v.scores.at(id));
      }
      FoldResult fr;
      fr.repeat = r;
      fr.fold = static_cast<int>(f);
      try {
        fr.threshold = fold_threshold(vis, mis);
      } catch (const Error& e) {
        throw Error(ErrorCode::kDegenerateFold, "repeat " + std::to_string(r) + " fold " +
                                                    std::to_string(f) + ": " + e.what());
      }
      for (std::size_t i = lo; i < hi; ++i) {
        const AnnotatedVideo& v = videos[order[i]];
        for (const auto& [id, label] : v.visited) {
          fr.correct += (v.scores.at(id) > fr.threshold) == label;
          ++fr.total;
        }
      }
      fr.accuracy = fr.total ? static_cast<double>(fr.correct) / static_cast<double>(fr.total) : 0.0;
      repeat_correct += fr.correct;
      repeat_total += fr.total;
      out.folds.push_back(fr);
    }
    out.repeat_accuracy.push_back(
        repeat_total ? static_cast<double>(repeat_correct) / static_cast<double>(repeat_total) : 0.0);
  }

  out.mean_accuracy = mean(out.repeat_accuracy);
  double ss = 0.0;
  for (double a : out.repeat_accuracy) ss += (a - out.mean_accuracy) * (a - out.mean_accuracy);
  const auto rn = static_cast<double>(out.repeat_accuracy.size());
  const double sd = rn > 1.0 ? std::sqrt(ss / (rn - 1.0)) : 0.0;
  const double half = 1.96 * sd / std::sqrt(rn);
  out.ci_low = out.mean_accuracy - half;
  out.ci_high = out.mean_accuracy + half;
  return out;
}

}  // namespace calyx
