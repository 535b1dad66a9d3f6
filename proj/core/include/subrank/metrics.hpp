#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace subrank {

/// Average precision: scores sorted descending, tied scores form a single
/// threshold step, AP = sum over steps of (R_k - R_{k-1}) * P_k.
/// Throws Error(undefined_metric) when there are no positive labels.
double auprc(std::span<const double> scores, std::span<const int> labels);

enum class GainKind { linear, exponential };

/// NDCG of one query with discount 1/log2(rank + 1), ranks from 1.
///
/// Ties in `scores` are ordered by ascending `tie_keys` (candidate ids);
/// without keys, by input position. Linear gain uses the value itself,
/// exponential uses 2^g - 1. Returns nullopt (skip) when every gain is
/// zero. Throws Error(undefined_metric) for fewer than 2 candidates.
std::optional<double> ndcg_for_query(std::span<const double> scores, std::span<const double> gains,
                                     std::span<const std::string> tie_keys = {},
                                     GainKind gain = GainKind::linear);

/// Sample Pearson correlation. Throws Error(undefined_metric) for length
/// mismatch, fewer than 2 points or a constant input.
double pearson(std::span<const double> x, std::span<const double> y);

struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};

Moments moments(std::span<const double> values);

/// Density histograms of two score populations over a shared range.
struct ScoreHistogram {
  double lo = 0.0;
  double hi = 0.0;
  double bin_width = 0.0;
  std::vector<double> positive_density;
  std::vector<double> random_density;
  Moments positive;
  Moments random;
  /// mean(positive) - mean(random).
  double separation = 0.0;
};

/// Each population with members integrates to 1. When all scores coincide
/// the range is widened to [x - 0.5, x + 0.5]. Throws Error(config) for
/// bins < 2.
ScoreHistogram score_histogram(std::span<const double> positive_scores,
                               std::span<const double> random_scores, int bins);

}  // namespace subrank
