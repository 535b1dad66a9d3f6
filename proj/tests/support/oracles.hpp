#pragma once
// Independent reference implementations. They share no code with the
// library and favour the most literal formula over speed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "subrank/cross_encoder.hpp"

namespace oracle {

/// Average precision by sweeping every distinct score as a threshold
/// (predict positive when score >= t), highest threshold first.
inline double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::vector<double> thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  double total_pos = 0;
  for (int l : labels) total_pos += l;
  double ap = 0.0;
  double prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0;
    double predicted = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) {
        ++predicted;
        tp += labels[i];
      }
    }
    const double recall = tp / total_pos;
    const double precision = tp / predicted;
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

/// NDCG with linear gain. Each item's rank is counted directly: items with a
/// higher score, or an equal score and a smaller key, come first.
inline double ndcg(const std::vector<double>& scores, const std::vector<double>& gains,
                   const std::vector<std::string>& keys) {
  const std::size_t n = scores.size();
  double dcg = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t ahead = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (scores[j] > scores[i] || (scores[j] == scores[i] && keys[j] < keys[i])) ++ahead;
    }
    dcg += gains[i] / std::log2(static_cast<double>(ahead + 1) + 1.0);
  }
  std::vector<double> ideal = gains;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t r = 0; r < n; ++r) idcg += ideal[r] / std::log2(static_cast<double>(r + 1) + 1.0);
  return dcg / idcg;
}

/// Sum of squared deviations from the mean, two-pass.
inline double sse(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s;
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  double left_mean = 0.0;
  double right_mean = 0.0;
};

/// Every (feature, midpoint) split with at least `min_leaf` rows per side,
/// scored by direct SSE reduction.
inline std::vector<Split> all_splits(const std::vector<std::vector<double>>& x, const std::vector<double>& y,
                                     int min_leaf = 1) {
  std::vector<Split> out;
  if (x.empty()) return out;
  const double total = sse(y);
  const std::size_t dim = x[0].size();
  for (std::size_t f = 0; f < dim; ++f) {
    std::vector<double> values;
    for (const auto& row : x) values.push_back(row[f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double t = (values[k] + values[k + 1]) / 2.0;
      std::vector<double> left, right;
      for (std::size_t i = 0; i < x.size(); ++i) (x[i][f] <= t ? left : right).push_back(y[i]);
      if (static_cast<int>(left.size()) < min_leaf || static_cast<int>(right.size()) < min_leaf) continue;
      Split s;
      s.feature = static_cast<int>(f);
      s.threshold = t;
      s.gain = total - sse(left) - sse(right);
      double lm = 0.0, rm = 0.0;
      for (double v : left) lm += v;
      for (double v : right) rm += v;
      s.left_mean = lm / static_cast<double>(left.size());
      s.right_mean = rm / static_cast<double>(right.size());
      out.push_back(s);
    }
  }
  return out;
}

/// Best depth-1 split by exhaustive search: highest gain, ties to the lowest
/// feature then the lowest threshold. feature == -1 when no split has
/// positive gain.
inline Split best_stump(const std::vector<std::vector<double>>& x, const std::vector<double>& y, int min_leaf = 1) {
  Split best;
  for (const auto& s : all_splits(x, y, min_leaf)) {
    if (s.gain > best.gain) best = s;
  }
  return best;
}

/// Prediction of the stump `s` fitted on y (mean when there is no split).
inline double stump_predict(const Split& s, const std::vector<double>& y, const std::vector<double>& row) {
  if (s.feature < 0) {
    double m = 0.0;
    for (double v : y) m += v;
    return m / static_cast<double>(y.size());
  }
  return row[static_cast<std::size_t>(s.feature)] <= s.threshold ? s.left_mean : s.right_mean;
}

/// Sample skewness (Fisher-Pearson, biased moments).
inline double skewness(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    m2 += (x - mean) * (x - mean);
    m3 += (x - mean) * (x - mean) * (x - mean);
  }
  m2 /= static_cast<double>(v.size());
  m3 /= static_cast<double>(v.size());
  return m3 / std::pow(m2, 1.5);
}

/// Central-difference gradient of `loss` with respect to every entry of
/// every parameter block, step 1e-3 * max(1, |w|).
template <typename LossFn>
subrank::CrossEncoderWeights numeric_gradient(subrank::CrossEncoderModel model, LossFn&& loss) {
  subrank::CrossEncoderWeights grad = model.weights.zeros_like();
  auto blocks = model.weights.blocks();
  auto gblocks = grad.blocks();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto& w = *blocks[b].value;
    auto& g = *gblocks[b].value;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double orig = w.data()[i];
      const double h = 1e-3 * std::max(1.0, std::abs(orig));
      w.data()[i] = orig + h;
      const double up = loss(model);
      w.data()[i] = orig - h;
      const double down = loss(model);
      w.data()[i] = orig;
      g.data()[i] = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(const subrank::Matrix& a, const subrank::Matrix& b) {
  const double scale = std::max(a.norm(), b.norm());
  if (scale < 1e-300) return 0.0;
  return (a - b).norm() / scale;
}

}  // namespace oracle
