#include "subrank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "subrank/error.hpp"

namespace subrank {

double auprc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorKind::undefined_metric, "auprc: length mismatch");
  const auto total_pos = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](int y) { return y != 0; }));
  if (total_pos == 0) throw Error(ErrorKind::undefined_metric, "auprc needs at least one positive label");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      tp += labels[order[j]] != 0;
      ++j;
    }
    seen = j;
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

std::optional<double> ndcg_for_query(std::span<const double> scores, std::span<const double> gains,
                                     std::span<const std::string> tie_keys, GainKind gain) {
  if (scores.size() != gains.size() || (!tie_keys.empty() && tie_keys.size() != scores.size())) {
    throw Error(ErrorKind::undefined_metric, "ndcg: length mismatch");
  }
  if (scores.size() < 2) throw Error(ErrorKind::undefined_metric, "ndcg needs at least 2 candidates");
  const auto g = [&](double v) { return gain == GainKind::linear ? v : std::exp2(v) - 1.0; };
  if (std::all_of(gains.begin(), gains.end(), [](double v) { return v == 0.0; })) return std::nullopt;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (!tie_keys.empty() && tie_keys[a] != tie_keys[b]) return tie_keys[a] < tie_keys[b];
    return a < b;
  });
  std::vector<double> ideal(gains.begin(), gains.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());

  double dcg = 0.0;
  double idcg = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const double discount = 1.0 / std::log2(static_cast<double>(r) + 2.0);
    dcg += g(gains[order[r]]) * discount;
    idcg += g(ideal[r]) * discount;
  }
  return dcg / idcg;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::undefined_metric, "pearson: length mismatch");
  if (x.size() < 2) throw Error(ErrorKind::undefined_metric, "pearson needs at least 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::undefined_metric, "pearson: constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Moments moments(std::span<const double> values) {
  Moments m;
  m.count = values.size();
  if (values.empty()) return m;
  const double n = static_cast<double>(values.size());
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - m.mean) * (v - m.mean);
  m.stddev = std::sqrt(ss / n);
  return m;
}

ScoreHistogram score_histogram(std::span<const double> positive_scores, std::span<const double> random_scores,
                               int bins) {
  if (bins < 2) throw Error(ErrorKind::config, "histogram needs at least 2 bins");
  ScoreHistogram h;
  h.positive = moments(positive_scores);
  h.random = moments(random_scores);
  h.separation = h.positive.mean - h.random.mean;
  const auto nb = static_cast<std::size_t>(bins);
  h.positive_density.assign(nb, 0.0);
  h.random_density.assign(nb, 0.0);

  bool any = false;
  double lo = 0.0;
  double hi = 0.0;
  for (auto span : {positive_scores, random_scores}) {
    for (double s : span) {
      if (!any) {
        lo = hi = s;
        any = true;
      }
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  if (!any) {
    lo = -0.5;
    hi = 0.5;
  } else if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  h.lo = lo;
  h.hi = hi;
  h.bin_width = (hi - lo) / static_cast<double>(nb);

  const auto fill = [&](std::span<const double> scores, std::vector<double>& density) {
    if (scores.empty()) return;
    for (double s : scores) {
      auto b = static_cast<std::size_t>(std::floor((s - lo) / h.bin_width));
      density[std::min(b, nb - 1)] += 1.0;
    }
    const double norm = 1.0 / (static_cast<double>(scores.size()) * h.bin_width);
    for (auto& d : density) d *= norm;
  };
  fill(positive_scores, h.positive_density);
  fill(random_scores, h.random_density);
  return h;
}

}  // namespace subrank
