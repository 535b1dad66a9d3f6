#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subrank/labels.hpp"
#include "subrank/metrics.hpp"
#include "subrank/scorer.hpp"
#include "subrank/types.hpp"

namespace subrank {

// ---------------------------------------------------------------------------
// Evaluation sets

/// How a functionality pair was drawn. related_negative pairs come from
/// a co-viewed but functionally different category.
enum class FunctionalityKind { positive, related_negative, random_negative };

const char* to_string(FunctionalityKind kind) noexcept;
FunctionalityKind functionality_kind_from_string(std::string_view name);

struct FunctionalityPair {
  ProductPair pair;
  int label = 0;  // 1 = substitutable
  FunctionalityKind kind = FunctionalityKind::positive;
};

/// Binary substitutability set; `ratio_pos` is the intended positive share.
struct FunctionalityEvalSet {
  std::vector<FunctionalityPair> pairs;
  double ratio_pos = 0.6;

  std::size_t positives() const;
  /// Labels in {0,1} and ratio_pos within 1/n of the actual share.
  void validate() const;
};

struct RankingCandidate {
  ProductPair pair;
  TrafficCounts counts;

  /// Observed CTR, CVR or PR; CVR is 0 for a candidate without clicks.
  double gain(Signal signal) const;
};

struct RankingGroup {
  std::string query_id;
  std::string marketplace;
  std::vector<RankingCandidate> candidates;
};

/// Traffic groups per query, members strictly above min_impressions.
struct RankingEvalSet {
  std::uint64_t min_impressions = 500;
  std::vector<RankingGroup> groups;
  std::size_t dropped_groups = 0;  // fell under 2 candidates after filtering

  std::size_t candidate_count() const;
  void validate() const;
};

void write_functionality_set(const std::filesystem::path& path, const FunctionalityEvalSet& set);
FunctionalityEvalSet load_functionality_set(const std::filesystem::path& path);
void write_ranking_set(const std::filesystem::path& path, const RankingEvalSet& set);
RankingEvalSet load_ranking_set(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Metrics over the sets

struct NdcgSummary {
  double mean = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // all-zero gains
};

/// Unweighted mean of per-query NDCG over non-skipped groups.
/// `scores[g][i]` scores candidate i of group g. Throws
/// Error(undefined_metric) when every group is skipped.
NdcgSummary mean_ndcg(const RankingEvalSet& set, const std::vector<std::vector<double>>& scores,
                      Signal signal, GainKind gain = GainKind::linear);

struct MarketplaceMetrics {
  std::optional<double> auprc;  // absent without positives
  std::map<std::string, double> ndcg_by_signal;
  std::size_t functionality_pairs = 0;
  std::size_t functionality_positives = 0;
  std::size_t ranking_groups = 0;

  friend bool operator==(const MarketplaceMetrics&, const MarketplaceMetrics&) = default;
};

struct MetricsReport {
  double auprc = 0.0;
  std::map<std::string, double> ndcg_by_signal;      // "ctr", "cvr", "pr"
  std::map<std::string, std::size_t> skipped_groups;  // per signal
  std::optional<double> pearson_ctr_cvr;               // over ranking candidates with clicks
  std::map<std::string, MarketplaceMetrics> per_marketplace;
  std::size_t functionality_pairs = 0;
  std::size_t functionality_positives = 0;
  std::size_t ranking_groups = 0;
  ScoreHistogram histogram;  // positive vs random_negative functionality pairs

  std::string to_json() const;
  static MetricsReport from_json(std::string_view text);
};

struct EvalOptions {
  int histogram_bins = 20;
  GainKind gain = GainKind::linear;
};

/// Scores both sets and fills every report field.
MetricsReport evaluate(const PairScorer& scorer, const FunctionalityEvalSet& functionality,
                       const RankingEvalSet& ranking, const EvalOptions& options = {});

/// Tab-separated bins: bin_lo, bin_hi, positive_density, random_density.
void write_histogram_tsv(const std::filesystem::path& path, const ScoreHistogram& histogram);

}  // namespace subrank
