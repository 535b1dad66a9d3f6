#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "subrank/config.hpp"
#include "subrank/evaluation.hpp"
#include "subrank/labels.hpp"

namespace subrank {

// Files under RunConfig::out.
inline constexpr const char* kTrainFile = "train.jsonl";
inline constexpr const char* kValidationFile = "validation.jsonl";
inline constexpr const char* kRankingFile = "ranking_eval.jsonl";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kGbdtModelFile = "model.gbdt.json";
inline constexpr const char* kCrossEncoderModelFile = "model.crossenc.json";
inline constexpr const char* kHistoryFile = "history.tsv";
inline constexpr const char* kReportFile = "report.json";
inline constexpr const char* kHistogramFile = "histogram.tsv";
inline constexpr const char* kAblationFile = "ablation.tsv";
inline constexpr const char* kScoresFile = "scores.tsv";
inline constexpr const char* kHiddenParamsFile = "hidden_params.json";

struct GenSummary {
  std::size_t products = 0;
  std::size_t traffic_records = 0;
  std::size_t thresholded_pairs = 0;  // impressions >= label.min_impressions
  double zero_purchase_fraction = 0.0;  // among thresholded pairs
  std::optional<double> pearson_ctr_cvr;  // thresholded pairs with clicks
  std::size_t functionality_pairs = 0;
  std::size_t embedding_words = 0;
};

struct PrepareSummary {
  LabelingSummary labeling;
  std::size_t random_negatives = 0;
  std::size_t train_pairs = 0;
  std::size_t validation_pairs = 0;
  std::size_t query_overlap = 0;
  std::size_t ranking_groups = 0;
  double negative_label = 0.0;
};

/// One row of the objective grid.
struct AblationCell {
  std::string name;  // e.g. "PR+Log+MSE"
  LabelSpec spec;
  Objective objective = Objective::mse;
};

/// The seven label/loss rows, baseline (CTR+MSE) first.
std::vector<AblationCell> default_ablation_grid();

struct AblationRow {
  AblationCell cell;
  bool ok = false;
  std::string error;  // set when !ok
  std::size_t train_pairs = 0;
  double auprc = 0.0;
  std::map<std::string, double> ndcg;  // ctr, cvr, pr
};

struct AblationTable {
  std::vector<AblationRow> rows;  // rows[0] is the baseline

  /// Relative change versus the baseline, in percent.
  static double delta_pct(double value, double baseline);
  std::string to_tsv() const;
};

GenSummary cmd_gen(const RunConfig& config, std::ostream& log);
PrepareSummary cmd_prepare(const RunConfig& config, std::ostream& log);
/// Returns the per-round (gbdt) or per-epoch (crossenc) history rows.
std::size_t cmd_train(const RunConfig& config, std::ostream& log);
MetricsReport cmd_eval(const RunConfig& config, bool oracle_scorer, std::ostream& log);
AblationTable cmd_ablate(const RunConfig& config, std::ostream& log);
/// Returns the number of rows written.
std::size_t cmd_score(const RunConfig& config, std::ostream& log);

}  // namespace subrank
