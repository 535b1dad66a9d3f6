#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "subrank/cross_encoder.hpp"
#include "subrank/crossenc_train.hpp"
#include "subrank/gbdt.hpp"
#include "subrank/labels.hpp"
#include "subrank/metrics.hpp"
#include "subrank/synthetic.hpp"

namespace subrank {

enum class ModelKind { gbdt, crossenc };

const char* to_string(ModelKind kind) noexcept;
ModelKind model_kind_from_string(std::string_view name);

/// Loss choice: `automatic` is mse for regression labels and logistic for
/// classification labels.
enum class LossChoice { automatic, mse, logistic, hinge };

const char* to_string(LossChoice loss) noexcept;
LossChoice loss_choice_from_string(std::string_view name);

/// Everything a command needs. Paths left empty resolve under `out`.
struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path out = "run";
  std::filesystem::path catalog, traffic, embeddings, ground_truth, functionality_set;
  std::filesystem::path stopwords_dir;
  ModelKind model = ModelKind::gbdt;

  WorldConfig world;

  LabelConfig label;
  LossChoice loss = LossChoice::automatic;
  double negative_ratio = 0.5;
  std::optional<double> negative_label;  // unset: default for the label spec
  double val_fraction = 0.2;

  GbdtParams gbdt;
  CrossEncoderConfig crossenc;
  TrainConfig train;

  int eval_bins = 20;
  GainKind eval_gain = GainKind::linear;
  std::uint64_t eval_min_impressions = 500;
  std::size_t functionality_pairs = 2000;
  double functionality_ratio_pos = 0.6;
  double functionality_related_share = 0.5;

  ModelKind ablate_model = ModelKind::gbdt;

  std::filesystem::path score_pairs;
  std::size_t score_top_k = 10;

  /// Resolved input and output paths.
  std::filesystem::path catalog_path() const;
  std::filesystem::path traffic_path() const;
  std::filesystem::path embeddings_path() const;
  std::filesystem::path ground_truth_path() const;
  std::filesystem::path functionality_path() const;

  /// Objective for the GBDT given the label task.
  Objective gbdt_objective() const;
  /// Cross-encoder loss; hinge is rejected with Error(config).
  LossKind crossenc_loss() const;

  /// Cross-field checks. Throws Error(config).
  void validate() const;

  /// Canonical `key = value` listing of every setting.
  std::string to_text() const;
};

using ConfigMap = std::map<std::string, std::string>;

/// Parses `key = value` lines; `#` starts a comment at line start or after
/// whitespace. Throws Error(config) on malformed lines or duplicate keys.
ConfigMap parse_config_text(std::string_view text, const std::string& origin = "<config>");
ConfigMap read_config_file(const std::filesystem::path& path);

/// Applies `overrides` on top of `base`, then builds a RunConfig. Unknown
/// keys and unparsable values throw Error(config).
RunConfig make_run_config(const ConfigMap& base, const ConfigMap& overrides = {});

/// Sorted list of every accepted key.
std::vector<std::string> config_keys();

}  // namespace subrank
