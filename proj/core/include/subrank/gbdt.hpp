#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "subrank/embeddings.hpp"

namespace subrank {

enum class Objective { mse, logistic, hinge };

const char* to_string(Objective objective) noexcept;
Objective objective_from_string(std::string_view name);

struct GbdtParams {
  int n_trees = 200;
  int max_depth = 6;
  int min_samples_leaf = 20;
  double learning_rate = 0.1;
  double row_subsample = 1.0;  // 1 disables sampling; the seed is then unused
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const GbdtParams&, const GbdtParams&) = default;
};

/// Internal nodes have feature >= 0; samples with value <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  double predict(std::span<const double> x) const;

  /// Checks that every node is reachable exactly once and every split
  /// feature is below `dim`. Throws Error(data).
  void validate(std::size_t dim) const;

 private:
  std::vector<TreeNode> nodes_;
};

struct SplitCandidate {
  double threshold = 0.0;
  double gain = 0.0;
};

/// Threshold that maximizes the reduction in the sum of squared residuals.
///
/// Candidates are midpoints between consecutive distinct sorted values;
/// both sides must keep at least `min_samples_leaf` samples. Ties go to the
/// lowest threshold. No result when nothing has positive gain.
std::optional<SplitCandidate> best_split(std::span<const double> feature_values,
                                         std::span<const double> residuals,
                                         int min_samples_leaf = 1);

/// Additive tree ensemble. Raw score = base_score + learning_rate * sum of
/// tree outputs; the logistic objective applies a sigmoid only in
/// predict_probability.
class GbdtModel {
 public:
  GbdtModel() = default;
  GbdtModel(Objective objective, GbdtParams params, std::size_t dim, double base_score,
            std::vector<RegressionTree> trees);

  Objective objective() const noexcept { return objective_; }
  const GbdtParams& params() const noexcept { return params_; }
  std::size_t dim() const noexcept { return dim_; }
  double base_score() const noexcept { return base_score_; }
  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }

  /// Throws Error(data) on a dimension mismatch. `max_trees` limits the
  /// ensemble to its first trees.
  double predict(std::span<const double> x, std::size_t max_trees = SIZE_MAX) const;
  double predict_probability(std::span<const double> x) const;

  std::string to_json() const;
  static GbdtModel from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static GbdtModel load(const std::filesystem::path& path);

 private:
  Objective objective_ = Objective::mse;
  GbdtParams params_;
  std::size_t dim_ = 0;
  double base_score_ = 0.0;
  std::vector<RegressionTree> trees_;
};

struct GbdtFit {
  GbdtModel model;
  /// Mean training objective before the first tree and after every round.
  std::vector<double> training_loss;
};

/// Exact greedy gradient boosting.
///
/// mse: trees fit residuals, leaves take the residual mean. logistic:
/// labels in {0,1}, base is the log-odds of the positive rate, leaves take
/// one Newton step. hinge: labels in {0,1} mapped to -1/+1, trees fit the
/// negative subgradient, leaves take its mean. Logistic and hinge leaf
/// steps are halved until the leaf's loss does not increase, so the
/// training objective never rises when row_subsample = 1.
GbdtFit fit_gbdt(std::span<const PairFeature> features, std::span<const double> labels,
                 const GbdtParams& params, Objective objective);

/// Mean objective value of raw scores against labels.
double objective_loss(Objective objective, std::span<const double> scores,
                      std::span<const double> labels);

}  // namespace subrank
