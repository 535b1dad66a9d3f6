#include "subrank/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jsonl.hpp"
#include "subrank/error.hpp"
#include "subrank/rng.hpp"

namespace subrank {

namespace {

// Gains at or below this are treated as no improvement.
constexpr double kMinGain = 1e-12;
constexpr int kMaxBacktracks = 40;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sample_loss(Objective objective, double score, double label) {
  switch (objective) {
    case Objective::mse: {
      const double d = score - label;
      return d * d;
    }
    case Objective::logistic:
      return label > 0.5 ? softplus(-score) : softplus(score);
    case Objective::hinge: {
      const double y = label > 0.5 ? 1.0 : -1.0;
      return std::max(0.0, 1.0 - y * score);
    }
  }
  return 0.0;
}

double split_gain(double sum_left, std::size_t n_left, double sum_total, std::size_t n_total) {
  const double sum_right = sum_total - sum_left;
  const auto n_right = n_total - n_left;
  return sum_left * sum_left / static_cast<double>(n_left) +
         sum_right * sum_right / static_cast<double>(n_right) -
         sum_total * sum_total / static_cast<double>(n_total);
}

struct NodeStats {
  std::size_t count = 0;
  double sum = 0.0;
};

struct NodeScan {
  std::size_t left_count = 0;
  double left_sum = 0.0;
  double prev = 0.0;
  bool has_prev = false;
  double best_gain = kMinGain;
  int best_feature = -1;
  double best_threshold = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& columns,
              const std::vector<std::vector<std::uint32_t>>& sorted, const GbdtParams& params)
      : columns_(columns), sorted_(sorted), params_(params) {}

  // Grows a tree on the samples where in_bag is set. Fills `leaf_of` with
  // the leaf node index of each in-bag sample (-1 otherwise).
  std::vector<TreeNode> grow(std::span<const double> residuals, std::span<const char> in_bag,
                             std::vector<int>& leaf_of) const {
    const std::size_t n = residuals.size();
    std::vector<TreeNode> nodes(1);
    std::vector<int> node_of(n, -1);
    NodeStats root;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_bag[i]) continue;
      node_of[i] = 0;
      ++root.count;
      root.sum += residuals[i];
    }
    std::vector<int> frontier{0};
    std::vector<NodeStats> stats{root};  // indexed by node id
    const auto msl = static_cast<std::size_t>(params_.min_samples_leaf);

    for (int depth = 0; depth < params_.max_depth && !frontier.empty(); ++depth) {
      // Local slot per frontier node.
      std::vector<int> slot(nodes.size(), -1);
      std::vector<NodeScan> scans(frontier.size());
      bool any = false;
      for (std::size_t s = 0; s < frontier.size(); ++s) {
        slot[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
        if (stats[static_cast<std::size_t>(frontier[s])].count >= 2 * msl) any = true;
      }
      if (!any) break;

      for (std::size_t f = 0; f < columns_.size(); ++f) {
        for (auto& sc : scans) {
          sc.left_count = 0;
          sc.left_sum = 0.0;
          sc.has_prev = false;
        }
        const auto& col = columns_[f];
        for (const std::uint32_t i : sorted_[f]) {
          const int node = node_of[i];
          if (node < 0) continue;
          const int s = slot[static_cast<std::size_t>(node)];
          if (s < 0) continue;
          auto& sc = scans[static_cast<std::size_t>(s)];
          const auto& st = stats[static_cast<std::size_t>(node)];
          const double x = col[i];
          if (sc.has_prev && x > sc.prev && sc.left_count >= msl && st.count - sc.left_count >= msl) {
            const double gain = split_gain(sc.left_sum, sc.left_count, st.sum, st.count);
            if (gain > sc.best_gain) {
              sc.best_gain = gain;
              sc.best_feature = static_cast<int>(f);
              sc.best_threshold = 0.5 * (sc.prev + x);
            }
          }
          ++sc.left_count;
          sc.left_sum += residuals[i];
          sc.prev = x;
          sc.has_prev = true;
        }
      }

      std::vector<int> next;
      for (std::size_t s = 0; s < frontier.size(); ++s) {
        const auto& sc = scans[s];
        if (sc.best_feature < 0) continue;
        const auto id = static_cast<std::size_t>(frontier[s]);
        const int left = static_cast<int>(nodes.size());
        nodes[id].feature = sc.best_feature;
        nodes[id].threshold = sc.best_threshold;
        nodes[id].left = left;
        nodes[id].right = left + 1;
        nodes.emplace_back();
        nodes.emplace_back();
        stats.emplace_back();
        stats.emplace_back();
        next.push_back(left);
        next.push_back(left + 1);
      }
      if (next.empty()) break;
      for (std::size_t i = 0; i < n; ++i) {
        const int node = node_of[i];
        if (node < 0) continue;
        const auto& nd = nodes[static_cast<std::size_t>(node)];
        if (nd.is_leaf()) continue;
        const int child = columns_[static_cast<std::size_t>(nd.feature)][i] <= nd.threshold ? nd.left : nd.right;
        node_of[i] = child;
        auto& st = stats[static_cast<std::size_t>(child)];
        ++st.count;
        st.sum += residuals[i];
      }
      frontier = std::move(next);
    }
    leaf_of = std::move(node_of);
    return nodes;
  }

 private:
  const std::vector<std::vector<double>>& columns_;
  const std::vector<std::vector<std::uint32_t>>& sorted_;
  const GbdtParams& params_;
};

// Shrinks `step` by halving until the leaf's loss at score + lr*step does
// not exceed its loss at the current score.
double safeguarded_step(Objective objective, double step, double lr, std::span<const std::uint32_t> members,
                        std::span<const double> scores, std::span<const double> labels) {
  const auto loss_at = [&](double t) {
    double total = 0.0;
    for (const auto i : members) total += sample_loss(objective, scores[i] + lr * t, labels[i]);
    return total;
  };
  if (!std::isfinite(step)) step = 0.0;
  const double base = loss_at(0.0);
  for (int k = 0; k < kMaxBacktracks; ++k) {
    if (loss_at(step) <= base) return step;
    step *= 0.5;
  }
  return 0.0;
}

}  // namespace

const char* to_string(Objective objective) noexcept {
  switch (objective) {
    case Objective::mse: return "mse";
    case Objective::logistic: return "logistic";
    case Objective::hinge: return "hinge";
  }
  return "?";
}

Objective objective_from_string(std::string_view name) {
  if (name == "mse") return Objective::mse;
  if (name == "logistic") return Objective::logistic;
  if (name == "hinge") return Objective::hinge;
  throw Error(ErrorKind::config, "unknown objective '" + std::string(name) + "'");
}

void GbdtParams::validate() const {
  if (n_trees < 0) throw Error(ErrorKind::config, "n_trees must be >= 0");
  if (max_depth < 1) throw Error(ErrorKind::config, "max_depth must be >= 1");
  if (min_samples_leaf < 1) throw Error(ErrorKind::config, "min_samples_leaf must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw Error(ErrorKind::config, "learning_rate must lie in (0, 1]");
  }
  if (!(row_subsample > 0.0 && row_subsample <= 1.0)) {
    throw Error(ErrorKind::config, "row_subsample must lie in (0, 1]");
  }
}

double RegressionTree::predict(std::span<const double> x) const {
  if (nodes_.empty()) return 0.0;
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes_[i].value;
}

void RegressionTree::validate(std::size_t dim) const {
  if (nodes_.empty()) throw Error(ErrorKind::data, "tree has no nodes");
  std::vector<int> seen(nodes_.size(), 0);
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const auto i = stack.back();
    stack.pop_back();
    if (seen[i]++) throw Error(ErrorKind::data, "tree node reached twice");
    const auto& n = nodes_[i];
    if (n.is_leaf()) {
      if (!std::isfinite(n.value)) throw Error(ErrorKind::data, "non-finite leaf value");
      continue;
    }
    if (static_cast<std::size_t>(n.feature) >= dim) throw Error(ErrorKind::data, "split feature out of range");
    for (int child : {n.left, n.right}) {
      if (child <= 0 || static_cast<std::size_t>(child) >= nodes_.size()) {
        throw Error(ErrorKind::data, "tree child index out of range");
      }
      stack.push_back(static_cast<std::size_t>(child));
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw Error(ErrorKind::data, "tree has unreachable nodes");
  }
}

std::optional<SplitCandidate> best_split(std::span<const double> feature_values,
                                         std::span<const double> residuals, int min_samples_leaf) {
  if (feature_values.size() != residuals.size()) {
    throw Error(ErrorKind::data, "best_split: values and residuals differ in length");
  }
  const std::size_t n = feature_values.size();
  const auto msl = static_cast<std::size_t>(std::max(min_samples_leaf, 1));
  if (n < 2 * msl) return std::nullopt;
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0U);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return feature_values[a] < feature_values[b]; });
  const double total = std::accumulate(residuals.begin(), residuals.end(), 0.0);

  std::optional<SplitCandidate> best;
  double best_gain = kMinGain;
  double left_sum = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    left_sum += residuals[order[k]];
    const double lo = feature_values[order[k]];
    const double hi = feature_values[order[k + 1]];
    const std::size_t n_left = k + 1;
    if (!(hi > lo) || n_left < msl || n - n_left < msl) continue;
    const double gain = split_gain(left_sum, n_left, total, n);
    if (gain > best_gain) {
      best_gain = gain;
      best = SplitCandidate{0.5 * (lo + hi), gain};
    }
  }
  return best;
}

GbdtModel::GbdtModel(Objective objective, GbdtParams params, std::size_t dim, double base_score,
                     std::vector<RegressionTree> trees)
    : objective_(objective), params_(params), dim_(dim), base_score_(base_score), trees_(std::move(trees)) {}

double GbdtModel::predict(std::span<const double> x, std::size_t max_trees) const {
  if (x.size() != dim_) {
    throw Error(ErrorKind::data, "feature dimension " + std::to_string(x.size()) +
                                     " does not match model dimension " + std::to_string(dim_));
  }
  double sum = 0.0;
  const auto n = std::min(max_trees, trees_.size());
  for (std::size_t t = 0; t < n; ++t) sum += trees_[t].predict(x);
  return base_score_ + params_.learning_rate * sum;
}

double GbdtModel::predict_probability(std::span<const double> x) const {
  const double raw = predict(x);
  return objective_ == Objective::logistic ? sigmoid(raw) : raw;
}

std::string GbdtModel::to_json() const {
  detail::Json j;
  j["format"] = "subrank-gbdt";
  j["version"] = 1;
  j["objective"] = to_string(objective_);
  j["dim"] = dim_;
  j["base_score"] = base_score_;
  j["params"] = {{"n_trees", params_.n_trees},
                 {"max_depth", params_.max_depth},
                 {"min_samples_leaf", params_.min_samples_leaf},
                 {"learning_rate", params_.learning_rate},
                 {"row_subsample", params_.row_subsample},
                 {"seed", params_.seed}};
  auto trees = detail::Json::array();
  for (const auto& t : trees_) {
    auto nodes = detail::Json::array();
    for (const auto& n : t.nodes()) {
      nodes.push_back(detail::Json::array({n.feature, n.threshold, n.left, n.right, n.value}));
    }
    trees.push_back(std::move(nodes));
  }
  j["trees"] = std::move(trees);
  return j.dump() + "\n";
}

GbdtModel GbdtModel::from_json(std::string_view text) {
  try {
    const auto j = detail::Json::parse(text);
    if (j.at("format").get<std::string>() != "subrank-gbdt") {
      throw Error(ErrorKind::data, "not a GBDT model artifact");
    }
    const auto& p = j.at("params");
    GbdtParams params;
    params.n_trees = p.at("n_trees").get<int>();
    params.max_depth = p.at("max_depth").get<int>();
    params.min_samples_leaf = p.at("min_samples_leaf").get<int>();
    params.learning_rate = p.at("learning_rate").get<double>();
    params.row_subsample = p.at("row_subsample").get<double>();
    params.seed = p.at("seed").get<std::uint64_t>();
    const auto dim = j.at("dim").get<std::size_t>();
    std::vector<RegressionTree> trees;
    for (const auto& t : j.at("trees")) {
      std::vector<TreeNode> nodes;
      for (const auto& n : t) {
        nodes.push_back(TreeNode{n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(),
                                 n.at(3).get<int>(), n.at(4).get<double>()});
      }
      RegressionTree tree(std::move(nodes));
      tree.validate(dim);
      trees.push_back(std::move(tree));
    }
    return GbdtModel(objective_from_string(j.at("objective").get<std::string>()), params, dim,
                     j.at("base_score").get<double>(), std::move(trees));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::data, std::string("malformed GBDT model: ") + e.what());
  }
}

void GbdtModel::save(const std::filesystem::path& path) const { detail::write_text_file(path, to_json()); }

GbdtModel GbdtModel::load(const std::filesystem::path& path) {
  return from_json(detail::read_text_file(path));
}

double objective_loss(Objective objective, std::span<const double> scores, std::span<const double> labels) {
  if (scores.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) total += sample_loss(objective, scores[i], labels[i]);
  return total / static_cast<double>(scores.size());
}

GbdtFit fit_gbdt(std::span<const PairFeature> features, std::span<const double> labels,
                 const GbdtParams& params, Objective objective) {
  params.validate();
  if (features.empty()) throw Error(ErrorKind::data, "cannot fit a GBDT on an empty dataset");
  if (features.size() != labels.size()) throw Error(ErrorKind::data, "features and labels differ in length");
  const std::size_t n = features.size();
  const std::size_t dim = features.front().values.size();
  for (const auto& f : features) {
    if (f.values.size() != dim) throw Error(ErrorKind::data, "inconsistent feature dimensions");
  }
  std::size_t positives = 0;
  for (double y : labels) {
    if (!std::isfinite(y)) throw Error(ErrorKind::data, "non-finite label");
    if (objective != Objective::mse) {
      if (y != 0.0 && y != 1.0) throw Error(ErrorKind::data, "classification objectives need labels in {0, 1}");
      positives += y == 1.0;
    }
  }

  double base = 0.0;
  switch (objective) {
    case Objective::mse:
      base = std::accumulate(labels.begin(), labels.end(), 0.0) / static_cast<double>(n);
      break;
    case Objective::logistic: {
      const double rate = std::clamp(static_cast<double>(positives) / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
      base = std::log(rate / (1.0 - rate));
      break;
    }
    case Objective::hinge:
      base = 0.0;
      break;
  }

  std::vector<std::vector<double>> columns(dim, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < dim; ++f) columns[f][i] = features[i].values[f];
  }
  std::vector<std::vector<std::uint32_t>> sorted(dim, std::vector<std::uint32_t>(n));
  for (std::size_t f = 0; f < dim; ++f) {
    auto& order = sorted[f];
    std::iota(order.begin(), order.end(), 0U);
    const auto& col = columns[f];
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return col[a] < col[b]; });
  }

  std::vector<double> scores(n, base);
  std::vector<double> residuals(n);
  std::vector<double> hessians(n, 1.0);
  std::vector<char> in_bag(n, 1);
  std::vector<int> leaf_of;
  Rng rng(params.seed);
  const TreeBuilder builder(columns, sorted, params);

  GbdtFit fit;
  fit.training_loss.push_back(objective_loss(objective, scores, labels));
  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(params.n_trees));
  std::vector<std::uint32_t> bag_order(n);
  std::iota(bag_order.begin(), bag_order.end(), 0U);

  for (int round = 0; round < params.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      switch (objective) {
        case Objective::mse:
          residuals[i] = labels[i] - scores[i];
          break;
        case Objective::logistic: {
          const double p = sigmoid(scores[i]);
          residuals[i] = labels[i] - p;
          hessians[i] = p * (1.0 - p);
          break;
        }
        case Objective::hinge: {
          const double y = labels[i] > 0.5 ? 1.0 : -1.0;
          residuals[i] = y * scores[i] < 1.0 ? y : 0.0;
          break;
        }
      }
    }
    if (params.row_subsample < 1.0) {
      const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(params.row_subsample * static_cast<double>(n)));
      std::shuffle(bag_order.begin(), bag_order.end(), rng);
      std::fill(in_bag.begin(), in_bag.end(), 0);
      for (std::size_t j = 0; j < k; ++j) in_bag[bag_order[j]] = 1;
    }

    auto nodes = builder.grow(residuals, in_bag, leaf_of);
    std::vector<std::vector<std::uint32_t>> members(nodes.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (leaf_of[i] >= 0) members[static_cast<std::size_t>(leaf_of[i])].push_back(static_cast<std::uint32_t>(i));
    }
    for (std::size_t id = 0; id < nodes.size(); ++id) {
      auto& node = nodes[id];
      if (!node.is_leaf()) continue;
      const auto& m = members[id];
      if (m.empty()) {
        node.value = 0.0;
        continue;
      }
      double sum_r = 0.0;
      double sum_h = 0.0;
      for (const auto i : m) {
        sum_r += residuals[i];
        sum_h += hessians[i];
      }
      switch (objective) {
        case Objective::mse:
          node.value = sum_r / static_cast<double>(m.size());
          break;
        case Objective::logistic:
          node.value = safeguarded_step(objective, sum_r / std::max(sum_h, 1e-12), params.learning_rate, m,
                                        scores, labels);
          break;
        case Objective::hinge:
          node.value = safeguarded_step(objective, sum_r / static_cast<double>(m.size()),
                                        params.learning_rate, m, scores, labels);
          break;
      }
    }
    RegressionTree tree(std::move(nodes));
    for (std::size_t i = 0; i < n; ++i) {
      const double out = leaf_of[i] >= 0 ? tree.nodes()[static_cast<std::size_t>(leaf_of[i])].value
                                         : tree.predict(features[i].values);
      scores[i] += params.learning_rate * out;
    }
    trees.push_back(std::move(tree));
    fit.training_loss.push_back(objective_loss(objective, scores, labels));
  }
  fit.model = GbdtModel(objective, params, dim, base, std::move(trees));
  return fit;
}

}  // namespace subrank
