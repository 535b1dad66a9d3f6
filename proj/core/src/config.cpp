#include "subrank/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "jsonl.hpp"
#include "subrank/error.hpp"

namespace subrank {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw Error(ErrorKind::config, "config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v, "a number");
  return out;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, static_cast<std::size_t>(ptr - buf));
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<MarketplaceSpec> parse_marketplaces(const std::string& key, const std::string& v) {
  std::vector<MarketplaceSpec> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto colon = item.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == item.size()) {
      bad_value(key, v, "a list like US:en,DE:de");
    }
    out.push_back({item.substr(0, colon), item.substr(colon + 1)});
  }
  if (out.empty()) bad_value(key, v, "at least one marketplace");
  return out;
}

std::string format_marketplaces(const std::vector<MarketplaceSpec>& ms) {
  std::string out;
  for (const auto& m : ms) {
    if (!out.empty()) out += ',';
    out += m.code + ':' + m.language;
  }
  return out;
}

struct Binding {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Binding number(std::string key, T RunConfig::*member) {
  return {key,
          [key, member](RunConfig& c, const std::string& v) {
            if constexpr (std::is_floating_point_v<T>) {
              c.*member = parse_double(key, v);
            } else {
              c.*member = parse_int<T>(key, v);
            }
          },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return fmt(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

/// Member of a nested struct, e.g. world.n_categories.
template <typename S, typename T>
Binding nested(std::string key, S RunConfig::*outer, T S::*inner) {
  return {key,
          [key, outer, inner](RunConfig& c, const std::string& v) {
            if constexpr (std::is_floating_point_v<T>) {
              (c.*outer).*inner = parse_double(key, v);
            } else {
              (c.*outer).*inner = parse_int<T>(key, v);
            }
          },
          [outer, inner](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return fmt((c.*outer).*inner);
            } else {
              return std::to_string((c.*outer).*inner);
            }
          }};
}

Binding path(std::string key, std::filesystem::path RunConfig::*member) {
  return {key, [member](RunConfig& c, const std::string& v) { c.*member = v; },
          [member](const RunConfig& c) { return (c.*member).string(); }};
}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = [] {
    std::vector<Binding> b;
    b.push_back(number("seed", &RunConfig::seed));
    b.push_back(path("out", &RunConfig::out));
    b.push_back(path("catalog", &RunConfig::catalog));
    b.push_back(path("traffic", &RunConfig::traffic));
    b.push_back(path("embeddings", &RunConfig::embeddings));
    b.push_back(path("ground_truth", &RunConfig::ground_truth));
    b.push_back(path("functionality_set", &RunConfig::functionality_set));
    b.push_back(path("stopwords_dir", &RunConfig::stopwords_dir));
    b.push_back({"model", [](RunConfig& c, const std::string& v) { c.model = model_kind_from_string(v); },
                 [](const RunConfig& c) { return std::string(to_string(c.model)); }});

    using W = WorldConfig;
    b.push_back(nested("world.n_categories", &RunConfig::world, &W::n_categories));
    b.push_back(nested("world.products_per_category", &RunConfig::world, &W::products_per_category));
    b.push_back({"world.marketplaces",
                 [](RunConfig& c, const std::string& v) { c.world.marketplaces = parse_marketplaces("world.marketplaces", v); },
                 [](const RunConfig& c) { return format_marketplaces(c.world.marketplaces); }});
    b.push_back(nested("world.signature_tokens", &RunConfig::world, &W::signature_tokens));
    b.push_back(nested("world.brand_tokens", &RunConfig::world, &W::brand_tokens));
    b.push_back(nested("world.descriptor_tokens", &RunConfig::world, &W::descriptor_tokens));
    b.push_back(nested("world.related_fraction", &RunConfig::world, &W::related_fraction));
    b.push_back(nested("world.embedding_dim", &RunConfig::world, &W::embedding_dim));
    b.push_back(nested("world.embedding_noise", &RunConfig::world, &W::embedding_noise));
    b.push_back(nested("world.same_exposures", &RunConfig::world, &W::same_exposures));
    b.push_back(nested("world.related_exposures", &RunConfig::world, &W::related_exposures));
    b.push_back(nested("world.random_exposures", &RunConfig::world, &W::random_exposures));
    b.push_back(nested("world.impressions_log_mean", &RunConfig::world, &W::impressions_log_mean));
    b.push_back(nested("world.impressions_log_sd", &RunConfig::world, &W::impressions_log_sd));
    b.push_back(nested("world.base_ctr", &RunConfig::world, &W::base_ctr));
    b.push_back(nested("world.related_ctr_factor", &RunConfig::world, &W::related_ctr_factor));
    b.push_back(nested("world.random_ctr_factor", &RunConfig::world, &W::random_ctr_factor));
    b.push_back(nested("world.base_cvr", &RunConfig::world, &W::base_cvr));
    b.push_back(nested("world.related_cvr", &RunConfig::world, &W::related_cvr));
    b.push_back(nested("world.random_cvr", &RunConfig::world, &W::random_cvr));
    b.push_back(nested("world.low_price_cvr_factor", &RunConfig::world, &W::low_price_cvr_factor));
    b.push_back(nested("world.mid_price_cvr_factor", &RunConfig::world, &W::mid_price_cvr_factor));
    b.push_back(nested("world.cvr_noise_sd", &RunConfig::world, &W::cvr_noise_sd));

    b.push_back({"signal", [](RunConfig& c, const std::string& v) { c.label.spec.signal = signal_from_string(v); },
                 [](const RunConfig& c) { return std::string(to_string(c.label.spec.signal)); }});
    b.push_back({"transform",
                 [](RunConfig& c, const std::string& v) { c.label.spec.transform = transform_from_string(v); },
                 [](const RunConfig& c) { return std::string(to_string(c.label.spec.transform)); }});
    b.push_back({"epsilon",
                 [](RunConfig& c, const std::string& v) { c.label.spec.epsilon = parse_double("epsilon", v); },
                 [](const RunConfig& c) { return fmt(c.label.spec.epsilon); }});
    b.push_back({"task", [](RunConfig& c, const std::string& v) { c.label.spec.task = task_from_string(v); },
                 [](const RunConfig& c) { return std::string(to_string(c.label.spec.task)); }});
    b.push_back(nested("min_impressions", &RunConfig::label, &LabelConfig::min_impressions));
    b.push_back({"loss", [](RunConfig& c, const std::string& v) { c.loss = loss_choice_from_string(v); },
                 [](const RunConfig& c) { return std::string(to_string(c.loss)); }});

    b.push_back(number("negative_ratio", &RunConfig::negative_ratio));
    b.push_back({"negative_label",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "auto") {
                     c.negative_label.reset();
                   } else {
                     c.negative_label = parse_double("negative_label", v);
                   }
                 },
                 [](const RunConfig& c) { return c.negative_label ? fmt(*c.negative_label) : std::string("auto"); }});
    b.push_back(number("val_fraction", &RunConfig::val_fraction));

    using G = GbdtParams;
    b.push_back(nested("gbdt.n_trees", &RunConfig::gbdt, &G::n_trees));
    b.push_back(nested("gbdt.max_depth", &RunConfig::gbdt, &G::max_depth));
    b.push_back(nested("gbdt.min_samples_leaf", &RunConfig::gbdt, &G::min_samples_leaf));
    b.push_back(nested("gbdt.learning_rate", &RunConfig::gbdt, &G::learning_rate));
    b.push_back(nested("gbdt.row_subsample", &RunConfig::gbdt, &G::row_subsample));

    using X = CrossEncoderConfig;
    b.push_back(nested("crossenc.d_model", &RunConfig::crossenc, &X::d_model));
    b.push_back(nested("crossenc.n_heads", &RunConfig::crossenc, &X::n_heads));
    b.push_back(nested("crossenc.n_layers", &RunConfig::crossenc, &X::n_layers));
    b.push_back(nested("crossenc.d_ff", &RunConfig::crossenc, &X::d_ff));
    b.push_back(nested("crossenc.max_len", &RunConfig::crossenc, &X::max_len));
    b.push_back(nested("crossenc.dropout", &RunConfig::crossenc, &X::dropout_rate));
    b.push_back(nested("crossenc.vocab_min_freq", &RunConfig::crossenc, &X::vocab_min_freq));
    b.push_back(nested("crossenc.vocab_max_size", &RunConfig::crossenc, &X::vocab_max_size));
    using T = TrainConfig;
    b.push_back(nested("crossenc.batch_size", &RunConfig::train, &T::batch_size));
    b.push_back(nested("crossenc.epochs", &RunConfig::train, &T::epochs));
    b.push_back(nested("crossenc.lr", &RunConfig::train, &T::lr));
    b.push_back(nested("crossenc.weight_decay", &RunConfig::train, &T::weight_decay));

    b.push_back(number("eval.bins", &RunConfig::eval_bins));
    b.push_back({"eval.gain",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "linear") {
                     c.eval_gain = GainKind::linear;
                   } else if (v == "exponential") {
                     c.eval_gain = GainKind::exponential;
                   } else {
                     bad_value("eval.gain", v, "linear or exponential");
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.eval_gain == GainKind::linear ? "linear" : "exponential");
                 }});
    b.push_back(number("eval.min_impressions", &RunConfig::eval_min_impressions));
    b.push_back(number("eval.functionality_pairs", &RunConfig::functionality_pairs));
    b.push_back(number("eval.ratio_pos", &RunConfig::functionality_ratio_pos));
    b.push_back(number("eval.related_share", &RunConfig::functionality_related_share));

    b.push_back({"ablate.model", [](RunConfig& c, const std::string& v) { c.ablate_model = model_kind_from_string(v); },
                 [](const RunConfig& c) { return std::string(to_string(c.ablate_model)); }});
    b.push_back(path("score.pairs", &RunConfig::score_pairs));
    b.push_back(number("score.top_k", &RunConfig::score_top_k));
    return b;
  }();
  return table;
}

}  // namespace

const char* to_string(ModelKind kind) noexcept { return kind == ModelKind::gbdt ? "gbdt" : "crossenc"; }

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "gbdt") return ModelKind::gbdt;
  if (name == "crossenc") return ModelKind::crossenc;
  throw Error(ErrorKind::config, "unknown model '" + std::string(name) + "' (gbdt or crossenc)");
}

const char* to_string(LossChoice loss) noexcept {
  switch (loss) {
    case LossChoice::automatic: return "auto";
    case LossChoice::mse: return "mse";
    case LossChoice::logistic: return "logistic";
    case LossChoice::hinge: return "hinge";
  }
  return "?";
}

LossChoice loss_choice_from_string(std::string_view name) {
  if (name == "auto") return LossChoice::automatic;
  if (name == "mse") return LossChoice::mse;
  if (name == "logistic") return LossChoice::logistic;
  if (name == "hinge") return LossChoice::hinge;
  throw Error(ErrorKind::config, "unknown loss '" + std::string(name) + "'");
}

std::filesystem::path RunConfig::catalog_path() const { return catalog.empty() ? out / "catalog.jsonl" : catalog; }
std::filesystem::path RunConfig::traffic_path() const { return traffic.empty() ? out / "traffic.jsonl" : traffic; }
std::filesystem::path RunConfig::embeddings_path() const {
  return embeddings.empty() ? out / "embeddings.vec" : embeddings;
}
std::filesystem::path RunConfig::ground_truth_path() const {
  return ground_truth.empty() ? out / "ground_truth.jsonl" : ground_truth;
}
std::filesystem::path RunConfig::functionality_path() const {
  return functionality_set.empty() ? out / "functionality_eval.jsonl" : functionality_set;
}

Objective RunConfig::gbdt_objective() const {
  switch (loss) {
    case LossChoice::automatic:
      return label.spec.task == Task::classification ? Objective::logistic : Objective::mse;
    case LossChoice::mse: return Objective::mse;
    case LossChoice::logistic: return Objective::logistic;
    case LossChoice::hinge: return Objective::hinge;
  }
  return Objective::mse;
}

LossKind RunConfig::crossenc_loss() const {
  switch (gbdt_objective()) {
    case Objective::mse: return LossKind::mse;
    case Objective::logistic: return LossKind::logistic;
    case Objective::hinge: break;
  }
  throw Error(ErrorKind::config, "the cross-encoder supports mse and logistic losses only");
}

void RunConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw Error(ErrorKind::config, msg); };
  world.validate();
  label.validate();
  const Objective obj = gbdt_objective();
  if (obj != Objective::mse && label.spec.task != Task::classification) {
    fail(std::string("loss ") + to_string(obj) + " needs task = classification");
  }
  if (!(negative_ratio >= 0.0)) fail("negative_ratio must be >= 0");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) fail("val_fraction must be in (0,1)");
  gbdt.validate();
  if (model == ModelKind::crossenc || ablate_model == ModelKind::crossenc) {
    CrossEncoderConfig probe = crossenc;
    probe.vocab_size = 16;
    probe.validate();
    train.validate();
  }
  if (eval_bins < 2) fail("eval.bins must be >= 2");
  if (functionality_pairs < 2) fail("eval.functionality_pairs must be >= 2");
  if (!(functionality_ratio_pos > 0.0 && functionality_ratio_pos < 1.0)) fail("eval.ratio_pos must be in (0,1)");
  if (!(functionality_related_share >= 0.0 && functionality_related_share <= 1.0)) {
    fail("eval.related_share must be in [0,1]");
  }
  if (score_top_k < 1) fail("score.top_k must be >= 1");
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& b : bindings()) out += b.key + " = " + b.get(*this) + "\n";
  return out;
}

ConfigMap parse_config_text(std::string_view text, const std::string& origin) {
  ConfigMap out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '#' && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line = line.substr(0, i);
        break;
      }
    }
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw Error(ErrorKind::config, where + "expected 'key = value'");
    std::string key = trim(std::string_view(stripped).substr(0, eq));
    std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::config, where + "empty key");
    if (!out.emplace(key, value).second) throw Error(ErrorKind::config, where + "duplicate key '" + key + "'");
  }
  return out;
}

ConfigMap read_config_file(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorKind::config, "config file '" + path.string() + "' not found");
  }
  return parse_config_text(detail::read_text_file(path), path.string());
}

RunConfig make_run_config(const ConfigMap& base, const ConfigMap& overrides) {
  ConfigMap merged = base;
  for (const auto& [k, v] : overrides) merged[k] = v;
  RunConfig config;
  std::map<std::string, const Binding*> by_key;
  for (const auto& b : bindings()) by_key.emplace(b.key, &b);
  for (const auto& [k, v] : merged) {
    const auto it = by_key.find(k);
    if (it == by_key.end()) throw Error(ErrorKind::config, "unknown config key '" + k + "'");
    // Empty values keep the default.
    if (v.empty()) continue;
    it->second->set(config, v);
  }
  config.world.seed = config.seed;
  config.gbdt.seed = derive_seed(config.seed, "gbdt");
  config.train.seed = config.seed;
  config.validate();
  return config;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& b : bindings()) keys.push_back(b.key);
  std::sort(keys.begin(), keys.end());
  return keys;
}

}  // namespace subrank
