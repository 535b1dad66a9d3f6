#include "subrank/crossenc_train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "jsonl.hpp"
#include "subrank/error.hpp"
#include "subrank/text.hpp"

namespace subrank {

namespace {

std::vector<TokenSequence> encode_all(std::span<const LabeledPair> pairs, const Vocabulary& vocab, int max_len) {
  std::vector<TokenSequence> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(encode_for_cross_encoder(p.pair, vocab, max_len));
  return out;
}

std::vector<double> labels_of(std::span<const LabeledPair> pairs) {
  std::vector<double> y;
  y.reserve(pairs.size());
  for (const auto& p : pairs) y.push_back(p.label);
  return y;
}

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xFFU) << (8 * (7 - i));
    return r;
  }
}

std::filesystem::path data_path(const std::filesystem::path& manifest) {
  auto p = manifest;
  p.replace_extension(".bin");
  return p;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorKind::config, "batch_size must be >= 1");
  if (epochs < 0) throw Error(ErrorKind::config, "epochs must be >= 0");
  if (!(lr > 0.0)) throw Error(ErrorKind::config, "lr must be > 0");
  if (!(weight_decay >= 0.0)) throw Error(ErrorKind::config, "weight_decay must be >= 0");
}

TokenSequence encode_for_cross_encoder(const ProductPair& pair, const Vocabulary& vocab, int max_len) {
  const auto u = tokenize(pair.query_title, pair.query_language);
  const auto v = tokenize(pair.candidate_title, pair.candidate_language);
  return encode_pair(u, v, vocab, static_cast<std::size_t>(max_len));
}

Vocabulary build_pair_vocab(std::span<const LabeledPair> pairs, const CrossEncoderConfig& config) {
  std::vector<std::vector<std::string>> corpus;
  corpus.reserve(2 * pairs.size());
  for (const auto& p : pairs) {
    corpus.push_back(tokenize(p.pair.query_title, p.pair.query_language));
    corpus.push_back(tokenize(p.pair.candidate_title, p.pair.candidate_language));
  }
  return build_vocab(corpus, static_cast<std::size_t>(config.vocab_min_freq),
                     static_cast<std::size_t>(config.vocab_max_size));
}

double evaluate_loss(const CrossEncoderModel& model, std::span<const TokenSequence> sequences,
                     std::span<const double> labels, LossKind kind, std::size_t batch_size) {
  if (sequences.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> scores;
  scores.reserve(sequences.size());
  for (std::size_t start = 0; start < sequences.size(); start += batch_size) {
    const auto n = std::min(batch_size, sequences.size() - start);
    const auto r = forward(model, sequences.subspan(start, n));
    scores.insert(scores.end(), r.scores.begin(), r.scores.end());
  }
  return batch_loss(scores, labels, kind);
}

CrossEncoderTrainResult train_cross_encoder(const DatasetSplit& data, const Vocabulary& vocab,
                                            CrossEncoderConfig config, const TrainConfig& train) {
  train.validate();
  if (data.train.empty()) throw Error(ErrorKind::data, "cross-encoder training set is empty");
  config.vocab_size = static_cast<int>(vocab.size());
  CrossEncoderTrainResult result;
  result.model = init_cross_encoder(config, derive_seed(train.seed, "init"));
  if (train.epochs == 0) return result;

  const auto x_train = encode_all(data.train, vocab, config.max_len);
  const auto y_train = labels_of(data.train);
  const auto x_val = encode_all(data.validation, vocab, config.max_len);
  const auto y_val = labels_of(data.validation);

  CrossEncoderModel model = result.model;
  AdamWState state = AdamWState::zeros_like(model.weights);
  const AdamWParams adam{train.lr, 0.9, 0.999, 1e-8, train.weight_decay};
  Rng shuffle_rng(derive_seed(train.seed, "shuffle"));
  Rng dropout_rng(derive_seed(train.seed, "dropout"));
  ForwardOptions opts;
  opts.training = true;
  opts.rng = &dropout_rng;

  std::vector<std::size_t> order(x_train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  std::vector<TokenSequence> batch;
  std::vector<double> batch_labels;
  const auto bs = static_cast<std::size_t>(train.batch_size);

  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += bs, ++batch_index) {
      const auto n = std::min(bs, order.size() - start);
      batch.clear();
      batch_labels.clear();
      for (std::size_t k = 0; k < n; ++k) {
        batch.push_back(x_train[order[start + k]]);
        batch_labels.push_back(y_train[order[start + k]]);
      }
      LossAndGrad lg;
      try {
        lg = loss_and_grad(model, batch, batch_labels, train.loss, opts);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::divergence) throw;
        throw Error(ErrorKind::divergence, "non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                               std::to_string(batch_index));
      }
      loss_sum += lg.loss * static_cast<double>(n);
      adamw_step(model.weights, lg.grad, state, adam);
      if (!model.weights.all_finite()) {
        throw Error(ErrorKind::divergence, "non-finite parameters after epoch " + std::to_string(epoch) +
                                               ", batch " + std::to_string(batch_index));
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val_loss = evaluate_loss(model, x_val, y_val, train.loss);
    result.history.push_back(rec);
    const double criterion = x_val.empty() ? -static_cast<double>(epoch) : rec.val_loss;
    if (criterion <= best) {
      best = criterion;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  return result;
}

std::vector<double> score_pairs(const CrossEncoderModel& model, std::span<const ProductPair> pairs,
                                const Vocabulary& vocab, std::size_t batch_size) {
  std::vector<double> scores;
  scores.reserve(pairs.size());
  std::vector<TokenSequence> batch;
  for (std::size_t start = 0; start < pairs.size(); start += batch_size) {
    const auto n = std::min(batch_size, pairs.size() - start);
    batch.clear();
    for (std::size_t k = 0; k < n; ++k) {
      batch.push_back(encode_for_cross_encoder(pairs[start + k], vocab, model.config.max_len));
    }
    const auto r = forward(model, batch);
    scores.insert(scores.end(), r.scores.begin(), r.scores.end());
  }
  return scores;
}

void save_cross_encoder(const std::filesystem::path& manifest, const CrossEncoderModel& model,
                        const Vocabulary& vocab) {
  const auto& c = model.config;
  detail::Json j;
  j["format"] = "subrank-crossenc";
  j["version"] = 1;
  j["config"] = {{"vocab_size", c.vocab_size}, {"d_model", c.d_model},       {"n_heads", c.n_heads},
                 {"n_layers", c.n_layers},     {"d_ff", c.d_ff},             {"max_len", c.max_len},
                 {"dropout_rate", c.dropout_rate}, {"vocab_min_freq", c.vocab_min_freq},
                 {"vocab_max_size", c.vocab_max_size}};
  j["vocab"] = vocab.tokens();
  j["dtype"] = "float64";
  j["byte_order"] = "little";
  j["element_order"] = "row-major";
  j["data_file"] = data_path(manifest).filename().string();
  auto layout = detail::Json::array();
  std::size_t offset = 0;
  for (const auto& b : model.weights.blocks()) {
    layout.push_back({{"name", b.name}, {"rows", b.value->rows()}, {"cols", b.value->cols()}, {"offset", offset}});
    offset += static_cast<std::size_t>(b.value->size());
  }
  j["parameters"] = std::move(layout);
  j["parameter_count"] = offset;
  detail::write_text_file(manifest, j.dump(1) + "\n");

  std::ofstream out(data_path(manifest), std::ios::binary);
  if (!out) throw Error(ErrorKind::data, "cannot write '" + data_path(manifest).string() + "'");
  for (const auto& b : model.weights.blocks()) {
    const auto& m = *b.value;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index col = 0; col < m.cols(); ++col) {
        const auto bits = to_little_endian(std::bit_cast<std::uint64_t>(m(r, col)));
        out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
      }
    }
  }
}

LoadedCrossEncoder load_cross_encoder(const std::filesystem::path& manifest) {
  detail::Json j;
  try {
    j = detail::Json::parse(detail::read_text_file(manifest));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::data, "malformed cross-encoder manifest: " + std::string(e.what()));
  }
  try {
    if (j.at("format").get<std::string>() != "subrank-crossenc") {
      throw Error(ErrorKind::data, "not a cross-encoder manifest");
    }
    const auto& jc = j.at("config");
    CrossEncoderConfig c;
    c.vocab_size = jc.at("vocab_size").get<int>();
    c.d_model = jc.at("d_model").get<int>();
    c.n_heads = jc.at("n_heads").get<int>();
    c.n_layers = jc.at("n_layers").get<int>();
    c.d_ff = jc.at("d_ff").get<int>();
    c.max_len = jc.at("max_len").get<int>();
    c.dropout_rate = jc.at("dropout_rate").get<double>();
    c.vocab_min_freq = jc.at("vocab_min_freq").get<int>();
    c.vocab_max_size = jc.at("vocab_max_size").get<int>();
    auto tokens = j.at("vocab").get<std::vector<std::string>>();
    if (tokens.size() < Vocabulary::kReserved) throw Error(ErrorKind::data, "vocabulary lacks reserved tokens");
    Vocabulary vocab(std::vector<std::string>(tokens.begin() + Vocabulary::kReserved, tokens.end()));
    if (vocab.tokens() != tokens) throw Error(ErrorKind::data, "vocabulary reserved tokens are out of place");

    LoadedCrossEncoder loaded{init_cross_encoder(c, 0), std::move(vocab)};
    const auto path = manifest.parent_path() / j.at("data_file").get<std::string>();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::data, "cannot open '" + path.string() + "'");
    auto blocks = loaded.model.weights.blocks();
    const auto& layout = j.at("parameters");
    if (layout.size() != blocks.size()) throw Error(ErrorKind::data, "parameter layout does not match config");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      auto& m = *blocks[i].value;
      if (layout[i].at("name").get<std::string>() != blocks[i].name ||
          layout[i].at("rows").get<Eigen::Index>() != m.rows() ||
          layout[i].at("cols").get<Eigen::Index>() != m.cols()) {
        throw Error(ErrorKind::data, "parameter block " + blocks[i].name + " does not match the layout");
      }
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index col = 0; col < m.cols(); ++col) {
          std::uint64_t bits = 0;
          if (!in.read(reinterpret_cast<char*>(&bits), sizeof(bits))) {
            throw Error(ErrorKind::data, "parameter file '" + path.string() + "' is truncated");
          }
          m(r, col) = std::bit_cast<double>(to_little_endian(bits));
        }
      }
    }
    if (in.peek() != std::char_traits<char>::eof()) {
      throw Error(ErrorKind::data, "parameter file '" + path.string() + "' has trailing bytes");
    }
    return loaded;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::data, "malformed cross-encoder manifest: " + std::string(e.what()));
  }
}

}  // namespace subrank
