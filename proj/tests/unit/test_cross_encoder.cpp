#include <cmath>

#include "crossenc_fixtures.hpp"
#include "doctest.h"
#include "expect_error.hpp"
#include "subrank/adamw.hpp"
#include "subrank/crossenc_train.hpp"
#include "temp_dir.hpp"

using namespace subrank;
using testing_support::error_kind;

namespace {

CrossEncoderConfig small_config() {
  CrossEncoderConfig c;
  c.vocab_size = 20;
  c.d_model = 8;
  c.n_heads = 2;
  c.n_layers = 2;
  c.d_ff = 16;
  c.max_len = 10;
  return c;
}

bool same_weights(const CrossEncoderWeights& a, const CrossEncoderWeights& b) {
  const auto x = a.blocks();
  const auto y = b.blocks();
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].value->rows() != y[i].value->rows() || x[i].value->cols() != y[i].value->cols()) return false;
    if (*x[i].value != *y[i].value) return false;
  }
  return true;
}

LabeledPair titled(const std::string& q, const std::string& c, double label) {
  LabeledPair p;
  p.pair.query_id = q;
  p.pair.candidate_id = c;
  p.pair.query_title = q + " vitamin tablets";
  p.pair.candidate_title = c + " vitamin capsules";
  p.pair.query_language = p.pair.candidate_language = "en";
  p.label = label;
  return p;
}

}  // namespace

TEST_CASE("init is deterministic and follows the stated scheme") {
  const auto a = init_cross_encoder(small_config(), 3);
  const auto b = init_cross_encoder(small_config(), 3);
  CHECK(same_weights(a.weights, b.weights));
  CHECK(!same_weights(a.weights, init_cross_encoder(small_config(), 4).weights));
  for (const auto& block : a.weights.blocks()) {
    const auto& m = *block.value;
    const auto tail = block.name.substr(block.name.rfind('.') + 1);
    if (tail == "gain") {
      CHECK_MESSAGE((m.array() == 1.0).all(), block.name);
    } else if (tail == "bias" || tail == "bq" || tail == "bk" || tail == "bv" || tail == "bo" || tail == "b1" ||
               tail == "b2") {
      CHECK_MESSAGE((m.array() == 0.0).all(), block.name);
    } else {
      CHECK_MESSAGE(m.allFinite(), block.name);
      CHECK_MESSAGE(m.cwiseAbs().maxCoeff() > 0.0, block.name);
    }
  }
  CHECK(a.weights.token_embedding.rows() == 20);
  CHECK(a.weights.position_embedding.rows() == 10);
  const double sd = std::sqrt(a.weights.token_embedding.array().square().mean());
  CHECK(sd == doctest::Approx(0.02).epsilon(0.2));
}

TEST_CASE("config validation") {
  auto c = small_config();
  c.d_model = 6;
  c.n_heads = 4;
  CHECK(error_kind([&] { init_cross_encoder(c, 1); }) == ErrorKind::config);
  c = small_config();
  c.vocab_size = 0;
  CHECK(error_kind([&] { c.validate(); }) == ErrorKind::config);
}

TEST_CASE("forward returns one finite score per sequence and validates input") {
  const auto model = testing_support::reference_tiny_model();
  const auto batch = testing_support::reference_batch();
  const auto res = forward(model, batch);
  REQUIRE(res.scores.size() == batch.size());
  for (double s : res.scores) CHECK(std::isfinite(s));

  auto wrong_len = batch;
  wrong_len[0].pop_back();
  CHECK(error_kind([&] { forward(model, wrong_len); }) == ErrorKind::data);
  auto bad_id = batch;
  bad_id[1][1] = 16;
  CHECK(error_kind([&] { forward(model, bad_id); }) == ErrorKind::data);
}

TEST_CASE("attention rows sum to one and PAD keys get zero weight") {
  const auto model = testing_support::reference_tiny_model();
  const auto batch = testing_support::reference_batch();
  ForwardOptions opts;
  opts.include_pad_queries = true;
  const auto res = forward(model, batch, opts);
  for (std::size_t s = 0; s < batch.size(); ++s) {
    for (int h = 0; h < model.config.n_heads; ++h) {
      const auto a = attention_map(res.cache, s, 0, static_cast<std::size_t>(h), model.config.max_len);
      for (int i = 0; i < model.config.max_len; ++i) {
        CHECK(std::abs(a.row(i).sum() - 1.0) <= 1e-6);
        for (int j = 0; j < model.config.max_len; ++j) {
          if (batch[s][static_cast<std::size_t>(j)] == Vocabulary::kPad) CHECK(a(i, j) == 0.0);
        }
      }
    }
  }
}

TEST_CASE("PAD query rows do not change scores") {
  const auto model = testing_support::reference_tiny_model();
  const auto batch = testing_support::reference_batch();
  ForwardOptions full;
  full.include_pad_queries = true;
  const auto a = forward(model, batch).scores;
  const auto b = forward(model, batch, full).scores;
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("zero head with matching constant labels gives zero loss and zero head gradient") {
  auto model = testing_support::reference_tiny_model();
  model.weights.head_weight.setZero();
  model.weights.head_bias(0, 0) = 0.25;
  const auto batch = testing_support::reference_batch();
  const std::vector<double> labels(batch.size(), 0.25);
  const auto lg = loss_and_grad(model, batch, labels, LossKind::mse);
  CHECK(lg.loss == 0.0);
  CHECK(lg.grad.head_weight.norm() == 0.0);
}

TEST_CASE("mse loss equals the mean squared residual of the scores") {
  const auto model = testing_support::reference_tiny_model();
  const auto batch = testing_support::reference_batch();
  const auto labels = testing_support::reference_labels();
  const auto lg = loss_and_grad(model, batch, labels, LossKind::mse);
  double want = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) want += (lg.scores[i] - labels[i]) * (lg.scores[i] - labels[i]);
  want /= static_cast<double>(labels.size());
  CHECK(lg.loss == doctest::Approx(want).epsilon(1e-12));
  const std::vector<double> y{1, 0};
  const std::vector<double> s{0.3, -0.4};
  const double bce = (std::log1p(std::exp(-0.3)) + std::log1p(std::exp(-0.4))) / 2.0;
  CHECK(batch_loss(s, y, LossKind::logistic) == doctest::Approx(bce).epsilon(1e-12));
}

TEST_CASE("analytic gradients match finite differences") {
  const auto model = testing_support::reference_tiny_model();
  const auto batch = testing_support::reference_batch();
  for (auto kind : {LossKind::mse, LossKind::logistic}) {
    const auto labels = kind == LossKind::mse ? testing_support::reference_labels()
                                              : testing_support::reference_binary_labels();
    for (const auto& e : testing_support::gradient_check(model, batch, labels, kind)) {
      CHECK_MESSAGE(e.relative_error < 1e-4, e.name, " relative error ", e.relative_error);
    }
  }
}

TEST_CASE("non-finite loss is a divergence error") {
  auto model = testing_support::reference_tiny_model();
  const auto batch = testing_support::reference_batch();
  std::vector<double> labels(batch.size(), std::nan(""));
  CHECK(error_kind([&] { loss_and_grad(model, batch, labels, LossKind::mse); }) == ErrorKind::divergence);
}

TEST_CASE("adamw_step") {
  auto base = testing_support::reference_tiny_model().weights;
  const auto zero = base.zeros_like();

  SUBCASE("zero gradient and no decay leave weights unchanged") {
    auto w = base;
    auto state = AdamWState::zeros_like(w);
    adamw_step(w, zero, state, AdamWParams{1e-2, 0.9, 0.999, 1e-8, 0.0});
    CHECK(same_weights(w, base));
    CHECK(state.step == 1);
  }
  SUBCASE("zero gradient with decay scales by 1 - lr * wd") {
    auto w = base;
    auto state = AdamWState::zeros_like(w);
    const double lr = 0.05, wd = 0.2;
    adamw_step(w, zero, state, AdamWParams{lr, 0.9, 0.999, 1e-8, wd});
    const auto a = w.blocks();
    const auto b = base.blocks();
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK((*a[i].value - (1.0 - lr * wd) * *b[i].value).cwiseAbs().maxCoeff() <= 1e-15);
    }
  }
  SUBCASE("two scalar steps match the hand-computed update") {
    auto w = base;
    auto grad = zero;
    auto state = AdamWState::zeros_like(w);
    const AdamWParams p{0.1, 0.9, 0.999, 1e-8, 0.01};
    double x = w.head_bias(0, 0) = 0.5;
    double m = 0, v = 0;
    for (int t = 1; t <= 2; ++t) {
      const double g = t == 1 ? 2.0 : -1.0;
      grad.head_bias(0, 0) = g;
      adamw_step(w, grad, state, p);
      m = 0.9 * m + 0.1 * g;
      v = 0.999 * v + 0.001 * g * g;
      const double mhat = m / (1 - std::pow(0.9, t));
      const double vhat = v / (1 - std::pow(0.999, t));
      x = x - 0.1 * 0.01 * x - 0.1 * mhat / (std::sqrt(vhat) + 1e-8);
      CHECK(w.head_bias(0, 0) == doctest::Approx(x).epsilon(1e-14));
    }
    // First step is lr * sign(g) on top of the decay.
    CHECK(state.step == 2);
  }
}

TEST_CASE("training: epochs 0, determinism, empty set") {
  DatasetSplit split;
  for (int i = 0; i < 12; ++i) split.train.push_back(titled("q" + std::to_string(i), "c" + std::to_string(i), i % 3));
  split.validation.push_back(titled("vq", "vc", 1.0));
  auto c = small_config();
  c.vocab_min_freq = 1;
  const auto vocab = build_pair_vocab(split.train, c);
  TrainConfig t;
  t.epochs = 0;
  t.seed = 9;
  const auto r0 = train_cross_encoder(split, vocab, c, t);
  CHECK(r0.history.empty());
  c.vocab_size = static_cast<int>(vocab.size());
  CHECK(same_weights(r0.model.weights, init_cross_encoder(c, derive_seed(9, "init")).weights));

  t.epochs = 3;
  t.batch_size = 5;
  const auto a = train_cross_encoder(split, vocab, c, t);
  const auto b = train_cross_encoder(split, vocab, c, t);
  REQUIRE(a.history.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].val_loss == b.history[i].val_loss);
  }
  CHECK(same_weights(a.model.weights, b.model.weights));
  double best = a.history[static_cast<std::size_t>(a.best_epoch)].val_loss;
  for (const auto& h : a.history) CHECK(best <= h.val_loss);

  DatasetSplit empty;
  CHECK(error_kind([&] { train_cross_encoder(empty, vocab, c, t); }) == ErrorKind::data);
}

TEST_CASE("64-pair memorization") {
  const auto run = testing_support::memorize(1);
  CHECK(run.final_mse < 0.01 * run.initial_mse);
  const auto again = testing_support::memorize(1, 5);
  const auto prefix = testing_support::memorize(1, 5);
  REQUIRE(again.history.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(again.history[i].train_loss == prefix.history[i].train_loss);
  for (std::size_t i = 0; i < 5; ++i) CHECK(again.history[i].train_loss == run.history[i].train_loss);
}

TEST_CASE("scoring: repeatable, batch equals sequential, order sensitive, round-trips") {
  DatasetSplit split;
  for (int i = 0; i < 20; ++i) split.train.push_back(titled("q" + std::to_string(i), "c" + std::to_string(i % 7), i % 2));
  auto c = small_config();
  c.vocab_min_freq = 1;
  const auto vocab = build_pair_vocab(split.train, c);
  TrainConfig t;
  t.epochs = 2;
  t.batch_size = 4;
  const auto model = train_cross_encoder(split, vocab, c, t).model;

  std::vector<ProductPair> pairs;
  for (const auto& p : split.train) pairs.push_back(p.pair);
  const auto batch_scores = score_pairs(model, pairs, vocab, 7);
  CHECK(score_pairs(model, pairs, vocab, 7) == batch_scores);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::vector<ProductPair> one{pairs[i]};
    CHECK(std::abs(score_pairs(model, one, vocab)[0] - batch_scores[i]) <= 1e-9);
  }
  auto swapped = pairs[0];
  std::swap(swapped.query_title, swapped.candidate_title);
  const std::vector<ProductPair> sw{swapped};
  CHECK(score_pairs(model, sw, vocab)[0] != batch_scores[0]);

  testing_support::TempDir dir;
  save_cross_encoder(dir / "model.json", model, vocab);
  const auto loaded = load_cross_encoder(dir / "model.json");
  CHECK(loaded.vocab.tokens() == vocab.tokens());
  CHECK(loaded.model.config == model.config);
  CHECK(same_weights(loaded.model.weights, model.weights));
  CHECK(score_pairs(loaded.model, pairs, loaded.vocab) == batch_scores);
}
