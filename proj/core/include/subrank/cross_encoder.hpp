#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "subrank/rng.hpp"
#include "subrank/vocab.hpp"

namespace subrank {

using Matrix = Eigen::MatrixXd;

struct CrossEncoderConfig {
  int vocab_size = 0;  // set from the vocabulary before init
  int d_model = 64;
  int n_heads = 4;
  int n_layers = 2;
  int d_ff = 128;
  int max_len = 64;
  double dropout_rate = 0.1;
  // Vocabulary construction.
  int vocab_min_freq = 2;
  int vocab_max_size = 20000;

  /// Throws Error(config); d_model must be divisible by n_heads.
  void validate() const;
  friend bool operator==(const CrossEncoderConfig&, const CrossEncoderConfig&) = default;
};

/// A named parameter block. Vectors are stored as 1 x n matrices.
template <typename M>
struct NamedBlock {
  std::string name;
  M* value;
};

struct LayerWeights {
  Matrix norm1_gain, norm1_bias;
  Matrix wq, bq, wk, bk, wv, bv, wo, bo;
  Matrix norm2_gain, norm2_bias;
  Matrix w1, b1, w2, b2;
};

/// All learnable parameters. Gradients use the same layout.
struct CrossEncoderWeights {
  Matrix token_embedding;     // vocab x d
  Matrix position_embedding;  // max_len x d
  std::vector<LayerWeights> layers;
  Matrix final_norm_gain, final_norm_bias;
  Matrix head_weight;  // d x 1
  Matrix head_bias;    // 1 x 1

  /// Blocks in their serialization order.
  std::vector<NamedBlock<Matrix>> blocks();
  std::vector<NamedBlock<const Matrix>> blocks() const;

  /// Same shapes, all zeros.
  CrossEncoderWeights zeros_like() const;
  std::size_t parameter_count() const;
  bool all_finite() const;
};

struct CrossEncoderModel {
  CrossEncoderConfig config;
  CrossEncoderWeights weights;
};

/// Embeddings, projections and the head weight ~ N(0, 0.02^2); norm gains 1;
/// all biases 0. Deterministic per seed.
CrossEncoderModel init_cross_encoder(const CrossEncoderConfig& config, std::uint64_t seed);

enum class LossKind { mse, logistic };

const char* to_string(LossKind kind) noexcept;
LossKind loss_kind_from_string(std::string_view name);

struct ForwardOptions {
  bool training = false;  // enables dropout; requires rng
  Rng* rng = nullptr;
  /// Also compute PAD query rows. They never influence the score, so the
  /// default skips them; diagnostics that inspect full attention maps
  /// turn this on.
  bool include_pad_queries = false;
};

/// Per-sequence intermediate values kept for the backward pass.
struct SequenceCache {
  std::vector<int> positions;     // original positions of the rows
  std::vector<TokenId> ids;       // token id of each row
  std::vector<char> key_valid;    // row may be attended to (not PAD)
  struct Layer {
    Matrix input;                 // rows x d
    Matrix norm1_hat, norm1_out;  // normalized, and after gain/bias
    Eigen::VectorXd norm1_rstd;
    Matrix q, k, v;
    std::vector<Matrix> attention;  // per head, rows x rows
    Matrix context;                 // concatenated head outputs
    Matrix attn_dropout_mask;       // empty when dropout is off
    Matrix mid;                     // input + attention branch
    Matrix norm2_hat, norm2_out;
    Eigen::VectorXd norm2_rstd;
    Matrix ff_pre, ff_act;
    Matrix ff_dropout_mask;
  };
  std::vector<Layer> layers;
  Matrix final_hat;  // only the CLS row is used downstream
  Eigen::VectorXd final_rstd;
  Matrix final_out;
};

struct ForwardCache {
  std::vector<SequenceCache> sequences;
};

struct ForwardResult {
  std::vector<double> scores;
  ForwardCache cache;
};

/// Scores a batch of encoded pairs. Each sequence must have length
/// max_len and ids below vocab_size (Error(data) otherwise).
ForwardResult forward(const CrossEncoderModel& model, std::span<const TokenSequence> batch,
                      const ForwardOptions& options = {});

/// Gradients of sum_b dscores[b] * score_b with respect to every parameter.
CrossEncoderWeights backward(const CrossEncoderModel& model, const ForwardCache& cache,
                             std::span<const double> dscores);

/// Mean loss over the batch: squared error, or binary cross-entropy on the
/// raw score as a logit.
double batch_loss(std::span<const double> scores, std::span<const double> labels, LossKind kind);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> scores;
  CrossEncoderWeights grad;
};

/// Throws Error(divergence) when the loss is not finite.
LossAndGrad loss_and_grad(const CrossEncoderModel& model, std::span<const TokenSequence> batch,
                          std::span<const double> labels, LossKind kind,
                          const ForwardOptions& options = {});

/// Attention map (max_len x max_len) of one head, scattered back to original
/// positions. Rows that were not computed stay zero.
Matrix attention_map(const ForwardCache& cache, std::size_t sequence, std::size_t layer,
                     std::size_t head, int max_len);

}  // namespace subrank
