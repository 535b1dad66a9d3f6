#include "subrank/cross_encoder.hpp"

#include <cmath>
#include <limits>

#include "subrank/error.hpp"

namespace subrank {

namespace {

constexpr double kNormEps = 1e-5;
constexpr double kInitStd = 0.02;

using Eigen::VectorXd;

template <typename W, typename Block>
std::vector<Block> collect_blocks(W& w) {
  std::vector<Block> out;
  out.push_back({"token_embedding", &w.token_embedding});
  out.push_back({"position_embedding", &w.position_embedding});
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    auto& L = w.layers[l];
    const std::string p = "layers." + std::to_string(l) + ".";
    out.push_back({p + "norm1.gain", &L.norm1_gain});
    out.push_back({p + "norm1.bias", &L.norm1_bias});
    out.push_back({p + "attn.wq", &L.wq});
    out.push_back({p + "attn.bq", &L.bq});
    out.push_back({p + "attn.wk", &L.wk});
    out.push_back({p + "attn.bk", &L.bk});
    out.push_back({p + "attn.wv", &L.wv});
    out.push_back({p + "attn.bv", &L.bv});
    out.push_back({p + "attn.wo", &L.wo});
    out.push_back({p + "attn.bo", &L.bo});
    out.push_back({p + "norm2.gain", &L.norm2_gain});
    out.push_back({p + "norm2.bias", &L.norm2_bias});
    out.push_back({p + "ffn.w1", &L.w1});
    out.push_back({p + "ffn.b1", &L.b1});
    out.push_back({p + "ffn.w2", &L.w2});
    out.push_back({p + "ffn.b2", &L.b2});
  }
  out.push_back({"final_norm.gain", &w.final_norm_gain});
  out.push_back({"final_norm.bias", &w.final_norm_bias});
  out.push_back({"head.weight", &w.head_weight});
  out.push_back({"head.bias", &w.head_bias});
  return out;
}

// Row-wise layer norm. Returns the output; fills the normalized values and
// reciprocal standard deviations for backward.
Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, Matrix& hat, VectorXd& rstd) {
  const auto n = x.cols();
  hat.resize(x.rows(), n);
  rstd.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().sum() / static_cast<double>(n);
    rstd(r) = 1.0 / std::sqrt(var + kNormEps);
    hat.row(r) = (x.row(r).array() - mean) * rstd(r);
  }
  Matrix out = hat.array().rowwise() * gain.row(0).array();
  out.rowwise() += bias.row(0);
  return out;
}

// Accumulates gain/bias gradients and returns d(input).
Matrix layer_norm_backward(const Matrix& dout, const Matrix& hat, const VectorXd& rstd, const Matrix& gain,
                           Matrix& dgain, Matrix& dbias) {
  dgain += (dout.array() * hat.array()).colwise().sum().matrix();
  dbias += dout.colwise().sum();
  const Matrix dhat = dout.array().rowwise() * gain.row(0).array();
  Matrix dx(dout.rows(), dout.cols());
  for (Eigen::Index r = 0; r < dout.rows(); ++r) {
    const double mean_dhat = dhat.row(r).mean();
    const double mean_dhat_hat = (dhat.row(r).array() * hat.row(r).array()).mean();
    dx.row(r) = rstd(r) * (dhat.row(r).array() - mean_dhat - hat.row(r).array() * mean_dhat_hat);
  }
  return dx;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gelu_grad(double x) {
  constexpr double kInvSqrt2Pi = 0.3989422804014327;
  return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix mask(rows, cols);
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) mask(r, c) = keep(rng) ? scale : 0.0;
  }
  return mask;
}

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> dist(0.0, kInitStd);
  Matrix m(rows, cols);
  // Column-major fill order is part of the determinism contract.
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
  }
  return m;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

void CrossEncoderConfig::validate() const {
  if (vocab_size < static_cast<int>(Vocabulary::kReserved)) {
    throw Error(ErrorKind::config, "vocab_size must cover the 4 reserved tokens");
  }
  if (d_model < 1 || n_heads < 1 || n_layers < 1 || d_ff < 1 || max_len < 5) {
    throw Error(ErrorKind::config, "cross-encoder dimensions must be positive (max_len >= 5)");
  }
  if (d_model % n_heads != 0) {
    throw Error(ErrorKind::config, "d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
                                       std::to_string(n_heads));
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw Error(ErrorKind::config, "dropout_rate must lie in [0, 1)");
  }
  if (vocab_min_freq < 1 || vocab_max_size < static_cast<int>(Vocabulary::kReserved)) {
    throw Error(ErrorKind::config, "vocab_min_freq must be >= 1 and vocab_max_size >= 4");
  }
}

std::vector<NamedBlock<Matrix>> CrossEncoderWeights::blocks() {
  return collect_blocks<CrossEncoderWeights, NamedBlock<Matrix>>(*this);
}

std::vector<NamedBlock<const Matrix>> CrossEncoderWeights::blocks() const {
  return collect_blocks<const CrossEncoderWeights, NamedBlock<const Matrix>>(*this);
}

CrossEncoderWeights CrossEncoderWeights::zeros_like() const {
  CrossEncoderWeights z = *this;
  for (auto& b : z.blocks()) b.value->setZero();
  return z;
}

std::size_t CrossEncoderWeights::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks()) n += static_cast<std::size_t>(b.value->size());
  return n;
}

bool CrossEncoderWeights::all_finite() const {
  for (const auto& b : blocks()) {
    if (!b.value->allFinite()) return false;
  }
  return true;
}

CrossEncoderModel init_cross_encoder(const CrossEncoderConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const int d = config.d_model;
  CrossEncoderModel m;
  m.config = config;
  auto& w = m.weights;
  w.token_embedding = normal_matrix(config.vocab_size, d, rng);
  w.position_embedding = normal_matrix(config.max_len, d, rng);
  for (int l = 0; l < config.n_layers; ++l) {
    LayerWeights L;
    L.norm1_gain = Matrix::Ones(1, d);
    L.norm1_bias = Matrix::Zero(1, d);
    L.wq = normal_matrix(d, d, rng);
    L.bq = Matrix::Zero(1, d);
    L.wk = normal_matrix(d, d, rng);
    L.bk = Matrix::Zero(1, d);
    L.wv = normal_matrix(d, d, rng);
    L.bv = Matrix::Zero(1, d);
    L.wo = normal_matrix(d, d, rng);
    L.bo = Matrix::Zero(1, d);
    L.norm2_gain = Matrix::Ones(1, d);
    L.norm2_bias = Matrix::Zero(1, d);
    L.w1 = normal_matrix(d, config.d_ff, rng);
    L.b1 = Matrix::Zero(1, config.d_ff);
    L.w2 = normal_matrix(config.d_ff, d, rng);
    L.b2 = Matrix::Zero(1, d);
    w.layers.push_back(std::move(L));
  }
  w.final_norm_gain = Matrix::Ones(1, d);
  w.final_norm_bias = Matrix::Zero(1, d);
  w.head_weight = normal_matrix(d, 1, rng);
  w.head_bias = Matrix::Zero(1, 1);
  return m;
}

const char* to_string(LossKind kind) noexcept { return kind == LossKind::mse ? "mse" : "logistic"; }

LossKind loss_kind_from_string(std::string_view name) {
  if (name == "mse") return LossKind::mse;
  if (name == "logistic") return LossKind::logistic;
  throw Error(ErrorKind::config, "unknown cross-encoder loss '" + std::string(name) + "'");
}

ForwardResult forward(const CrossEncoderModel& model, std::span<const TokenSequence> batch,
                      const ForwardOptions& options) {
  const auto& cfg = model.config;
  const auto& w = model.weights;
  const int d = cfg.d_model;
  const int n_heads = cfg.n_heads;
  const int dh = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool dropout = options.training && cfg.dropout_rate > 0.0;
  if (dropout && options.rng == nullptr) {
    throw Error(ErrorKind::config, "training-mode forward needs a random generator for dropout");
  }

  ForwardResult result;
  result.scores.reserve(batch.size());
  result.cache.sequences.resize(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& seq = batch[b];
    if (seq.size() != static_cast<std::size_t>(cfg.max_len)) {
      throw Error(ErrorKind::data, "sequence " + std::to_string(b) + " has length " + std::to_string(seq.size()) +
                                       ", expected " + std::to_string(cfg.max_len));
    }
    auto& sc = result.cache.sequences[b];
    for (int t = 0; t < cfg.max_len; ++t) {
      const TokenId id = seq[static_cast<std::size_t>(t)];
      if (id < 0 || id >= cfg.vocab_size) {
        throw Error(ErrorKind::data, "token id " + std::to_string(id) + " out of range in sequence " +
                                         std::to_string(b));
      }
      if (id == Vocabulary::kPad && !options.include_pad_queries) continue;
      sc.positions.push_back(t);
      sc.ids.push_back(id);
      sc.key_valid.push_back(id != Vocabulary::kPad);
    }
    const auto rows = static_cast<Eigen::Index>(sc.positions.size());
    if (rows == 0 || sc.positions.front() != 0) {
      throw Error(ErrorKind::data, "sequence " + std::to_string(b) + " must start with a non-PAD token");
    }

    Matrix x(rows, d);
    for (Eigen::Index r = 0; r < rows; ++r) {
      x.row(r) = w.token_embedding.row(sc.ids[static_cast<std::size_t>(r)]) +
                 w.position_embedding.row(sc.positions[static_cast<std::size_t>(r)]);
    }

    sc.layers.resize(w.layers.size());
    for (std::size_t l = 0; l < w.layers.size(); ++l) {
      const auto& L = w.layers[l];
      auto& c = sc.layers[l];
      c.input = x;
      c.norm1_out = layer_norm(x, L.norm1_gain, L.norm1_bias, c.norm1_hat, c.norm1_rstd);
      c.q = c.norm1_out * L.wq;
      c.q.rowwise() += L.bq.row(0);
      c.k = c.norm1_out * L.wk;
      c.k.rowwise() += L.bk.row(0);
      c.v = c.norm1_out * L.wv;
      c.v.rowwise() += L.bv.row(0);

      c.context.resize(rows, d);
      c.attention.resize(static_cast<std::size_t>(n_heads));
      for (int h = 0; h < n_heads; ++h) {
        const auto qh = c.q.middleCols(h * dh, dh);
        const auto kh = c.k.middleCols(h * dh, dh);
        Matrix s = (qh * kh.transpose()) * scale;
        for (Eigen::Index i = 0; i < rows; ++i) {
          double mx = -std::numeric_limits<double>::infinity();
          for (Eigen::Index j = 0; j < rows; ++j) {
            if (sc.key_valid[static_cast<std::size_t>(j)]) mx = std::max(mx, s(i, j));
          }
          double total = 0.0;
          for (Eigen::Index j = 0; j < rows; ++j) {
            const double e = sc.key_valid[static_cast<std::size_t>(j)] ? std::exp(s(i, j) - mx) : 0.0;
            s(i, j) = e;
            total += e;
          }
          s.row(i) /= total;
        }
        c.context.middleCols(h * dh, dh) = s * c.v.middleCols(h * dh, dh);
        c.attention[static_cast<std::size_t>(h)] = std::move(s);
      }
      Matrix attn_out = c.context * L.wo;
      attn_out.rowwise() += L.bo.row(0);
      if (dropout) {
        c.attn_dropout_mask = dropout_mask(rows, d, cfg.dropout_rate, *options.rng);
        attn_out = attn_out.cwiseProduct(c.attn_dropout_mask);
      }
      c.mid = x + attn_out;

      c.norm2_out = layer_norm(c.mid, L.norm2_gain, L.norm2_bias, c.norm2_hat, c.norm2_rstd);
      c.ff_pre = c.norm2_out * L.w1;
      c.ff_pre.rowwise() += L.b1.row(0);
      c.ff_act = c.ff_pre.unaryExpr([](double v) { return gelu(v); });
      Matrix ff_out = c.ff_act * L.w2;
      ff_out.rowwise() += L.b2.row(0);
      if (dropout) {
        c.ff_dropout_mask = dropout_mask(rows, d, cfg.dropout_rate, *options.rng);
        ff_out = ff_out.cwiseProduct(c.ff_dropout_mask);
      }
      x = c.mid + ff_out;
    }

    // Only the CLS row feeds the head.
    const Matrix cls_in = x.topRows(1);
    sc.final_out = layer_norm(cls_in, w.final_norm_gain, w.final_norm_bias, sc.final_hat, sc.final_rstd);
    result.scores.push_back((sc.final_out * w.head_weight)(0, 0) + w.head_bias(0, 0));
  }
  return result;
}

CrossEncoderWeights backward(const CrossEncoderModel& model, const ForwardCache& cache,
                             std::span<const double> dscores) {
  const auto& cfg = model.config;
  const auto& w = model.weights;
  const int d = cfg.d_model;
  const int n_heads = cfg.n_heads;
  const int dh = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  if (dscores.size() != cache.sequences.size()) {
    throw Error(ErrorKind::data, "backward: gradient count does not match the batch");
  }

  CrossEncoderWeights g = w.zeros_like();
  for (std::size_t b = 0; b < cache.sequences.size(); ++b) {
    const auto& sc = cache.sequences[b];
    const double ds = dscores[b];
    if (ds == 0.0) continue;
    const auto rows = static_cast<Eigen::Index>(sc.positions.size());

    g.head_weight += ds * sc.final_out.transpose();
    g.head_bias(0, 0) += ds;
    const Matrix dfinal = ds * w.head_weight.transpose();
    Matrix dx = Matrix::Zero(rows, d);
    dx.topRows(1) = layer_norm_backward(dfinal, sc.final_hat, sc.final_rstd, w.final_norm_gain,
                                        g.final_norm_gain, g.final_norm_bias);

    for (std::size_t li = w.layers.size(); li-- > 0;) {
      const auto& L = w.layers[li];
      auto& G = g.layers[li];
      const auto& c = sc.layers[li];

      // Feed-forward branch.
      Matrix dff = dx;
      if (c.ff_dropout_mask.size() > 0) dff = dff.cwiseProduct(c.ff_dropout_mask);
      G.w2 += c.ff_act.transpose() * dff;
      G.b2 += dff.colwise().sum();
      Matrix dpre = dff * L.w2.transpose();
      dpre = dpre.cwiseProduct(c.ff_pre.unaryExpr([](double v) { return gelu_grad(v); }));
      G.w1 += c.norm2_out.transpose() * dpre;
      G.b1 += dpre.colwise().sum();
      const Matrix dnorm2 = dpre * L.w1.transpose();
      Matrix dmid = dx + layer_norm_backward(dnorm2, c.norm2_hat, c.norm2_rstd, L.norm2_gain, G.norm2_gain,
                                             G.norm2_bias);

      // Attention branch.
      Matrix dattn = dmid;
      if (c.attn_dropout_mask.size() > 0) dattn = dattn.cwiseProduct(c.attn_dropout_mask);
      G.wo += c.context.transpose() * dattn;
      G.bo += dattn.colwise().sum();
      const Matrix dcontext = dattn * L.wo.transpose();
      Matrix dq(rows, d), dk(rows, d), dv(rows, d);
      for (int h = 0; h < n_heads; ++h) {
        const auto& p = c.attention[static_cast<std::size_t>(h)];
        const auto dctx_h = dcontext.middleCols(h * dh, dh);
        const Matrix dp = dctx_h * c.v.middleCols(h * dh, dh).transpose();
        dv.middleCols(h * dh, dh) = p.transpose() * dctx_h;
        Matrix dscore = p.cwiseProduct(dp);
        const Eigen::VectorXd row_dot = dscore.rowwise().sum();
        dscore -= p.cwiseProduct(row_dot.replicate(1, rows));
        dscore *= scale;
        dq.middleCols(h * dh, dh) = dscore * c.k.middleCols(h * dh, dh);
        dk.middleCols(h * dh, dh) = dscore.transpose() * c.q.middleCols(h * dh, dh);
      }
      G.wq += c.norm1_out.transpose() * dq;
      G.bq += dq.colwise().sum();
      G.wk += c.norm1_out.transpose() * dk;
      G.bk += dk.colwise().sum();
      G.wv += c.norm1_out.transpose() * dv;
      G.bv += dv.colwise().sum();
      const Matrix dnorm1 = dq * L.wq.transpose() + dk * L.wk.transpose() + dv * L.wv.transpose();
      dx = dmid + layer_norm_backward(dnorm1, c.norm1_hat, c.norm1_rstd, L.norm1_gain, G.norm1_gain, G.norm1_bias);
    }

    for (Eigen::Index r = 0; r < rows; ++r) {
      g.token_embedding.row(sc.ids[static_cast<std::size_t>(r)]) += dx.row(r);
      g.position_embedding.row(sc.positions[static_cast<std::size_t>(r)]) += dx.row(r);
    }
  }
  return g;
}

double batch_loss(std::span<const double> scores, std::span<const double> labels, LossKind kind) {
  if (scores.size() != labels.size()) throw Error(ErrorKind::data, "scores and labels differ in length");
  if (scores.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (kind == LossKind::mse) {
      const double r = scores[i] - labels[i];
      total += r * r;
    } else {
      total += softplus(scores[i]) - labels[i] * scores[i];
    }
  }
  return total / static_cast<double>(scores.size());
}

LossAndGrad loss_and_grad(const CrossEncoderModel& model, std::span<const TokenSequence> batch,
                          std::span<const double> labels, LossKind kind, const ForwardOptions& options) {
  if (batch.size() != labels.size()) throw Error(ErrorKind::data, "batch and labels differ in length");
  auto fwd = forward(model, batch, options);
  LossAndGrad out;
  out.loss = batch_loss(fwd.scores, labels, kind);
  if (!std::isfinite(out.loss)) throw Error(ErrorKind::divergence, "non-finite loss");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  std::vector<double> dscores(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    dscores[i] = kind == LossKind::mse ? 2.0 * (fwd.scores[i] - labels[i]) * inv_n
                                       : (sigmoid(fwd.scores[i]) - labels[i]) * inv_n;
  }
  out.grad = backward(model, fwd.cache, dscores);
  out.scores = std::move(fwd.scores);
  return out;
}

Matrix attention_map(const ForwardCache& cache, std::size_t sequence, std::size_t layer, std::size_t head,
                     int max_len) {
  const auto& sc = cache.sequences.at(sequence);
  const auto& p = sc.layers.at(layer).attention.at(head);
  Matrix full = Matrix::Zero(max_len, max_len);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      full(sc.positions[static_cast<std::size_t>(i)], sc.positions[static_cast<std::size_t>(j)]) = p(i, j);
    }
  }
  return full;
}

}  // namespace subrank
