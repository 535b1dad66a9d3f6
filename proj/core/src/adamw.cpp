#include "subrank/adamw.hpp"

#include <cmath>

#include "subrank/error.hpp"

namespace subrank {

AdamWState AdamWState::zeros_like(const CrossEncoderWeights& weights) {
  return {weights.zeros_like(), weights.zeros_like(), 0};
}

void adamw_step(CrossEncoderWeights& weights, const CrossEncoderWeights& grad, AdamWState& state,
                const AdamWParams& params) {
  auto w = weights.blocks();
  const auto g = grad.blocks();
  auto m = state.m.blocks();
  auto v = state.v.blocks();
  if (g.size() != w.size() || m.size() != w.size() || v.size() != w.size()) {
    throw Error(ErrorKind::data, "adamw: parameter, gradient and state layouts differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(params.beta1, t);
  const double bc2 = 1.0 - std::pow(params.beta2, t);
  for (std::size_t b = 0; b < w.size(); ++b) {
    auto& W = *w[b].value;
    const auto& G = *g[b].value;
    auto& M = *m[b].value;
    auto& V = *v[b].value;
    if (G.rows() != W.rows() || G.cols() != W.cols() || M.rows() != W.rows() || M.cols() != W.cols()) {
      throw Error(ErrorKind::data, "adamw: shape mismatch in block " + w[b].name);
    }
    M = params.beta1 * M + (1.0 - params.beta1) * G;
    V = params.beta2 * V + (1.0 - params.beta2) * G.cwiseProduct(G);
    W -= params.lr * params.weight_decay * W;
    W.array() -= params.lr * (M.array() / bc1) / ((V.array() / bc2).sqrt() + params.epsilon);
  }
}

}  // namespace subrank
