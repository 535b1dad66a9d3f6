#pragma once

#include <cstdint>

#include "subrank/cross_encoder.hpp"

namespace subrank {

struct AdamWParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

/// First and second moments shaped like the parameters.
struct AdamWState {
  CrossEncoderWeights m;
  CrossEncoderWeights v;
  std::uint64_t step = 0;

  static AdamWState zeros_like(const CrossEncoderWeights& weights);
};

/// One AdamW update with bias-corrected moments. Weight decay is applied
/// directly to the weights (w -= lr * wd * w), not folded into the gradient.
void adamw_step(CrossEncoderWeights& weights, const CrossEncoderWeights& grad, AdamWState& state,
                const AdamWParams& params);

}  // namespace subrank
