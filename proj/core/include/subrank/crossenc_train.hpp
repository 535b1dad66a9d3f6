#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "subrank/adamw.hpp"
#include "subrank/cross_encoder.hpp"
#include "subrank/types.hpp"
#include "subrank/vocab.hpp"

namespace subrank {

/// Desk-scale defaults; the production setting was batch 512 with lr 4e-5
/// on a pretrained backbone.
struct TrainConfig {
  int batch_size = 64;
  int epochs = 3;
  double lr = 1e-3;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::mse;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN when there is no validation set
};

struct CrossEncoderTrainResult {
  CrossEncoderModel model;  // best-validation snapshot (last epoch without validation)
  std::vector<EpochRecord> history;
  int best_epoch = -1;
};

/// Cross-encoder input tokens: tokenized titles, stopwords kept.
TokenSequence encode_for_cross_encoder(const ProductPair& pair, const Vocabulary& vocab, int max_len);

/// Vocabulary over both titles of every training pair.
Vocabulary build_pair_vocab(std::span<const LabeledPair> pairs, const CrossEncoderConfig& config);

/// Seeded per-epoch shuffling, AdamW updates with dropout, eval-mode
/// validation loss after each epoch. Throws Error(data) on an empty train
/// set and Error(divergence) naming the epoch and batch on a non-finite loss.
CrossEncoderTrainResult train_cross_encoder(const DatasetSplit& data, const Vocabulary& vocab,
                                            CrossEncoderConfig config, const TrainConfig& train);

/// Eval-mode mean loss over `pairs`.
double evaluate_loss(const CrossEncoderModel& model, std::span<const TokenSequence> sequences,
                     std::span<const double> labels, LossKind kind, std::size_t batch_size = 256);

/// Dropout off; one score per pair, computed in batches.
std::vector<double> score_pairs(const CrossEncoderModel& model, std::span<const ProductPair> pairs,
                                const Vocabulary& vocab, std::size_t batch_size = 256);

/// Writes `manifest` (JSON: config, vocabulary, parameter layout) and a
/// sibling `.bin` file of little-endian float64 parameters in layout order.
void save_cross_encoder(const std::filesystem::path& manifest, const CrossEncoderModel& model,
                        const Vocabulary& vocab);

struct LoadedCrossEncoder {
  CrossEncoderModel model;
  Vocabulary vocab;
};

LoadedCrossEncoder load_cross_encoder(const std::filesystem::path& manifest);

}  // namespace subrank
