#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "subrank/crossenc_train.hpp"
#include "subrank/embeddings.hpp"
#include "subrank/gbdt.hpp"
#include "subrank/text.hpp"
#include "subrank/types.hpp"

namespace subrank {

/// Anything that maps title pairs to substitute scores.
class PairScorer {
 public:
  virtual ~PairScorer() = default;
  virtual std::vector<double> score(std::span<const ProductPair> pairs) const = 0;
};

/// Title-only GBDT features: stopword-filtered tokens, summed embeddings,
/// query half then candidate half.
PairFeature pair_features(const ProductPair& pair, const EmbeddingTable& table,
                          const StopwordFilter& stopwords);

std::vector<PairFeature> pair_features(std::span<const LabeledPair> pairs, const EmbeddingTable& table,
                                       const StopwordFilter& stopwords);

class GbdtScorer final : public PairScorer {
 public:
  GbdtScorer(GbdtModel model, const EmbeddingTable& table, StopwordFilter stopwords)
      : model_(std::move(model)), table_(table), stopwords_(std::move(stopwords)) {}

  std::vector<double> score(std::span<const ProductPair> pairs) const override;

 private:
  GbdtModel model_;
  const EmbeddingTable& table_;
  StopwordFilter stopwords_;
};

class CrossEncoderScorer final : public PairScorer {
 public:
  CrossEncoderScorer(CrossEncoderModel model, Vocabulary vocab)
      : model_(std::move(model)), vocab_(std::move(vocab)) {}

  std::vector<double> score(std::span<const ProductPair> pairs) const override;

 private:
  CrossEncoderModel model_;
  Vocabulary vocab_;
};

/// Debug scorer backed by ground-truth categories: 1 for same category,
/// 0 otherwise (and for unknown products).
class OracleScorer final : public PairScorer {
 public:
  explicit OracleScorer(std::unordered_map<std::string, int> category_of)
      : category_of_(std::move(category_of)) {}

  std::vector<double> score(std::span<const ProductPair> pairs) const override;

 private:
  std::unordered_map<std::string, int> category_of_;
};

}  // namespace subrank
