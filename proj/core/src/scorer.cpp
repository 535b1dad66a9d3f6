#include "subrank/scorer.hpp"

namespace subrank {

PairFeature pair_features(const ProductPair& pair, const EmbeddingTable& table, const StopwordFilter& stopwords) {
  const auto u = content_tokens(pair.query_title, pair.query_language, stopwords);
  const auto v = content_tokens(pair.candidate_title, pair.candidate_language, stopwords);
  return featurize_pair(u, v, table);
}

std::vector<PairFeature> pair_features(std::span<const LabeledPair> pairs, const EmbeddingTable& table,
                                       const StopwordFilter& stopwords) {
  std::vector<PairFeature> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(pair_features(p.pair, table, stopwords));
  return out;
}

std::vector<double> GbdtScorer::score(std::span<const ProductPair> pairs) const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(model_.predict(pair_features(p, table_, stopwords_).values));
  return out;
}

std::vector<double> CrossEncoderScorer::score(std::span<const ProductPair> pairs) const {
  return score_pairs(model_, pairs, vocab_);
}

std::vector<double> OracleScorer::score(std::span<const ProductPair> pairs) const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto q = category_of_.find(p.query_id);
    const auto c = category_of_.find(p.candidate_id);
    out.push_back(q != category_of_.end() && c != category_of_.end() && q->second == c->second ? 1.0 : 0.0);
  }
  return out;
}

}  // namespace subrank
