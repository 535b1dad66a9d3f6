#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace subrank {

/// Word vectors of a fixed dimension, as read from a FastText `.vec` file.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return words_.size(); }
  const std::vector<std::string>& words() const noexcept { return words_; }

  /// Throws Error(data) on a wrong-length vector or a duplicate word.
  void add(std::string word, std::span<const double> vector);
  /// Empty span for out-of-vocabulary words.
  std::span<const double> lookup(const std::string& word) const;

 private:
  std::size_t dim_;
  std::vector<std::string> words_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// FastText text format: header "count dim", then "word v1 ... v_dim".
/// Errors name the offending line.
EmbeddingTable load_embeddings(const std::filesystem::path& path);
void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);

/// Element-wise sum of the in-vocabulary token vectors; zero vector when
/// nothing is in vocabulary.
std::vector<double> pool(std::span<const std::string> tokens, const EmbeddingTable& table);

/// pool(query) followed by pool(candidate); length 2 * dim.
struct PairFeature {
  std::vector<double> values;
};

PairFeature featurize_pair(std::span<const std::string> query_tokens,
                           std::span<const std::string> candidate_tokens,
                           const EmbeddingTable& table);

}  // namespace subrank
