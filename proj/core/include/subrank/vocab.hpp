#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace subrank {

using TokenId = std::int32_t;
using TokenSequence = std::vector<TokenId>;

/// Token vocabulary for the cross-encoder. Ids 0..3 are PAD, UNK, CLS, SEP.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kCls = 2;
  static constexpr TokenId kSep = 3;
  static constexpr std::size_t kReserved = 4;

  Vocabulary();
  /// `tokens` excludes the reserved entries; throws Error(data) on repeats.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  bool contains(const std::string& token) const { return ids_.contains(token); }
  TokenId id(const std::string& token) const;  // kUnk when absent

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// Tokens with frequency >= min_freq ordered by descending frequency then
/// lexicographically, truncated so the vocabulary (reserved ids included)
/// holds at most max_size entries.
Vocabulary build_vocab(std::span<const std::vector<std::string>> corpus, std::size_t min_freq,
                       std::size_t max_size);

/// [CLS] u [SEP] v [SEP] padded to max_len. When too long, the longer side
/// loses tokens from its end (ties trim the query side) until it fits.
/// Throws Error(config) for max_len < 5.
TokenSequence encode_pair(std::span<const std::string> query_tokens,
                          std::span<const std::string> candidate_tokens, const Vocabulary& vocab,
                          std::size_t max_len);

}  // namespace subrank
