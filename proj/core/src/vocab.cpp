#include "subrank/vocab.hpp"

#include <algorithm>
#include <map>

#include "subrank/error.hpp"

namespace subrank {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  tokens_ = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
  tokens_.insert(tokens_.end(), std::make_move_iterator(tokens.begin()),
                 std::make_move_iterator(tokens.end()));
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw Error(ErrorKind::data, "duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

TokenId Vocabulary::id(const std::string& token) const {
  const auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

Vocabulary build_vocab(std::span<const std::vector<std::string>> corpus, std::size_t min_freq,
                       std::size_t max_size) {
  std::map<std::string, std::size_t> freq;
  for (const auto& doc : corpus) {
    for (const auto& t : doc) ++freq[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [token, n] : freq) {
    if (n >= min_freq) ranked.emplace_back(token, n);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  const std::size_t room = max_size > Vocabulary::kReserved ? max_size - Vocabulary::kReserved : 0;
  if (ranked.size() > room) ranked.resize(room);
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [token, n] : ranked) tokens.push_back(std::move(token));
  return Vocabulary(std::move(tokens));
}

TokenSequence encode_pair(std::span<const std::string> query_tokens,
                          std::span<const std::string> candidate_tokens, const Vocabulary& vocab,
                          std::size_t max_len) {
  if (max_len < 5) throw Error(ErrorKind::config, "max_len must be at least 5");
  std::size_t nu = query_tokens.size();
  std::size_t nv = candidate_tokens.size();
  while (nu + nv + 3 > max_len) {
    if (nu >= nv) {
      --nu;
    } else {
      --nv;
    }
  }
  TokenSequence ids;
  ids.reserve(max_len);
  ids.push_back(Vocabulary::kCls);
  for (std::size_t i = 0; i < nu; ++i) ids.push_back(vocab.id(query_tokens[i]));
  ids.push_back(Vocabulary::kSep);
  for (std::size_t i = 0; i < nv; ++i) ids.push_back(vocab.id(candidate_tokens[i]));
  ids.push_back(Vocabulary::kSep);
  ids.resize(max_len, Vocabulary::kPad);
  return ids;
}

}  // namespace subrank
