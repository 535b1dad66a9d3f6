#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace subrank {

/// Splits a UTF-8 title into lowercased tokens.
///
/// Letters and digits (Latin, Greek, Cyrillic, Hangul, fullwidth forms)
/// form words; everything else separates them. Each CJK ideograph or kana
/// is emitted as its own token. Case folding covers Latin-1, Latin
/// Extended-A, Greek and Cyrillic; fullwidth ASCII folds to ASCII.
std::vector<std::string> tokenize(std::string_view title, std::string_view language = {});

/// Per-language stopword lists.
class StopwordFilter {
 public:
  /// The lists compiled into the library (en, de, fr, it, es, ja).
  static StopwordFilter shipped();
  /// Lists read from `<dir>/<lang>.txt`, one token per line, layered over
  /// the shipped lists. Throws Error(config) if the directory is missing.
  static StopwordFilter with_overrides(const std::filesystem::path& dir);

  StopwordFilter() = default;
  StopwordFilter(const StopwordFilter& other);
  StopwordFilter& operator=(const StopwordFilter& other);

  void set_list(const std::string& language, std::set<std::string> words);
  bool supports(std::string_view language) const;

  /// Order-preserving removal. An unsupported language leaves tokens
  /// unchanged and bumps unsupported_language_count().
  std::vector<std::string> remove(std::vector<std::string> tokens, std::string_view language) const;

  std::size_t unsupported_language_count() const noexcept { return unsupported_.load(); }

 private:
  std::map<std::string, std::set<std::string>, std::less<>> lists_;
  mutable std::atomic<std::size_t> unsupported_{0};
};

/// GBDT-path text pipeline: tokenize, then remove stopwords.
std::vector<std::string> content_tokens(std::string_view title, std::string_view language,
                                        const StopwordFilter& stopwords);

}  // namespace subrank
