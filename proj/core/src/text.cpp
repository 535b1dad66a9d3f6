#include "subrank/text.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "subrank/error.hpp"

namespace subrank {

namespace detail {
extern const std::pair<std::string_view, std::string_view> kShippedStopwords[];
extern const std::size_t kShippedStopwordCount;
}  // namespace detail

namespace {

constexpr char32_t kInvalid = 0xFFFD;

// Decodes one code point starting at `i`, advancing `i`. Malformed input
// yields U+FFFD and consumes one byte.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  int len = 0;
  char32_t cp = 0;
  if (b0 < 0x80) {
    ++i;
    return b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return kInvalid;
  }
  if (i + len > s.size()) {
    ++i;
    return kInvalid;
  }
  for (int k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return kInvalid;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += len;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool in(char32_t c, char32_t lo, char32_t hi) { return c >= lo && c <= hi; }

bool is_cjk_unit(char32_t c) {
  return in(c, 0x3041, 0x3096) ||  // hiragana
         in(c, 0x309D, 0x309F) || in(c, 0x30A1, 0x30FA) ||  // katakana
         in(c, 0x30FC, 0x30FF) || in(c, 0x3400, 0x4DBF) ||  // CJK ext A
         in(c, 0x4E00, 0x9FFF) ||                            // CJK unified
         in(c, 0xF900, 0xFAFF) ||                            // compatibility
         in(c, 0xFF66, 0xFF9F) ||                            // halfwidth kana
         in(c, 0x20000, 0x2FA1F);
}

bool is_word_char(char32_t c) {
  if (c < 0x80) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  }
  if (c == 0xAA || c == 0xB5 || c == 0xBA) return true;
  if (in(c, 0xC0, 0x24F)) return c != 0xD7 && c != 0xF7;
  return in(c, 0x300, 0x36F) ||   // combining marks
         in(c, 0x370, 0x3FF) ||   // Greek
         in(c, 0x400, 0x52F) ||   // Cyrillic
         in(c, 0xAC00, 0xD7A3) || // Hangul syllables
         in(c, 0xFF10, 0xFF19) || in(c, 0xFF21, 0xFF3A) || in(c, 0xFF41, 0xFF5A);
}

char32_t fold(char32_t c) {
  if (in(c, 0xFF10, 0xFF19) || in(c, 0xFF21, 0xFF3A) || in(c, 0xFF41, 0xFF5A)) c -= 0xFEE0;
  if (in(c, 'A', 'Z')) return c + 32;
  if (in(c, 0xC0, 0xDE) && c != 0xD7) return c + 32;
  if (in(c, 0x100, 0x137) || in(c, 0x14A, 0x177)) return c | 1;
  if (in(c, 0x139, 0x148) || in(c, 0x179, 0x17E)) return (c & 1) ? c + 1 : c;
  if (c == 0x178) return 0xFF;
  if (in(c, 0x391, 0x3AB) && c != 0x3A2) return c + 32;
  if (in(c, 0x410, 0x42F)) return c + 32;
  if (in(c, 0x400, 0x40F)) return c + 80;
  return c;
}

std::set<std::string> parse_list(std::string_view text) {
  std::set<std::string> words;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // Entries pass through the tokenizer so they match tokenized titles.
    for (auto& t : tokenize(line)) words.insert(std::move(t));
  }
  return words;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view title, std::string_view /*language*/) {
  std::vector<std::string> tokens;
  std::string current;
  const auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < title.size();) {
    const char32_t cp = next_code_point(title, i);
    if (is_cjk_unit(cp)) {
      flush();
      std::string unit;
      append_utf8(unit, cp);
      tokens.push_back(std::move(unit));
    } else if (is_word_char(cp)) {
      append_utf8(current, fold(cp));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

StopwordFilter StopwordFilter::shipped() {
  StopwordFilter f;
  for (std::size_t i = 0; i < detail::kShippedStopwordCount; ++i) {
    const auto& [lang, text] = detail::kShippedStopwords[i];
    f.set_list(std::string(lang), parse_list(text));
  }
  return f;
}

StopwordFilter StopwordFilter::with_overrides(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::config, "stopword directory '" + dir.string() + "' does not exist");
  }
  auto f = shipped();
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    f.set_list(file.stem().string(), parse_list(text));
  }
  return f;
}

StopwordFilter::StopwordFilter(const StopwordFilter& other)
    : lists_(other.lists_), unsupported_(other.unsupported_.load()) {}

StopwordFilter& StopwordFilter::operator=(const StopwordFilter& other) {
  lists_ = other.lists_;
  unsupported_ = other.unsupported_.load();
  return *this;
}

void StopwordFilter::set_list(const std::string& language, std::set<std::string> words) {
  lists_[language] = std::move(words);
}

bool StopwordFilter::supports(std::string_view language) const {
  return lists_.find(language) != lists_.end();
}

std::vector<std::string> StopwordFilter::remove(std::vector<std::string> tokens,
                                                std::string_view language) const {
  const auto it = lists_.find(language);
  if (it == lists_.end()) {
    ++unsupported_;
    return tokens;
  }
  const auto& words = it->second;
  std::erase_if(tokens, [&](const std::string& t) { return words.contains(t); });
  return tokens;
}

std::vector<std::string> content_tokens(std::string_view title, std::string_view language,
                                        const StopwordFilter& stopwords) {
  return stopwords.remove(tokenize(title, language), language);
}

}  // namespace subrank
