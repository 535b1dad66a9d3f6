#include "subrank/embeddings.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "subrank/error.hpp"

namespace subrank {

namespace {

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) parts.push_back(line.substr(start, i - start));
  }
  return parts;
}

bool parse_double(std::string_view s, double& out) {
  // std::from_chars for double is available in libstdc++ 11.
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

void EmbeddingTable::add(std::string word, std::span<const double> vector) {
  if (vector.size() != dim_) {
    throw Error(ErrorKind::data, "dimension mismatch for '" + word + "': expected " +
                                     std::to_string(dim_) + ", got " + std::to_string(vector.size()));
  }
  if (index_.contains(word)) throw Error(ErrorKind::data, "duplicate word '" + word + "'");
  index_.emplace(word, words_.size());
  words_.push_back(std::move(word));
  values_.insert(values_.end(), vector.begin(), vector.end());
}

std::span<const double> EmbeddingTable::lookup(const std::string& word) const {
  const auto it = index_.find(word);
  if (it == index_.end()) return {};
  return {values_.data() + it->second * dim_, dim_};
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::data, "cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::data, where(path, 1) + "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_ws(line);
  std::size_t count = 0;
  std::size_t dim = 0;
  const auto parse_size = [](std::string_view s, std::size_t& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
  };
  if (header.size() != 2 || !parse_size(header[0], count) || !parse_size(header[1], dim) || dim == 0) {
    throw Error(ErrorKind::data, where(path, 1) + "header must be \"count dim\" with dim > 0");
  }

  EmbeddingTable table(dim);
  std::vector<double> values(dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto parts = split_ws(line);
    if (parts.empty()) continue;
    if (parts.size() != dim + 1) {
      throw Error(ErrorKind::data, where(path, line_no) + "dimension mismatch: expected " +
                                       std::to_string(dim) + " values, got " +
                                       std::to_string(parts.size() - 1));
    }
    for (std::size_t k = 0; k < dim; ++k) {
      if (!parse_double(parts[k + 1], values[k])) {
        throw Error(ErrorKind::data, where(path, line_no) + "bad number '" +
                                         std::string(parts[k + 1]) + "'");
      }
    }
    try {
      table.add(std::string(parts[0]), values);
    } catch (const Error& e) {
      throw Error(ErrorKind::data, where(path, line_no) + e.what());
    }
  }
  if (table.size() != count) {
    throw Error(ErrorKind::data, where(path, 1) + "header declares " + std::to_string(count) +
                                     " words, file has " + std::to_string(table.size()));
  }
  return table;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::data, "cannot write '" + path.string() + "'");
  out << table.size() << ' ' << table.dim() << '\n';
  char buf[64];
  for (const auto& w : table.words()) {
    out << w;
    for (double v : table.lookup(w)) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    out << '\n';
  }
}

std::vector<double> pool(std::span<const std::string> tokens, const EmbeddingTable& table) {
  std::vector<double> sum(table.dim(), 0.0);
  for (const auto& t : tokens) {
    const auto v = table.lookup(t);
    for (std::size_t k = 0; k < v.size(); ++k) sum[k] += v[k];
  }
  return sum;
}

PairFeature featurize_pair(std::span<const std::string> query_tokens,
                           std::span<const std::string> candidate_tokens,
                           const EmbeddingTable& table) {
  PairFeature f;
  f.values = pool(query_tokens, table);
  const auto v = pool(candidate_tokens, table);
  f.values.insert(f.values.end(), v.begin(), v.end());
  return f;
}

}  // namespace subrank
