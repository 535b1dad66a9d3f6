#pragma once

// Internal helpers for newline-delimited JSON files.

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include "json.hpp"
#include "subrank/error.hpp"

namespace subrank::detail {

using Json = nlohmann::ordered_json;

inline std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

/// Calls `fn(line_number, object)` for every non-blank line.
inline void for_each_jsonl(const std::filesystem::path& path,
                           const std::function<void(std::size_t, const Json&)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::data, "cannot open '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Json obj;
    try {
      obj = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::data, where(path, line_no) + "parse error: " + e.what());
    }
    if (!obj.is_object()) {
      throw Error(ErrorKind::data, where(path, line_no) + "expected a JSON object");
    }
    try {
      fn(line_no, obj);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::data, where(path, line_no) + "bad field: " + e.what());
    }
  }
}

/// Required field access with a readable error.
template <typename T>
T field(const Json& obj, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end()) {
    throw Error(ErrorKind::data, std::string("missing field '") + name + "'");
  }
  return it->get<T>();
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw Error(ErrorKind::data, "cannot write '" + path.string() + "'");
  }
  void write(const Json& obj) { out_ << obj.dump() << '\n'; }
  ~JsonlWriter() = default;

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::data, "cannot write '" + path.string() + "'");
  out << text;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::data, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace subrank::detail
