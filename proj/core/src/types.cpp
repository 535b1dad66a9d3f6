#include "subrank/types.hpp"

#include <algorithm>
#include <cctype>

#include "subrank/error.hpp"

namespace subrank {

namespace {

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

Catalog::Catalog(std::vector<ProductRecord> products) : products_(std::move(products)) {
  index_.reserve(products_.size());
  for (std::size_t i = 0; i < products_.size(); ++i) {
    const auto& p = products_[i];
    if (p.product_id.empty()) {
      throw Error(ErrorKind::data, "product at position " + std::to_string(i) + " has an empty product_id");
    }
    if (is_blank(p.title)) {
      throw Error(ErrorKind::data, "product '" + p.product_id + "' has an empty title");
    }
    if (!index_.emplace(p.product_id, i).second) {
      throw Error(ErrorKind::data, "duplicate product_id '" + p.product_id + "'");
    }
  }
}

const ProductRecord* Catalog::find(std::string_view product_id) const {
  auto it = index_.find(std::string(product_id));
  return it == index_.end() ? nullptr : &products_[it->second];
}

const ProductRecord& Catalog::at(std::string_view product_id) const {
  if (const auto* p = find(product_id)) return *p;
  throw Error(ErrorKind::data, "unknown product_id '" + std::string(product_id) + "'");
}

ProductPair make_pair(const ProductRecord& query, const ProductRecord& candidate) {
  return {query.product_id, candidate.product_id, query.title,      candidate.title,
          query.language,   candidate.language,   query.marketplace};
}

const char* to_string(PairKind kind) noexcept {
  switch (kind) {
    case PairKind::positive: return "positive";
    case PairKind::hard_negative: return "hard_negative";
    case PairKind::random_negative: return "random_negative";
  }
  return "unknown";
}

PairKind pair_kind_from_string(std::string_view name) {
  if (name == "positive") return PairKind::positive;
  if (name == "hard_negative") return PairKind::hard_negative;
  if (name == "random_negative") return PairKind::random_negative;
  throw Error(ErrorKind::data, "unknown pair kind '" + std::string(name) + "'");
}

std::string pair_key(std::string_view query_id, std::string_view candidate_id) {
  std::string key;
  key.reserve(query_id.size() + candidate_id.size() + 1);
  key.append(query_id);
  key.push_back('\x1f');
  key.append(candidate_id);
  return key;
}

}  // namespace subrank
