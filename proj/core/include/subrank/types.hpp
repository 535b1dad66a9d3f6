#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace subrank {

/// A catalog entry. Only the title is used as a model feature.
struct ProductRecord {
  std::string product_id;
  std::string title;
  std::string marketplace;
  std::string language;

  friend bool operator==(const ProductRecord&, const ProductRecord&) = default;
};

/// Validated, immutable product catalog with id lookup.
class Catalog {
 public:
  Catalog() = default;
  /// Throws Error(data) on duplicate ids, empty ids or blank titles.
  explicit Catalog(std::vector<ProductRecord> products);

  const std::vector<ProductRecord>& products() const noexcept { return products_; }
  std::size_t size() const noexcept { return products_.size(); }
  bool empty() const noexcept { return products_.empty(); }

  /// nullptr when the id is unknown.
  const ProductRecord* find(std::string_view product_id) const;
  /// Throws Error(data) when the id is unknown.
  const ProductRecord& at(std::string_view product_id) const;

 private:
  std::vector<ProductRecord> products_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Aggregated behavior counts for one (query, candidate) mapping.
struct TrafficRecord {
  std::string query_id;
  std::string candidate_id;
  std::uint64_t impressions = 0;
  std::uint64_t clicks = 0;
  std::uint64_t purchases = 0;
  double gmv = 0.0;

  friend bool operator==(const TrafficRecord&, const TrafficRecord&) = default;
};

/// Raw counts carried alongside a labeled pair so labels can be recomputed
/// under a different label spec without rebuilding the dataset.
struct TrafficCounts {
  std::uint64_t impressions = 0;
  std::uint64_t clicks = 0;
  std::uint64_t purchases = 0;
  double gmv = 0.0;

  friend bool operator==(const TrafficCounts&, const TrafficCounts&) = default;
};

inline TrafficCounts counts_of(const TrafficRecord& r) {
  return {r.impressions, r.clicks, r.purchases, r.gmv};
}

/// Two products and their titles; the unit every scorer consumes.
struct ProductPair {
  std::string query_id;
  std::string candidate_id;
  std::string query_title;
  std::string candidate_title;
  std::string query_language;
  std::string candidate_language;
  std::string marketplace;  // of the query product

  friend bool operator==(const ProductPair&, const ProductPair&) = default;
};

ProductPair make_pair(const ProductRecord& query, const ProductRecord& candidate);

enum class PairKind { positive, hard_negative, random_negative };

const char* to_string(PairKind kind) noexcept;
PairKind pair_kind_from_string(std::string_view name);

/// A training or validation example.
///
/// random_negative pairs carry the configured negative label and zero
/// counts; hard_negative pairs came from traffic with zero purchases.
struct LabeledPair {
  ProductPair pair;
  double label = 0.0;
  PairKind kind = PairKind::positive;
  TrafficCounts counts;

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

/// Train and validation sets with disjoint query products.
struct DatasetSplit {
  std::vector<LabeledPair> train;
  std::vector<LabeledPair> validation;
};

/// Key for (query, candidate) sets.
std::string pair_key(std::string_view query_id, std::string_view candidate_id);

}  // namespace subrank
