#include "subrank/split.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <vector>

#include "subrank/error.hpp"
#include "subrank/rng.hpp"

namespace subrank {

std::set<std::string> query_ids(std::span<const LabeledPair> pairs) {
  std::set<std::string> ids;
  for (const auto& p : pairs) ids.insert(p.pair.query_id);
  return ids;
}

DatasetSplit grouped_split(std::span<const LabeledPair> pairs, double val_fraction,
                           std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw Error(ErrorKind::config, "val_fraction must lie in (0, 1)");
  }
  const auto ids = query_ids(pairs);
  if (ids.size() < 2) {
    throw Error(ErrorKind::data, "cannot split: need at least 2 query groups, have " +
                                     std::to_string(ids.size()));
  }
  std::vector<std::string> groups(ids.begin(), ids.end());
  Rng rng(seed);
  std::shuffle(groups.begin(), groups.end(), rng);

  const auto n = static_cast<long>(groups.size());
  const long n_val = std::clamp(std::lround(val_fraction * static_cast<double>(n)), 1L, n - 1);
  std::unordered_set<std::string> validation_ids(groups.begin(), groups.begin() + n_val);

  DatasetSplit split;
  for (const auto& p : pairs) {
    (validation_ids.contains(p.pair.query_id) ? split.validation : split.train).push_back(p);
  }
  return split;
}

std::size_t query_overlap(const DatasetSplit& split) {
  const auto train = query_ids(split.train);
  std::size_t shared = 0;
  for (const auto& id : query_ids(split.validation)) shared += train.count(id);
  return shared;
}

}  // namespace subrank
