#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>

#include "subrank/types.hpp"

namespace subrank {

/// Splits by query product: every query's pairs land on one side only.
///
/// The validation side receives round(val_fraction * groups) query groups,
/// clamped to [1, groups - 1]. Groups are ordered by id before the seeded
/// shuffle, so the result does not depend on input order. Throws
/// Error(data) with fewer than two groups, Error(config) for a fraction
/// outside (0, 1).
DatasetSplit grouped_split(std::span<const LabeledPair> pairs, double val_fraction,
                           std::uint64_t seed);

std::set<std::string> query_ids(std::span<const LabeledPair> pairs);

/// Number of query ids shared between train and validation. Always 0 for
/// a split produced by grouped_split.
std::size_t query_overlap(const DatasetSplit& split);

}  // namespace subrank
