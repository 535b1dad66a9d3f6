#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "subrank/labels.hpp"
#include "subrank/types.hpp"

namespace subrank {

struct NegativeSamplingConfig {
  double ratio = 0.5;           // random negatives per positive pair
  double negative_label = 0.0;  // see default_negative_label
  std::uint64_t seed = 0;

  /// Checks ratio >= 0 and the label invariant for `spec`: below ln(epsilon)
  /// for log regression, below 0 for identity regression, exactly 0 for
  /// classification. Throws Error(config).
  void validate_for(const LabelSpec& spec) const;
};

/// Default negative label when the config leaves it unset.
///
/// Classification: 0. Log regression: ln(epsilon) - 1. Identity regression:
/// the negated mean label of the positive pairs in `dataset` (one positive
/// scale unit below the floor of observable labels).
double default_negative_label(const LabelSpec& spec, std::span<const LabeledPair> dataset);

/// Appends floor(ratio * #positive) random_negative pairs sampled uniformly
/// from the catalog, once and up front. Self-pairs, pairs already in
/// `dataset` and repeats are rejected; after 100x the requested count of
/// draws the call gives up with Error(sampling_exhausted).
std::vector<LabeledPair> augment(std::span<const LabeledPair> dataset, const Catalog& catalog,
                                 const NegativeSamplingConfig& config);

}  // namespace subrank
