#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "subrank/types.hpp"

namespace subrank {

enum class Signal { ctr, cvr, pr, gmv_rate };
enum class Transform { identity, log_epsilon };
enum class Task { regression, classification };

/// Which raw signal, transform and task define the training label.
/// Classification ignores the transform: label = purchases > 0.
struct LabelSpec {
  Signal signal = Signal::pr;
  Transform transform = Transform::log_epsilon;
  double epsilon = 1e-4;
  Task task = Task::regression;

  /// Throws Error(config) when epsilon <= 0 (for the log transform).
  void validate() const;
  /// Short lowercase name such as "pr+log".
  std::string name() const;

  friend bool operator==(const LabelSpec&, const LabelSpec&) = default;
};

struct LabelConfig {
  LabelSpec spec;
  std::uint64_t min_impressions = 250;

  void validate() const;
};

const char* to_string(Signal s) noexcept;
const char* to_string(Transform t) noexcept;
const char* to_string(Task t) noexcept;
Signal signal_from_string(std::string_view s);
Transform transform_from_string(std::string_view s);
Task task_from_string(std::string_view s);

/// Rate for one record. PR = purchases/impressions, CTR = clicks/impressions,
/// CVR = purchases/clicks, GMV rate = gmv/impressions.
/// Throws Error(undefined_signal) when the denominator is zero.
double compute_signal(const TrafficCounts& counts, Signal signal);
double compute_signal(const TrafficRecord& record, Signal signal);

/// identity -> x, log_epsilon -> ln(x + epsilon). Strictly increasing in x.
double transform_label(double x, Transform transform, double epsilon);

/// Label of a traffic pair under `spec`; may throw Error(undefined_signal).
double label_for(const TrafficCounts& counts, const LabelSpec& spec);

/// Smallest label an observed (non-augmented) pair can carry: ln(epsilon)
/// for the log transform, 0 otherwise.
double lowest_observable_label(const LabelSpec& spec);

struct LabelingSummary {
  std::size_t input = 0;
  std::size_t below_min_impressions = 0;
  std::size_t undefined_signal = 0;
  std::size_t emitted = 0;
};

struct LabelingResult {
  std::vector<LabeledPair> pairs;
  LabelingSummary summary;
};

/// Drops records under min_impressions, skips records whose signal is
/// undefined (counted in the summary), and resolves titles from `catalog`.
/// kind is positive iff purchases > 0, otherwise hard_negative.
LabelingResult build_labeled_pairs(std::span<const TrafficRecord> traffic,
                                   const Catalog& catalog, const LabelConfig& config);

/// Recomputes labels of traffic-derived pairs under a different spec.
/// Random negatives get `negative_label`; pairs with an undefined signal
/// are dropped and counted in `skipped` when non-null.
std::vector<LabeledPair> relabel(std::span<const LabeledPair> pairs, const LabelSpec& spec,
                                 double negative_label, std::size_t* skipped = nullptr);

}  // namespace subrank
