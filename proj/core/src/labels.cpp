#include "subrank/labels.hpp"

#include <cmath>

#include "subrank/error.hpp"

namespace subrank {

void LabelSpec::validate() const {
  if (transform == Transform::log_epsilon && !(epsilon > 0.0 && std::isfinite(epsilon))) {
    throw Error(ErrorKind::config, "log transform needs epsilon > 0");
  }
}

std::string LabelSpec::name() const {
  if (task == Task::classification) return "purchase>0";
  std::string n = to_string(signal);
  if (transform == Transform::log_epsilon) n += "+log";
  return n;
}

void LabelConfig::validate() const {
  spec.validate();
  if (min_impressions < 1) throw Error(ErrorKind::config, "min_impressions must be >= 1");
}

const char* to_string(Signal s) noexcept {
  switch (s) {
    case Signal::ctr: return "ctr";
    case Signal::cvr: return "cvr";
    case Signal::pr: return "pr";
    case Signal::gmv_rate: return "gmv";
  }
  return "?";
}

const char* to_string(Transform t) noexcept {
  return t == Transform::identity ? "identity" : "log";
}

const char* to_string(Task t) noexcept {
  return t == Task::regression ? "regression" : "classification";
}

Signal signal_from_string(std::string_view s) {
  if (s == "ctr") return Signal::ctr;
  if (s == "cvr") return Signal::cvr;
  if (s == "pr") return Signal::pr;
  if (s == "gmv" || s == "gmv_rate") return Signal::gmv_rate;
  throw Error(ErrorKind::config, "unknown signal '" + std::string(s) + "'");
}

Transform transform_from_string(std::string_view s) {
  if (s == "identity" || s == "none") return Transform::identity;
  if (s == "log" || s == "log_epsilon") return Transform::log_epsilon;
  throw Error(ErrorKind::config, "unknown transform '" + std::string(s) + "'");
}

Task task_from_string(std::string_view s) {
  if (s == "regression") return Task::regression;
  if (s == "classification") return Task::classification;
  throw Error(ErrorKind::config, "unknown task '" + std::string(s) + "'");
}

double compute_signal(const TrafficCounts& c, Signal signal) {
  const auto ratio = [](double num, std::uint64_t den, const char* what) {
    if (den == 0) throw Error(ErrorKind::undefined_signal, std::string(what) + " with zero denominator");
    return num / static_cast<double>(den);
  };
  switch (signal) {
    case Signal::ctr: return ratio(static_cast<double>(c.clicks), c.impressions, "ctr");
    case Signal::cvr: return ratio(static_cast<double>(c.purchases), c.clicks, "cvr");
    case Signal::pr: return ratio(static_cast<double>(c.purchases), c.impressions, "pr");
    case Signal::gmv_rate: return ratio(c.gmv, c.impressions, "gmv rate");
  }
  return 0.0;
}

double compute_signal(const TrafficRecord& record, Signal signal) {
  return compute_signal(counts_of(record), signal);
}

double transform_label(double x, Transform transform, double epsilon) {
  return transform == Transform::identity ? x : std::log(x + epsilon);
}

double label_for(const TrafficCounts& counts, const LabelSpec& spec) {
  if (spec.task == Task::classification) return counts.purchases > 0 ? 1.0 : 0.0;
  return transform_label(compute_signal(counts, spec.signal), spec.transform, spec.epsilon);
}

double lowest_observable_label(const LabelSpec& spec) {
  if (spec.task == Task::classification) return 0.0;
  return transform_label(0.0, spec.transform, spec.epsilon);
}

LabelingResult build_labeled_pairs(std::span<const TrafficRecord> traffic, const Catalog& catalog,
                                   const LabelConfig& config) {
  config.validate();
  LabelingResult result;
  result.summary.input = traffic.size();
  for (const auto& rec : traffic) {
    if (rec.impressions < config.min_impressions) {
      ++result.summary.below_min_impressions;
      continue;
    }
    LabeledPair lp;
    lp.counts = counts_of(rec);
    try {
      lp.label = label_for(lp.counts, config.spec);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::undefined_signal) throw;
      ++result.summary.undefined_signal;
      continue;
    }
    lp.pair = make_pair(catalog.at(rec.query_id), catalog.at(rec.candidate_id));
    lp.kind = rec.purchases > 0 ? PairKind::positive : PairKind::hard_negative;
    result.pairs.push_back(std::move(lp));
  }
  result.summary.emitted = result.pairs.size();
  return result;
}

std::vector<LabeledPair> relabel(std::span<const LabeledPair> pairs, const LabelSpec& spec,
                                 double negative_label, std::size_t* skipped) {
  std::vector<LabeledPair> out;
  out.reserve(pairs.size());
  std::size_t n_skipped = 0;
  for (const auto& p : pairs) {
    LabeledPair q = p;
    if (p.kind == PairKind::random_negative) {
      q.label = negative_label;
    } else {
      try {
        q.label = label_for(p.counts, spec);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::undefined_signal) throw;
        ++n_skipped;
        continue;
      }
    }
    out.push_back(std::move(q));
  }
  if (skipped != nullptr) *skipped = n_skipped;
  return out;
}

}  // namespace subrank
