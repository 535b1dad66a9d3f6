#include "subrank/negative_sampling.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "subrank/error.hpp"
#include "subrank/rng.hpp"

namespace subrank {

void NegativeSamplingConfig::validate_for(const LabelSpec& spec) const {
  if (!(ratio >= 0.0) || !std::isfinite(ratio)) {
    throw Error(ErrorKind::config, "negative_ratio must be a finite value >= 0");
  }
  if (!std::isfinite(negative_label)) throw Error(ErrorKind::config, "negative_label must be finite");
  if (spec.task == Task::classification) {
    if (negative_label != 0.0) {
      throw Error(ErrorKind::config, "classification requires negative_label = 0");
    }
    return;
  }
  const double floor = lowest_observable_label(spec);
  if (!(negative_label < floor)) {
    throw Error(ErrorKind::config, "negative_label must be below the lowest observable label " +
                                       std::to_string(floor));
  }
}

double default_negative_label(const LabelSpec& spec, std::span<const LabeledPair> dataset) {
  if (spec.task == Task::classification) return 0.0;
  if (spec.transform == Transform::log_epsilon) return std::log(spec.epsilon) - 1.0;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& p : dataset) {
    if (p.kind != PairKind::positive) continue;
    sum += p.label;
    ++n;
  }
  const double scale = n > 0 ? sum / static_cast<double>(n) : 0.0;
  return scale > 0.0 ? -scale : -1.0;
}

std::vector<LabeledPair> augment(std::span<const LabeledPair> dataset, const Catalog& catalog,
                                 const NegativeSamplingConfig& config) {
  std::vector<LabeledPair> out(dataset.begin(), dataset.end());
  const auto n_positive = static_cast<std::size_t>(
      std::count_if(dataset.begin(), dataset.end(),
                    [](const LabeledPair& p) { return p.kind == PairKind::positive; }));
  const auto requested =
      static_cast<std::size_t>(std::floor(config.ratio * static_cast<double>(n_positive)));
  if (requested == 0) return out;
  if (catalog.size() < 2) {
    throw Error(ErrorKind::sampling_exhausted, "catalog needs at least 2 products for negative sampling");
  }

  std::unordered_set<std::string> taken;
  taken.reserve(dataset.size() + requested);
  for (const auto& p : dataset) taken.insert(pair_key(p.pair.query_id, p.pair.candidate_id));

  Rng rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, catalog.size() - 1);
  const auto& products = catalog.products();
  const std::size_t max_draws = 100 * requested;
  std::size_t draws = 0;
  std::size_t appended = 0;
  out.reserve(out.size() + requested);
  while (appended < requested) {
    if (draws++ >= max_draws) {
      throw Error(ErrorKind::sampling_exhausted,
                  "negative sampling produced " + std::to_string(appended) + " of " +
                      std::to_string(requested) + " pairs after " + std::to_string(max_draws) +
                      " draws; catalog too small");
    }
    const auto& q = products[pick(rng)];
    const auto& c = products[pick(rng)];
    if (q.product_id == c.product_id) continue;
    if (!taken.insert(pair_key(q.product_id, c.product_id)).second) continue;
    LabeledPair lp;
    lp.pair = make_pair(q, c);
    lp.label = config.negative_label;
    lp.kind = PairKind::random_negative;
    out.push_back(std::move(lp));
    ++appended;
  }
  return out;
}

}  // namespace subrank
