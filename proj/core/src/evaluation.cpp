#include "subrank/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "jsonl.hpp"
#include "subrank/error.hpp"

namespace subrank {

using detail::field;
using detail::Json;

namespace {

constexpr Signal kRankingSignals[] = {Signal::ctr, Signal::cvr, Signal::pr};

Json pair_to_json(const ProductPair& p) {
  Json j;
  j["query_id"] = p.query_id;
  j["candidate_id"] = p.candidate_id;
  j["query_title"] = p.query_title;
  j["candidate_title"] = p.candidate_title;
  j["query_language"] = p.query_language;
  j["candidate_language"] = p.candidate_language;
  j["marketplace"] = p.marketplace;
  return j;
}

ProductPair pair_from_json(const Json& j) {
  return {field<std::string>(j, "query_id"),       field<std::string>(j, "candidate_id"),
          field<std::string>(j, "query_title"),    field<std::string>(j, "candidate_title"),
          field<std::string>(j, "query_language"), field<std::string>(j, "candidate_language"),
          field<std::string>(j, "marketplace")};
}

Json histogram_to_json(const ScoreHistogram& h) {
  const auto mom = [](const Moments& m) {
    return Json{{"count", m.count}, {"mean", m.mean}, {"stddev", m.stddev}};
  };
  return Json{{"lo", h.lo},
              {"hi", h.hi},
              {"bin_width", h.bin_width},
              {"positive_density", h.positive_density},
              {"random_density", h.random_density},
              {"positive", mom(h.positive)},
              {"random", mom(h.random)},
              {"separation", h.separation}};
}

ScoreHistogram histogram_from_json(const Json& j) {
  const auto mom = [](const Json& m) {
    return Moments{m.at("count").get<std::size_t>(), m.at("mean").get<double>(), m.at("stddev").get<double>()};
  };
  ScoreHistogram h;
  h.lo = j.at("lo").get<double>();
  h.hi = j.at("hi").get<double>();
  h.bin_width = j.at("bin_width").get<double>();
  h.positive_density = j.at("positive_density").get<std::vector<double>>();
  h.random_density = j.at("random_density").get<std::vector<double>>();
  h.positive = mom(j.at("positive"));
  h.random = mom(j.at("random"));
  h.separation = j.at("separation").get<double>();
  return h;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> optional_from(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

const char* to_string(FunctionalityKind kind) noexcept {
  switch (kind) {
    case FunctionalityKind::positive: return "positive";
    case FunctionalityKind::related_negative: return "related_negative";
    case FunctionalityKind::random_negative: return "random_negative";
  }
  return "?";
}

FunctionalityKind functionality_kind_from_string(std::string_view name) {
  if (name == "positive") return FunctionalityKind::positive;
  if (name == "related_negative") return FunctionalityKind::related_negative;
  if (name == "random_negative") return FunctionalityKind::random_negative;
  throw Error(ErrorKind::data, "unknown functionality kind '" + std::string(name) + "'");
}

std::size_t FunctionalityEvalSet::positives() const {
  return static_cast<std::size_t>(
      std::count_if(pairs.begin(), pairs.end(), [](const FunctionalityPair& p) { return p.label == 1; }));
}

void FunctionalityEvalSet::validate() const {
  for (const auto& p : pairs) {
    if (p.label != 0 && p.label != 1) throw Error(ErrorKind::data, "functionality labels must be 0 or 1");
  }
  if (pairs.empty()) return;
  const double actual = static_cast<double>(positives()) / static_cast<double>(pairs.size());
  if (std::abs(actual - ratio_pos) > 1.0 / static_cast<double>(pairs.size()) + 1e-12) {
    throw Error(ErrorKind::data, "functionality set ratio " + std::to_string(ratio_pos) +
                                     " does not match its contents (" + std::to_string(actual) + ")");
  }
}

double RankingCandidate::gain(Signal signal) const {
  if (signal == Signal::cvr && counts.clicks == 0) return 0.0;
  return compute_signal(counts, signal);
}

std::size_t RankingEvalSet::candidate_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.candidates.size();
  return n;
}

void RankingEvalSet::validate() const {
  for (const auto& g : groups) {
    if (g.candidates.size() < 2) throw Error(ErrorKind::data, "ranking group '" + g.query_id + "' has < 2 candidates");
    for (const auto& c : g.candidates) {
      if (c.counts.impressions <= min_impressions) {
        throw Error(ErrorKind::data, "ranking candidate " + c.pair.candidate_id + " of '" + g.query_id +
                                         "' is not above the impression threshold");
      }
    }
  }
}

void write_functionality_set(const std::filesystem::path& path, const FunctionalityEvalSet& set) {
  detail::JsonlWriter out(path);
  out.write(Json{{"ratio_pos", set.ratio_pos}, {"count", set.pairs.size()}});
  for (const auto& p : set.pairs) {
    Json j = pair_to_json(p.pair);
    j["label"] = p.label;
    j["kind"] = to_string(p.kind);
    out.write(j);
  }
}

FunctionalityEvalSet load_functionality_set(const std::filesystem::path& path) {
  FunctionalityEvalSet set;
  bool header = false;
  std::size_t declared = 0;
  detail::for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    if (!header) {
      if (!j.contains("ratio_pos")) {
        throw Error(ErrorKind::data, detail::where(path, line) + "missing functionality set header");
      }
      set.ratio_pos = field<double>(j, "ratio_pos");
      declared = field<std::size_t>(j, "count");
      header = true;
      return;
    }
    set.pairs.push_back(FunctionalityPair{pair_from_json(j), field<int>(j, "label"),
                                          functionality_kind_from_string(field<std::string>(j, "kind"))});
  });
  if (set.pairs.size() != declared) {
    throw Error(ErrorKind::data, path.string() + ": header declares " + std::to_string(declared) + " pairs, found " +
                                     std::to_string(set.pairs.size()));
  }
  set.validate();
  return set;
}

void write_ranking_set(const std::filesystem::path& path, const RankingEvalSet& set) {
  detail::JsonlWriter out(path);
  out.write(Json{{"min_impressions", set.min_impressions},
                 {"groups", set.groups.size()},
                 {"dropped_groups", set.dropped_groups}});
  for (const auto& g : set.groups) {
    for (const auto& c : g.candidates) {
      Json j = pair_to_json(c.pair);
      j["impressions"] = c.counts.impressions;
      j["clicks"] = c.counts.clicks;
      j["purchases"] = c.counts.purchases;
      j["gmv"] = c.counts.gmv;
      out.write(j);
    }
  }
}

RankingEvalSet load_ranking_set(const std::filesystem::path& path) {
  RankingEvalSet set;
  bool header = false;
  std::size_t declared = 0;
  detail::for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    if (!header) {
      if (!j.contains("min_impressions")) {
        throw Error(ErrorKind::data, detail::where(path, line) + "missing ranking set header");
      }
      set.min_impressions = field<std::uint64_t>(j, "min_impressions");
      declared = field<std::size_t>(j, "groups");
      set.dropped_groups = field<std::size_t>(j, "dropped_groups");
      header = true;
      return;
    }
    RankingCandidate c;
    c.pair = pair_from_json(j);
    c.counts = {field<std::uint64_t>(j, "impressions"), field<std::uint64_t>(j, "clicks"),
                field<std::uint64_t>(j, "purchases"), field<double>(j, "gmv")};
    if (set.groups.empty() || set.groups.back().query_id != c.pair.query_id) {
      set.groups.push_back(RankingGroup{c.pair.query_id, c.pair.marketplace, {}});
    }
    set.groups.back().candidates.push_back(std::move(c));
  });
  if (set.groups.size() != declared) {
    throw Error(ErrorKind::data, path.string() + ": header declares " + std::to_string(declared) +
                                     " groups, found " + std::to_string(set.groups.size()));
  }
  set.validate();
  return set;
}

NdcgSummary mean_ndcg(const RankingEvalSet& set, const std::vector<std::vector<double>>& scores, Signal signal,
                      GainKind gain) {
  if (scores.size() != set.groups.size()) throw Error(ErrorKind::undefined_metric, "mean_ndcg: group count mismatch");
  NdcgSummary out;
  double total = 0.0;
  std::vector<double> gains;
  std::vector<std::string> keys;
  for (std::size_t g = 0; g < set.groups.size(); ++g) {
    const auto& group = set.groups[g];
    gains.clear();
    keys.clear();
    for (const auto& c : group.candidates) {
      gains.push_back(c.gain(signal));
      keys.push_back(c.pair.candidate_id);
    }
    const auto v = ndcg_for_query(scores[g], gains, keys, gain);
    if (!v) {
      ++out.skipped;
      continue;
    }
    total += *v;
    ++out.evaluated;
  }
  if (out.evaluated == 0) {
    throw Error(ErrorKind::undefined_metric, std::string("NDCG@") + to_string(signal) + ": every query group has zero gains");
  }
  out.mean = total / static_cast<double>(out.evaluated);
  return out;
}

MetricsReport evaluate(const PairScorer& scorer, const FunctionalityEvalSet& functionality,
                       const RankingEvalSet& ranking, const EvalOptions& options) {
  MetricsReport report;

  // Functionality: AuPRC plus score histograms.
  std::vector<ProductPair> fpairs;
  std::vector<int> flabels;
  for (const auto& p : functionality.pairs) {
    fpairs.push_back(p.pair);
    flabels.push_back(p.label);
  }
  const auto fscores = scorer.score(fpairs);
  try {
    report.auprc = auprc(fscores, flabels);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("functionality set: ") + e.what());
  }
  report.functionality_pairs = fpairs.size();
  report.functionality_positives = functionality.positives();
  std::vector<double> pos_scores;
  std::vector<double> rand_scores;
  for (std::size_t i = 0; i < fscores.size(); ++i) {
    if (functionality.pairs[i].kind == FunctionalityKind::positive) pos_scores.push_back(fscores[i]);
    if (functionality.pairs[i].kind == FunctionalityKind::random_negative) rand_scores.push_back(fscores[i]);
  }
  report.histogram = score_histogram(pos_scores, rand_scores, options.histogram_bins);

  // Ranking: score every group.
  std::vector<std::vector<double>> rscores;
  rscores.reserve(ranking.groups.size());
  for (const auto& g : ranking.groups) {
    std::vector<ProductPair> pairs;
    for (const auto& c : g.candidates) pairs.push_back(c.pair);
    rscores.push_back(scorer.score(pairs));
  }
  report.ranking_groups = ranking.groups.size();
  for (const Signal s : kRankingSignals) {
    try {
      const auto summary = mean_ndcg(ranking, rscores, s, options.gain);
      report.ndcg_by_signal[to_string(s)] = summary.mean;
      report.skipped_groups[to_string(s)] = summary.skipped;
    } catch (const Error& e) {
      throw Error(e.kind(), std::string("ranking set: ") + e.what());
    }
  }

  std::vector<double> ctr;
  std::vector<double> cvr;
  for (const auto& g : ranking.groups) {
    for (const auto& c : g.candidates) {
      if (c.counts.clicks == 0) continue;
      ctr.push_back(c.gain(Signal::ctr));
      cvr.push_back(c.gain(Signal::cvr));
    }
  }
  try {
    report.pearson_ctr_cvr = pearson(ctr, cvr);
  } catch (const Error&) {
    report.pearson_ctr_cvr.reset();
  }

  // Per-marketplace breakdown.
  std::set<std::string> markets;
  for (const auto& p : functionality.pairs) markets.insert(p.pair.marketplace);
  for (const auto& g : ranking.groups) markets.insert(g.marketplace);
  for (const auto& m : markets) {
    MarketplaceMetrics mm;
    std::vector<double> s;
    std::vector<int> y;
    for (std::size_t i = 0; i < fscores.size(); ++i) {
      if (functionality.pairs[i].pair.marketplace != m) continue;
      s.push_back(fscores[i]);
      y.push_back(flabels[i]);
    }
    mm.functionality_pairs = s.size();
    mm.functionality_positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    if (mm.functionality_positives > 0) mm.auprc = auprc(s, y);

    RankingEvalSet sub;
    sub.min_impressions = ranking.min_impressions;
    std::vector<std::vector<double>> sub_scores;
    for (std::size_t g = 0; g < ranking.groups.size(); ++g) {
      if (ranking.groups[g].marketplace != m) continue;
      sub.groups.push_back(ranking.groups[g]);
      sub_scores.push_back(rscores[g]);
    }
    mm.ranking_groups = sub.groups.size();
    for (const Signal sig : kRankingSignals) {
      if (sub.groups.empty()) continue;
      try {
        mm.ndcg_by_signal[to_string(sig)] = mean_ndcg(sub, sub_scores, sig, options.gain).mean;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::undefined_metric) throw;
      }
    }
    report.per_marketplace[m.empty() ? "unknown" : m] = std::move(mm);
  }
  return report;
}

std::string MetricsReport::to_json() const {
  Json j;
  j["auprc"] = auprc;
  j["ndcg_by_signal"] = ndcg_by_signal;
  j["skipped_groups"] = skipped_groups;
  j["pearson_ctr_cvr"] = optional_number(pearson_ctr_cvr);
  j["functionality_pairs"] = functionality_pairs;
  j["functionality_positives"] = functionality_positives;
  j["ranking_groups"] = ranking_groups;
  Json markets = Json::object();
  for (const auto& [code, m] : per_marketplace) {
    markets[code] = Json{{"auprc", optional_number(m.auprc)},
                         {"ndcg_by_signal", m.ndcg_by_signal},
                         {"functionality_pairs", m.functionality_pairs},
                         {"functionality_positives", m.functionality_positives},
                         {"ranking_groups", m.ranking_groups}};
  }
  j["per_marketplace"] = std::move(markets);
  j["score_histogram"] = histogram_to_json(histogram);
  return j.dump(2) + "\n";
}

MetricsReport MetricsReport::from_json(std::string_view text) {
  try {
    const auto j = Json::parse(text);
    MetricsReport r;
    r.auprc = j.at("auprc").get<double>();
    r.ndcg_by_signal = j.at("ndcg_by_signal").get<std::map<std::string, double>>();
    r.skipped_groups = j.at("skipped_groups").get<std::map<std::string, std::size_t>>();
    r.pearson_ctr_cvr = optional_from(j.at("pearson_ctr_cvr"));
    r.functionality_pairs = j.at("functionality_pairs").get<std::size_t>();
    r.functionality_positives = j.at("functionality_positives").get<std::size_t>();
    r.ranking_groups = j.at("ranking_groups").get<std::size_t>();
    for (const auto& [code, m] : j.at("per_marketplace").items()) {
      MarketplaceMetrics mm;
      mm.auprc = optional_from(m.at("auprc"));
      mm.ndcg_by_signal = m.at("ndcg_by_signal").get<std::map<std::string, double>>();
      mm.functionality_pairs = m.at("functionality_pairs").get<std::size_t>();
      mm.functionality_positives = m.at("functionality_positives").get<std::size_t>();
      mm.ranking_groups = m.at("ranking_groups").get<std::size_t>();
      r.per_marketplace[code] = std::move(mm);
    }
    r.histogram = histogram_from_json(j.at("score_histogram"));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::data, std::string("malformed metrics report: ") + e.what());
  }
}

void write_histogram_tsv(const std::filesystem::path& path, const ScoreHistogram& h) {
  std::string text = "bin_lo\tbin_hi\tpositive_density\trandom_density\n";
  char buf[64];
  const auto num = [&](double v) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, static_cast<std::size_t>(ptr - buf));
  };
  for (std::size_t b = 0; b < h.positive_density.size(); ++b) {
    const double lo = h.lo + static_cast<double>(b) * h.bin_width;
    text += num(lo) + '\t' + num(lo + h.bin_width) + '\t' + num(h.positive_density[b]) + '\t' +
            num(h.random_density[b]) + '\n';
  }
  detail::write_text_file(path, text);
}

}  // namespace subrank
