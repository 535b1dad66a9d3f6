#include "subrank/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>

#include "jsonl.hpp"
#include "subrank/crossenc_train.hpp"
#include "subrank/data_io.hpp"
#include "subrank/error.hpp"
#include "subrank/negative_sampling.hpp"
#include "subrank/scorer.hpp"
#include "subrank/split.hpp"
#include "subrank/synthetic.hpp"
#include "subrank/text.hpp"

namespace subrank {

using detail::Json;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, static_cast<std::size_t>(ptr - buf));
}

/// Runs `fn`, prefixing any library error with the stage name.
template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.kind(), name + ": " + e.what());
  }
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::config, "cannot create output directory '" + dir.string() + "': " + ec.message());
}

void require_file(const std::filesystem::path& path, const char* what) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorKind::config, std::string(what) + " '" + path.string() + "' not found");
  }
}

StopwordFilter stopwords_for(const RunConfig& config) {
  return config.stopwords_dir.empty() ? StopwordFilter::shipped() : StopwordFilter::with_overrides(config.stopwords_dir);
}

DatasetSplit load_split(const RunConfig& config) {
  const auto train = config.out / kTrainFile;
  const auto val = config.out / kValidationFile;
  require_file(train, "prepared training set (run prepare first)");
  require_file(val, "prepared validation set (run prepare first)");
  return DatasetSplit{load_labeled_pairs(train), load_labeled_pairs(val)};
}

FunctionalityEvalSet load_functionality(const RunConfig& config) {
  const auto path = config.functionality_path();
  require_file(path, "functionality set (run gen first)");
  return load_functionality_set(path);
}

RankingEvalSet load_ranking(const RunConfig& config) {
  const auto path = config.out / kRankingFile;
  require_file(path, "ranking set (run prepare first)");
  return load_ranking_set(path);
}

/// Loads whichever model artifact matches config.model.
std::unique_ptr<PairScorer> load_scorer(const RunConfig& config, const EmbeddingTable& table) {
  if (config.model == ModelKind::gbdt) {
    const auto path = config.out / kGbdtModelFile;
    require_file(path, "gbdt model (run train first)");
    return std::make_unique<GbdtScorer>(GbdtModel::load(path), table, stopwords_for(config));
  }
  const auto path = config.out / kCrossEncoderModelFile;
  require_file(path, "cross-encoder model (run train --model crossenc first)");
  auto loaded = load_cross_encoder(path);
  return std::make_unique<CrossEncoderScorer>(std::move(loaded.model), std::move(loaded.vocab));
}

EmbeddingTable load_table(const RunConfig& config) {
  const auto path = config.embeddings_path();
  require_file(path, "embeddings");
  return load_embeddings(path);
}

std::vector<double> labels_of(std::span<const LabeledPair> pairs) {
  std::vector<double> y;
  y.reserve(pairs.size());
  for (const auto& p : pairs) y.push_back(p.label);
  return y;
}

/// Labels of `pairs` under `spec`; pairs whose signal is undefined are
/// dropped. Returns kept indices alongside the labels.
struct Relabeled {
  std::vector<std::size_t> index;
  std::vector<double> labels;
};

Relabeled relabel_indices(std::span<const LabeledPair> pairs, const LabelSpec& spec) {
  // Default negative label needs the relabelled positives first.
  Relabeled r;
  std::vector<LabeledPair> positives;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].kind == PairKind::random_negative) continue;
    try {
      LabeledPair p = pairs[i];
      p.label = label_for(p.counts, spec);
      positives.push_back(p);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::undefined_signal) throw;
    }
  }
  const double negative = default_negative_label(spec, positives);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    double y = negative;
    if (pairs[i].kind != PairKind::random_negative) {
      try {
        y = label_for(pairs[i].counts, spec);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::undefined_signal) throw;
        continue;
      }
    }
    r.index.push_back(i);
    r.labels.push_back(y);
  }
  return r;
}

}  // namespace

std::vector<AblationCell> default_ablation_grid() {
  const auto reg = [](Signal s, Transform t) {
    LabelSpec spec;
    spec.signal = s;
    spec.transform = t;
    spec.task = Task::regression;
    return spec;
  };
  LabelSpec cls;
  cls.task = Task::classification;
  cls.transform = Transform::identity;
  return {
      {"CTR+MSE", reg(Signal::ctr, Transform::identity), Objective::mse},
      {"CVR+MSE", reg(Signal::cvr, Transform::identity), Objective::mse},
      {"PR+MSE", reg(Signal::pr, Transform::identity), Objective::mse},
      {"GMV+MSE", reg(Signal::gmv_rate, Transform::identity), Objective::mse},
      {"PR+Log+MSE", reg(Signal::pr, Transform::log_epsilon), Objective::mse},
      {"purchase>0+logistic", cls, Objective::logistic},
      {"purchase>0+hinge", cls, Objective::hinge},
  };
}

double AblationTable::delta_pct(double value, double baseline) {
  if (baseline == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 * (value - baseline) / baseline;
}

std::string AblationTable::to_tsv() const {
  static const char* kSignals[] = {"ctr", "cvr", "pr"};
  std::string out =
      "objective\tstatus\ttrain_pairs\tauprc\tndcg_ctr\tndcg_cvr\tndcg_pr\t"
      "delta_auprc_pct\tdelta_ndcg_ctr_pct\tdelta_ndcg_cvr_pct\tdelta_ndcg_pr_pct\n";
  const AblationRow* base = rows.empty() || !rows.front().ok ? nullptr : &rows.front();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : rows) {
    out += r.cell.name + '\t' + (r.ok ? std::string("ok") : "failed: " + r.error) + '\t' +
           std::to_string(r.train_pairs) + '\t';
    const auto value = [&](const char* s) { return r.ok ? r.ndcg.at(s) : nan; };
    out += num(r.ok ? r.auprc : nan);
    for (const char* s : kSignals) out += '\t' + num(value(s));
    const bool both = r.ok && base != nullptr;
    out += '\t' + num(both ? delta_pct(r.auprc, base->auprc) : nan);
    for (const char* s : kSignals) out += '\t' + num(both ? delta_pct(r.ndcg.at(s), base->ndcg.at(s)) : nan);
    out += '\n';
  }
  return out;
}

GenSummary cmd_gen(const RunConfig& config, std::ostream& log) {
  ensure_dir(config.out);
  const World world = stage("gen/world", [&] { return generate_world(config.world); });
  const auto traffic = stage("gen/traffic", [&] { return simulate_traffic(world); });
  const auto table = stage("gen/embeddings", [&] { return generate_embeddings(world); });
  std::unordered_set<std::string> served;
  for (const auto& r : traffic) served.insert(pair_key(r.query_id, r.candidate_id));
  FunctionalityOptions fopts;
  fopts.ratio_pos = config.functionality_ratio_pos;
  fopts.n = config.functionality_pairs;
  fopts.related_share = config.functionality_related_share;
  fopts.seed = derive_seed(config.seed, "functionality");
  const auto functionality = stage("gen/functionality", [&] { return build_functionality_evalset(world, fopts, served); });

  write_catalog(config.catalog_path(), world.catalog);
  write_traffic(config.traffic_path(), traffic);
  write_ground_truth(config.ground_truth_path(), world);
  write_functionality_set(config.functionality_path(), functionality);
  write_embeddings(config.embeddings_path(), table);
  write_hidden_params(config.out / kHiddenParamsFile, world);

  GenSummary s;
  s.products = world.catalog.size();
  s.traffic_records = traffic.size();
  s.functionality_pairs = functionality.pairs.size();
  s.embedding_words = table.size();
  std::size_t zero = 0;
  std::vector<double> ctr, cvr;
  for (const auto& r : traffic) {
    if (r.impressions < config.label.min_impressions) continue;
    ++s.thresholded_pairs;
    if (r.purchases == 0) ++zero;
    if (r.clicks > 0) {
      ctr.push_back(compute_signal(r, Signal::ctr));
      cvr.push_back(compute_signal(r, Signal::cvr));
    }
  }
  if (s.thresholded_pairs > 0) {
    s.zero_purchase_fraction = static_cast<double>(zero) / static_cast<double>(s.thresholded_pairs);
  }
  try {
    s.pearson_ctr_cvr = pearson(ctr, cvr);
  } catch (const Error&) {
    s.pearson_ctr_cvr.reset();
  }

  log << "products\t" << s.products << "\n"
      << "traffic_records\t" << s.traffic_records << "\n"
      << "thresholded_pairs\t" << s.thresholded_pairs << "\n"
      << "zero_purchase_fraction\t" << num(s.zero_purchase_fraction) << "\n"
      << "pearson_ctr_cvr\t" << (s.pearson_ctr_cvr ? num(*s.pearson_ctr_cvr) : "undefined") << "\n"
      << "functionality_pairs\t" << s.functionality_pairs << "\n"
      << "embedding_words\t" << s.embedding_words << "\n";
  return s;
}

PrepareSummary cmd_prepare(const RunConfig& config, std::ostream& log) {
  ensure_dir(config.out);
  require_file(config.catalog_path(), "catalog (run gen first)");
  require_file(config.traffic_path(), "traffic (run gen first)");
  const Catalog catalog = stage("prepare/catalog", [&] { return load_catalog(config.catalog_path()); });
  const auto traffic = stage("prepare/traffic", [&] { return load_traffic(config.traffic_path(), catalog); });

  PrepareSummary s;
  const auto labeled = stage("prepare/labels", [&] { return build_labeled_pairs(traffic, catalog, config.label); });
  s.labeling = labeled.summary;
  if (labeled.pairs.empty()) {
    throw Error(ErrorKind::data, "prepare: empty dataset, no pair has at least " +
                                     std::to_string(config.label.min_impressions) + " impressions and a defined label");
  }

  NegativeSamplingConfig ns;
  ns.ratio = config.negative_ratio;
  ns.negative_label = config.negative_label.value_or(default_negative_label(config.label.spec, labeled.pairs));
  ns.seed = derive_seed(config.seed, "sampling");
  s.negative_label = ns.negative_label;
  const auto augmented = stage("prepare/negatives", [&] {
    ns.validate_for(config.label.spec);
    return augment(labeled.pairs, catalog, ns);
  });
  s.random_negatives = augmented.size() - labeled.pairs.size();

  const auto split_seed = derive_seed(config.seed, "split");
  const auto split = stage("prepare/split", [&] { return grouped_split(augmented, config.val_fraction, split_seed); });
  s.train_pairs = split.train.size();
  s.validation_pairs = split.validation.size();
  s.query_overlap = query_overlap(split);
  if (s.query_overlap != 0) throw Error(ErrorKind::data, "prepare/split: train and validation share query ids");

  const auto val_queries = query_ids(split.validation);
  const auto ranking = stage("prepare/ranking", [&] {
    return build_ranking_evalset(traffic, catalog, config.eval_min_impressions, &val_queries);
  });
  s.ranking_groups = ranking.groups.size();

  write_labeled_pairs(config.out / kTrainFile, split.train);
  write_labeled_pairs(config.out / kValidationFile, split.validation);
  write_ranking_set(config.out / kRankingFile, ranking);

  Json m;
  m["seed"] = config.seed;
  m["sub_seeds"] = Json{{"split", split_seed}, {"sampling", ns.seed}};
  m["inputs"] = Json{{"catalog", config.catalog_path().string()}, {"traffic", config.traffic_path().string()}};
  m["label"] = Json{{"name", config.label.spec.name()},
                    {"signal", to_string(config.label.spec.signal)},
                    {"transform", to_string(config.label.spec.transform)},
                    {"epsilon", config.label.spec.epsilon},
                    {"task", to_string(config.label.spec.task)},
                    {"min_impressions", config.label.min_impressions}};
  m["labeling"] = Json{{"input_records", s.labeling.input},
                       {"below_min_impressions", s.labeling.below_min_impressions},
                       {"undefined_signal", s.labeling.undefined_signal},
                       {"emitted", s.labeling.emitted}};
  m["negatives"] = Json{{"ratio", ns.ratio}, {"label", ns.negative_label}, {"appended", s.random_negatives}};
  m["split"] = Json{{"val_fraction", config.val_fraction},
                    {"train_pairs", s.train_pairs},
                    {"validation_pairs", s.validation_pairs},
                    {"train_queries", query_ids(split.train).size()},
                    {"validation_queries", val_queries.size()},
                    {"query_overlap", s.query_overlap}};
  m["ranking"] = Json{{"min_impressions", ranking.min_impressions},
                      {"groups", ranking.groups.size()},
                      {"candidates", ranking.candidate_count()},
                      {"dropped_groups", ranking.dropped_groups}};
  detail::write_text_file(config.out / kManifestFile, m.dump(2) + "\n");

  log << "labeled_pairs\t" << s.labeling.emitted << "\n"
      << "below_min_impressions\t" << s.labeling.below_min_impressions << "\n"
      << "undefined_signal\t" << s.labeling.undefined_signal << "\n"
      << "random_negatives\t" << s.random_negatives << "\n"
      << "train_pairs\t" << s.train_pairs << "\n"
      << "validation_pairs\t" << s.validation_pairs << "\n"
      << "query_overlap\t" << s.query_overlap << "\n"
      << "ranking_groups\t" << s.ranking_groups << "\n";
  return s;
}

std::size_t cmd_train(const RunConfig& config, std::ostream& log) {
  const DatasetSplit split = load_split(config);
  if (split.train.empty()) throw Error(ErrorKind::data, "train: the training split is empty");
  std::string history;

  if (config.model == ModelKind::gbdt) {
    const EmbeddingTable table = load_table(config);
    const auto stopwords = stopwords_for(config);
    const auto features = pair_features(split.train, table, stopwords);
    const auto labels = labels_of(split.train);
    const auto fit = stage("train/gbdt", [&] { return fit_gbdt(features, labels, config.gbdt, config.gbdt_objective()); });
    fit.model.save(config.out / kGbdtModelFile);
    history = "round\ttraining_loss\n";
    for (std::size_t r = 0; r < fit.training_loss.size(); ++r) {
      history += std::to_string(r) + '\t' + num(fit.training_loss[r]) + '\n';
    }
    detail::write_text_file(config.out / kHistoryFile, history);
    log << "model\tgbdt\ntrees\t" << fit.model.trees().size() << "\nfinal_training_loss\t"
        << num(fit.training_loss.back()) << "\n";
    return fit.training_loss.size();
  }

  const Vocabulary vocab = build_pair_vocab(split.train, config.crossenc);
  TrainConfig train = config.train;
  train.loss = config.crossenc_loss();
  const auto result = stage("train/crossenc", [&] { return train_cross_encoder(split, vocab, config.crossenc, train); });
  save_cross_encoder(config.out / kCrossEncoderModelFile, result.model, vocab);
  history = "epoch\ttrain_loss\tval_loss\n";
  for (const auto& e : result.history) {
    history += std::to_string(e.epoch) + '\t' + num(e.train_loss) + '\t' + num(e.val_loss) + '\n';
  }
  detail::write_text_file(config.out / kHistoryFile, history);
  log << "model\tcrossenc\nparameters\t" << result.model.weights.parameter_count() << "\nvocabulary\t"
      << vocab.size() << "\nepochs\t" << result.history.size() << "\nbest_epoch\t" << result.best_epoch << "\n";
  return result.history.size();
}

MetricsReport cmd_eval(const RunConfig& config, bool oracle_scorer, std::ostream& log) {
  const auto functionality = load_functionality(config);
  const auto ranking = load_ranking(config);
  EvalOptions opts;
  opts.histogram_bins = config.eval_bins;
  opts.gain = config.eval_gain;

  MetricsReport report;
  if (oracle_scorer) {
    require_file(config.ground_truth_path(), "ground truth");
    const OracleScorer scorer(load_ground_truth(config.ground_truth_path()));
    report = stage("eval", [&] { return evaluate(scorer, functionality, ranking, opts); });
  } else {
    EmbeddingTable table;
    if (config.model == ModelKind::gbdt) table = load_table(config);
    const auto scorer = load_scorer(config, table);
    report = stage("eval", [&] { return evaluate(*scorer, functionality, ranking, opts); });
  }
  detail::write_text_file(config.out / kReportFile, report.to_json());
  write_histogram_tsv(config.out / kHistogramFile, report.histogram);
  log << "auprc\t" << num(report.auprc) << "\n";
  for (const auto& [s, v] : report.ndcg_by_signal) log << "ndcg_" << s << "\t" << num(v) << "\n";
  log << "separation\t" << num(report.histogram.separation) << "\n";
  return report;
}

AblationTable cmd_ablate(const RunConfig& config, std::ostream& log) {
  const DatasetSplit split = load_split(config);
  const auto functionality = load_functionality(config);
  const auto ranking = load_ranking(config);
  EvalOptions opts;
  opts.histogram_bins = config.eval_bins;
  opts.gain = config.eval_gain;

  std::vector<AblationCell> grid = default_ablation_grid();
  std::optional<EmbeddingTable> table;
  std::vector<PairFeature> features;
  std::optional<Vocabulary> vocab;
  if (config.ablate_model == ModelKind::gbdt) {
    table = load_table(config);
    features = pair_features(split.train, *table, stopwords_for(config));
  } else {
    // The cross-encoder has no hinge loss; CVR and GMV rows are dropped to
    // keep the grid affordable.
    std::erase_if(grid, [](const AblationCell& c) {
      return c.objective == Objective::hinge || c.spec.signal == Signal::cvr || c.spec.signal == Signal::gmv_rate;
    });
    vocab = build_pair_vocab(split.train, config.crossenc);
  }

  AblationTable out;
  for (const auto& cell : grid) {
    AblationRow row;
    row.cell = cell;
    try {
      const Relabeled r = relabel_indices(split.train, cell.spec);
      row.train_pairs = r.index.size();
      if (r.index.empty()) throw Error(ErrorKind::data, "no training pairs with a defined label");
      std::unique_ptr<PairScorer> scorer;
      if (config.ablate_model == ModelKind::gbdt) {
        std::vector<PairFeature> x;
        x.reserve(r.index.size());
        for (auto i : r.index) x.push_back(features[i]);
        auto fit = fit_gbdt(x, r.labels, config.gbdt, cell.objective);
        scorer = std::make_unique<GbdtScorer>(std::move(fit.model), *table, stopwords_for(config));
      } else {
        DatasetSplit cell_split;
        for (std::size_t k = 0; k < r.index.size(); ++k) {
          LabeledPair p = split.train[r.index[k]];
          p.label = r.labels[k];
          cell_split.train.push_back(std::move(p));
        }
        TrainConfig train = config.train;
        train.loss = cell.objective == Objective::logistic ? LossKind::logistic : LossKind::mse;
        auto result = train_cross_encoder(cell_split, *vocab, config.crossenc, train);
        scorer = std::make_unique<CrossEncoderScorer>(std::move(result.model), *vocab);
      }
      const auto report = evaluate(*scorer, functionality, ranking, opts);
      row.auprc = report.auprc;
      row.ndcg = report.ndcg_by_signal;
      row.ok = true;
    } catch (const Error& e) {
      row.error = std::string(to_string(e.kind())) + ": " + e.what();
    }
    log << cell.name << "\t" << (row.ok ? "ok" : row.error) << "\n";
    out.rows.push_back(std::move(row));
  }
  detail::write_text_file(config.out / kAblationFile, out.to_tsv());
  return out;
}

std::size_t cmd_score(const RunConfig& config, std::ostream& log) {
  if (config.score_pairs.empty()) throw Error(ErrorKind::config, "score: set score.pairs to a pairs file");
  require_file(config.score_pairs, "pairs file");
  require_file(config.catalog_path(), "catalog");
  const Catalog catalog = load_catalog(config.catalog_path());

  std::map<std::string, std::vector<ProductPair>> by_query;
  std::unordered_set<std::string> seen;
  detail::for_each_jsonl(config.score_pairs, [&](std::size_t line, const Json& j) {
    const auto q = detail::field<std::string>(j, "query_id");
    const auto c = detail::field<std::string>(j, "candidate_id");
    const auto* qp = catalog.find(q);
    const auto* cp = catalog.find(c);
    if (qp == nullptr || cp == nullptr) {
      throw Error(ErrorKind::data, detail::where(config.score_pairs, line) + "unknown product id");
    }
    if (!seen.insert(pair_key(q, c)).second) {
      throw Error(ErrorKind::data, detail::where(config.score_pairs, line) + "duplicate pair");
    }
    by_query[q].push_back(make_pair(*qp, *cp));
  });

  EmbeddingTable table;
  if (config.model == ModelKind::gbdt) table = load_table(config);
  const auto scorer = load_scorer(config, table);

  std::string text = "query_id\trank\tcandidate_id\tscore\n";
  std::size_t rows = 0;
  for (const auto& [query, pairs] : by_query) {
    const auto scores = scorer->score(pairs);
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return pairs[a].candidate_id < pairs[b].candidate_id;
    });
    const std::size_t k = std::min(config.score_top_k, order.size());
    for (std::size_t r = 0; r < k; ++r) {
      const auto i = order[r];
      text += query + '\t' + std::to_string(r + 1) + '\t' + pairs[i].candidate_id + '\t' + num(scores[i]) + '\n';
      ++rows;
    }
  }
  detail::write_text_file(config.out / kScoresFile, text);
  log << "queries\t" << by_query.size() << "\nrows\t" << rows << "\n";
  return rows;
}

}  // namespace subrank
