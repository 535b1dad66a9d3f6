#include "doctest.h"
#include "expect_error.hpp"
#include "subrank/config.hpp"
#include "subrank/rng.hpp"
#include "temp_dir.hpp"

using namespace subrank;
using testing_support::error_kind;

TEST_CASE("parse key = value text") {
  const auto m = parse_config_text(
      "# comment\n"
      "seed = 7\n"
      "\n"
      "signal=ctr   # trailing comment\n"
      "out = runs/a#b\n");
  CHECK(m.size() == 3);
  CHECK(m.at("seed") == "7");
  CHECK(m.at("signal") == "ctr");
  CHECK(m.at("out") == "runs/a#b");
  CHECK(error_kind([] { parse_config_text("seed = 1\nseed = 2\n"); }) == ErrorKind::config);
  CHECK(error_kind([] { parse_config_text("just words\n"); }) == ErrorKind::config);
  CHECK(error_kind([] { parse_config_text(" = 3\n"); }) == ErrorKind::config);
}

TEST_CASE("defaults") {
  const auto c = make_run_config({});
  CHECK(c.seed == 1);
  CHECK(c.label.min_impressions == 250);
  CHECK(c.label.spec.epsilon == 1e-4);
  CHECK(c.label.spec.signal == Signal::pr);
  CHECK(c.label.spec.transform == Transform::log_epsilon);
  CHECK(c.negative_ratio == 0.5);
  CHECK(!c.negative_label.has_value());
  CHECK(c.eval_min_impressions == 500);
  CHECK(c.functionality_ratio_pos == 0.6);
  CHECK(c.gbdt_objective() == Objective::mse);
  CHECK(c.catalog_path() == std::filesystem::path("run") / "catalog.jsonl");
}

TEST_CASE("overrides, seeds and path resolution") {
  ConfigMap base{{"seed", "3"}, {"signal", "cvr"}, {"transform", "identity"}, {"out", "x"}};
  ConfigMap over{{"seed", "9"}, {"gbdt.n_trees", "12"}, {"catalog", "/data/c.jsonl"}};
  const auto c = make_run_config(base, over);
  CHECK(c.seed == 9);
  CHECK(c.world.seed == 9);
  CHECK(c.train.seed == 9);
  CHECK(c.gbdt.seed == derive_seed(9, "gbdt"));
  CHECK(c.gbdt.n_trees == 12);
  CHECK(c.label.spec.signal == Signal::cvr);
  CHECK(c.catalog_path() == "/data/c.jsonl");
  CHECK(c.traffic_path() == std::filesystem::path("x") / "traffic.jsonl");
}

TEST_CASE("unknown keys and bad values are config errors") {
  CHECK(error_kind([] { make_run_config({{"no_such_key", "1"}}); }) == ErrorKind::config);
  CHECK(error_kind([] { make_run_config({{"seed", "abc"}}); }) == ErrorKind::config);
  CHECK(error_kind([] { make_run_config({{"model", "svm"}}); }) == ErrorKind::config);
  CHECK(error_kind([] { make_run_config({{"loss", "logistic"}}); }) == ErrorKind::config);
  CHECK(error_kind([] { make_run_config({{"val_fraction", "1.5"}}); }) == ErrorKind::config);
  CHECK(error_kind([] { make_run_config({{"epsilon", "0"}}); }) == ErrorKind::config);
  CHECK(error_kind([] { make_run_config({{"crossenc.d_model", "6"}, {"model", "crossenc"}}); }) ==
        ErrorKind::config);
  CHECK(error_kind([] { read_config_file("/nonexistent/file.conf"); }) == ErrorKind::config);
}

TEST_CASE("classification losses") {
  const auto c = make_run_config({{"task", "classification"}, {"loss", "hinge"}});
  CHECK(c.gbdt_objective() == Objective::hinge);
  CHECK(error_kind([&] { c.crossenc_loss(); }) == ErrorKind::config);
  const auto auto_cls = make_run_config({{"task", "classification"}});
  CHECK(auto_cls.gbdt_objective() == Objective::logistic);
  CHECK(auto_cls.crossenc_loss() == LossKind::logistic);
  const auto neg = make_run_config({{"negative_label", "auto"}});
  CHECK(!neg.negative_label.has_value());
  CHECK(make_run_config({{"negative_label", "-12.5"}}).negative_label == -12.5);
}

TEST_CASE("to_text round-trips through the parser") {
  const auto c = make_run_config({{"seed", "4"}, {"world.marketplaces", "US:en,FR:fr"}, {"gbdt.learning_rate", "0.25"}});
  const auto text = c.to_text();
  const auto again = make_run_config(parse_config_text(text));
  CHECK(again.to_text() == text);
  CHECK(again.world.marketplaces.size() == 2);
  CHECK(again.gbdt.learning_rate == 0.25);
  // Every documented key appears in the dump.
  for (const auto& k : config_keys()) CHECK_MESSAGE(text.find(k + " = ") != std::string::npos, k);

  testing_support::TempDir dir;
  testing_support::write_file(dir / "c.conf", text);
  CHECK(make_run_config(read_config_file(dir / "c.conf")).to_text() == text);
}
