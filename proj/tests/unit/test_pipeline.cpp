#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "expect_error.hpp"
#include "json.hpp"
#include "subrank/pipeline.hpp"
#include "temp_dir.hpp"

using namespace subrank;
using testing_support::error_kind;
using testing_support::read_file;
using testing_support::TempDir;
using testing_support::write_file;
namespace fs = std::filesystem;

namespace {

/// A world small enough for sub-second commands.
RunConfig small_config(const fs::path& out, ConfigMap extra = {}) {
  ConfigMap m{{"out", out.string()},
              {"world.n_categories", "6"},
              {"world.products_per_category", "40"},
              {"eval.functionality_pairs", "200"},
              {"gbdt.n_trees", "10"},
              {"gbdt.min_samples_leaf", "5"},
              {"crossenc.d_model", "16"},
              {"crossenc.d_ff", "32"},
              {"crossenc.n_layers", "1"},
              {"crossenc.max_len", "24"},
              {"crossenc.epochs", "1"},
              {"crossenc.vocab_min_freq", "1"}};
  for (auto& [k, v] : extra) m[k] = v;
  return make_run_config(m);
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, '\t');) out.push_back(f);
  return out;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file()) out[e.path().filename().string()] = read_file(e.path());
  }
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SUBRANK_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("gen creates the directory and is byte-identical per seed") {
  TempDir dir;
  std::ostringstream log;
  const auto a = small_config(dir / "nested" / "a");
  const auto b = small_config(dir / "b");
  const auto s = cmd_gen(a, log);
  cmd_gen(b, log);
  CHECK(s.products == 240);
  CHECK(s.traffic_records > 0);
  CHECK(s.functionality_pairs == 200);
  CHECK(s.embedding_words > 0);
  for (const char* f : {"catalog.jsonl", "traffic.jsonl", "embeddings.vec", "ground_truth.jsonl",
                        "functionality_eval.jsonl", kHiddenParamsFile}) {
    CHECK_MESSAGE(fs::exists(a.out / f), f);
  }
  CHECK(snapshot(a.out) == snapshot(b.out));
  cmd_gen(small_config(dir / "c", {{"seed", "2"}}), log);
  CHECK(read_file(dir / "c" / "traffic.jsonl") != read_file(a.out / "traffic.jsonl"));
}

TEST_CASE("prepare writes data and a manifest with zero overlap") {
  TempDir dir;
  std::ostringstream log;
  const auto c = small_config(dir.path());
  cmd_gen(c, log);
  const auto s = cmd_prepare(c, log);
  CHECK(s.query_overlap == 0);
  CHECK(s.train_pairs > 0);
  CHECK(s.validation_pairs > 0);
  CHECK(s.random_negatives > 0);
  const auto m = nlohmann::json::parse(read_file(dir / kManifestFile));
  CHECK(m["label"]["min_impressions"] == 250);
  CHECK(m["label"]["epsilon"] == 1e-4);
  CHECK(m["negatives"]["ratio"] == 0.5);
  CHECK(m["negatives"]["label"].get<double>() == doctest::Approx(std::log(1e-4) - 1.0));
  CHECK(m["seed"] == 1);
  CHECK(m["sub_seeds"].contains("split"));
  CHECK(m["sub_seeds"].contains("sampling"));
  CHECK(m["split"]["query_overlap"] == 0);

  const auto before = snapshot(dir.path());
  cmd_prepare(c, log);
  CHECK(snapshot(dir.path()) == before);
}

TEST_CASE("prepare fails with an empty-dataset error when nothing passes the threshold") {
  TempDir dir;
  std::ostringstream log;
  const auto c = small_config(dir.path(), {{"min_impressions", "100000000"}});
  cmd_gen(c, log);
  const auto msg = testing_support::error_message([&] { cmd_prepare(c, log); });
  CHECK(msg.find("empty dataset") != std::string::npos);
  CHECK(error_kind([&] { cmd_prepare(c, log); }) == ErrorKind::data);
  TempDir missing;
  CHECK(error_kind([&] { cmd_prepare(small_config(missing.path()), log); }) == ErrorKind::config);
}

TEST_CASE("train, eval and score with gbdt") {
  TempDir dir;
  std::ostringstream log;
  auto c = small_config(dir.path());
  cmd_gen(c, log);
  cmd_prepare(c, log);
  CHECK(cmd_train(c, log) == 11);
  const auto history = lines_of(read_file(dir / kHistoryFile));
  REQUIRE(history.size() == 12);
  CHECK(history[0] == "round\ttraining_loss");

  const auto model_bytes = read_file(dir / kGbdtModelFile);
  cmd_train(c, log);
  CHECK(read_file(dir / kGbdtModelFile) == model_bytes);

  const auto report = cmd_eval(c, false, log);
  CHECK(report.auprc > 0.0);
  CHECK(report.per_marketplace.size() == 3);
  const auto report_bytes = read_file(dir / kReportFile);
  const auto hist_bytes = read_file(dir / kHistogramFile);
  cmd_eval(c, false, log);
  CHECK(read_file(dir / kReportFile) == report_bytes);
  CHECK(read_file(dir / kHistogramFile) == hist_bytes);
  CHECK(report_bytes.find("per_marketplace") != std::string::npos);

  const auto oracle = cmd_eval(c, true, log);
  CHECK(oracle.auprc == 1.0);

  // Score: one query with 3 candidates (top_k larger than that), another with 5.
  const auto catalog = read_file(dir / "catalog.jsonl");
  std::vector<std::string> ids;
  for (const auto& line : lines_of(catalog)) ids.push_back(nlohmann::json::parse(line)["product_id"]);
  std::string pairs;
  for (int k = 1; k <= 3; ++k) pairs += R"({"query_id":")" + ids[0] + R"(","candidate_id":")" + ids[k] + "\"}\n";
  for (int k = 0; k < 5; ++k) pairs += R"({"query_id":")" + ids[10] + R"(","candidate_id":")" + ids[20 + k] + "\"}\n";
  write_file(dir / "pairs.jsonl", pairs);
  c = small_config(dir.path(), {{"score.pairs", (dir / "pairs.jsonl").string()}, {"score.top_k", "4"}});
  CHECK(cmd_score(c, log) == 3 + 4);
  const auto scores = lines_of(read_file(dir / kScoresFile));
  REQUIRE(scores.size() == 8);
  CHECK(scores[0] == "query_id\trank\tcandidate_id\tscore");
  for (std::size_t i = 2; i < scores.size(); ++i) {
    const auto prev = fields(scores[i - 1]);
    const auto cur = fields(scores[i]);
    if (prev[0] != cur[0]) continue;
    const double ps = std::stod(prev[3]), cs = std::stod(cur[3]);
    CHECK(ps >= cs);
    if (ps == cs) CHECK(prev[2] < cur[2]);
    CHECK(std::stoi(cur[1]) == std::stoi(prev[1]) + 1);
  }
  const auto bytes = read_file(dir / kScoresFile);
  cmd_score(c, log);
  CHECK(read_file(dir / kScoresFile) == bytes);
}

TEST_CASE("crossenc train with epochs 0 writes the initial weights") {
  TempDir dir;
  std::ostringstream log;
  const auto c = small_config(dir.path(), {{"model", "crossenc"}, {"crossenc.epochs", "0"}});
  cmd_gen(c, log);
  cmd_prepare(c, log);
  CHECK(cmd_train(c, log) == 0);
  CHECK(lines_of(read_file(dir / kHistoryFile)).size() == 1);
  CHECK(fs::exists(dir / kCrossEncoderModelFile));
  const auto c2 = small_config(dir.path(), {{"model", "crossenc"}, {"crossenc.epochs", "2"}});
  CHECK(cmd_train(c2, log) == 2);
  CHECK(lines_of(read_file(dir / kHistoryFile)).size() == 3);
  CHECK(lines_of(read_file(dir / kHistoryFile))[0] == "epoch\ttrain_loss\tval_loss");
  const auto r = cmd_eval(c2, false, log);
  CHECK(r.auprc > 0.0);
}

TEST_CASE("ablate writes seven rows with zero baseline deltas") {
  TempDir dir;
  std::ostringstream log;
  const auto c = small_config(dir.path());
  cmd_gen(c, log);
  cmd_prepare(c, log);
  const auto table = cmd_ablate(c, log);
  REQUIRE(table.rows.size() == 7);
  CHECK(table.rows[0].cell.name == "CTR+MSE");
  for (const auto& r : table.rows) CHECK_MESSAGE(r.ok, r.cell.name, ": ", r.error);
  const auto tsv = lines_of(read_file(dir / kAblationFile));
  REQUIRE(tsv.size() == 8);
  const auto header = fields(tsv[0]);
  CHECK(header.size() >= 7);
  const auto base = fields(tsv[1]);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i].rfind("delta_", 0) == 0) CHECK(std::stod(base[i]) == 0.0);
  }
  std::set<std::string> names;
  for (const auto& r : table.rows) names.insert(r.cell.name);
  CHECK(names.size() == 7);
  CHECK(names.count("PR+Log+MSE"));
  CHECK(AblationTable::delta_pct(1.1, 1.0) == doctest::Approx(10.0));
}

TEST_CASE("gbdt trains on the default world within a minute") {
  TempDir dir;
  std::ostringstream log;
  const auto c = make_run_config({{"out", dir.path().string()}});
  cmd_gen(c, log);
  cmd_prepare(c, log);
  const auto t0 = std::chrono::steady_clock::now();
  cmd_train(c, log);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 60.0);
}

TEST_CASE("exit code mapping") {
  CHECK(exit_code(ErrorKind::config) == 2);
  CHECK(exit_code(ErrorKind::data) == 3);
  CHECK(exit_code(ErrorKind::undefined_signal) == 3);
  CHECK(exit_code(ErrorKind::sampling_exhausted) == 3);
  CHECK(exit_code(ErrorKind::divergence) == 4);
  CHECK(exit_code(ErrorKind::undefined_metric) == 5);
}

TEST_CASE("CLI exit codes") {
  TempDir dir;
  const std::string out = "--out " + dir.path().string();
  const std::string small = " --set world.n_categories=6 --set world.products_per_category=40"
                            " --set eval.functionality_pairs=200 --set gbdt.n_trees=5";
  CHECK(run_cli("gen " + out + small) == 0);
  CHECK(run_cli("prepare " + out + small) == 0);
  CHECK(run_cli("train " + out + small) == 0);
  CHECK(run_cli("eval --debug-oracle-scorer " + out + small) == 0);
  CHECK(run_cli("--seed 2 gen --out " + (dir / "s2").string() + small) == 0);
  CHECK(run_cli("gen " + out + " --set no_such=1") == 2);
  CHECK(run_cli("gen " + out + " --config /nonexistent.conf") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("prepare " + out + small + " --set min_impressions=100000000") == 3);
  TempDir empty;
  CHECK(run_cli("train --out " + empty.path().string()) == 2);

  write_file(dir / "c.conf", "seed = 1\nworld.n_categories = 6\nworld.products_per_category = 40\n"
                             "eval.functionality_pairs = 200\n");
  CHECK(run_cli("gen --config " + (dir / "c.conf").string() + " --out " + (dir / "cfg").string()) == 0);
  CHECK(read_file(dir / "cfg" / "traffic.jsonl") == read_file(dir / "traffic.jsonl"));
}
