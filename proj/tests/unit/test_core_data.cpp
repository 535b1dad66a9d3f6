#include <algorithm>
#include <functional>
#include <set>

#include "doctest.h"
#include "subrank/data_io.hpp"
#include "subrank/error.hpp"
#include "subrank/split.hpp"
#include "subrank/types.hpp"
#include "expect_error.hpp"
#include "temp_dir.hpp"

using namespace subrank;
using testing_support::TempDir;
using testing_support::write_file;
const auto& kind_of = testing_support::error_kind;
const auto& message_of = testing_support::error_message;

namespace {

const char* kCatalog =
    R"({"product_id":"a","title":"Vitamin D3 5000IU","marketplace":"US","language":"en"}
{"product_id":"b","title":"Vitamin C 1000mg","marketplace":"US","language":"en"}
{"product_id":"c","title":"Fischöl Kapseln","marketplace":"DE","language":"de"}
)";

std::vector<LabeledPair> grid_pairs(int queries, int per_query) {
  std::vector<LabeledPair> pairs;
  for (int q = 0; q < queries; ++q) {
    for (int c = 0; c < per_query; ++c) {
      LabeledPair lp;
      lp.pair.query_id = "q" + std::to_string(q);
      lp.pair.candidate_id = "c" + std::to_string(c);
      pairs.push_back(lp);
    }
  }
  return pairs;
}

}  // namespace

TEST_CASE("catalog loads valid lines") {
  TempDir dir;
  write_file(dir / "catalog.jsonl", kCatalog);
  const auto catalog = load_catalog(dir / "catalog.jsonl");
  CHECK(catalog.size() == 3);
  CHECK(catalog.at("c").title == "Fischöl Kapseln");
  CHECK(catalog.find("zz") == nullptr);
}

TEST_CASE("catalog rejects duplicate ids and names them") {
  TempDir dir;
  write_file(dir / "catalog.jsonl", std::string(kCatalog) +
                                        R"({"product_id":"b","title":"again","marketplace":"US","language":"en"})" "\n");
  const auto msg = message_of([&] { load_catalog(dir / "catalog.jsonl"); });
  CHECK(msg.find("duplicate") != std::string::npos);
  CHECK(msg.find("'b'") != std::string::npos);
  CHECK(msg.find(":4:") != std::string::npos);
}

TEST_CASE("catalog rejects blank titles and malformed lines with line numbers") {
  TempDir dir;
  write_file(dir / "blank.jsonl", R"({"product_id":"a","title":"   ","marketplace":"US","language":"en"})" "\n");
  CHECK(kind_of([&] { load_catalog(dir / "blank.jsonl"); }) == ErrorKind::data);
  write_file(dir / "bad.jsonl", std::string(kCatalog) + "{not json\n");
  CHECK(message_of([&] { load_catalog(dir / "bad.jsonl"); }).find(":4:") != std::string::npos);
  write_file(dir / "missing.jsonl", R"({"product_id":"a","title":"x","language":"en"})" "\n");
  CHECK(message_of([&] { load_catalog(dir / "missing.jsonl"); }).find("marketplace") != std::string::npos);
}

TEST_CASE("empty catalog file is a valid empty catalog") {
  TempDir dir;
  write_file(dir / "empty.jsonl", "");
  CHECK(load_catalog(dir / "empty.jsonl").empty());
}

TEST_CASE("traffic validation") {
  TempDir dir;
  write_file(dir / "catalog.jsonl", kCatalog);
  const auto catalog = load_catalog(dir / "catalog.jsonl");

  SUBCASE("well-formed record is accepted") {
    write_file(dir / "t.jsonl",
               R"({"query_id":"a","candidate_id":"b","impressions":250,"clicks":10,"purchases":5,"gmv":12.5})" "\n");
    const auto t = load_traffic(dir / "t.jsonl", catalog);
    REQUIRE(t.size() == 1);
    CHECK(t[0].impressions == 250);
    CHECK(t[0].clicks == 10);
    CHECK(t[0].purchases == 5);
    CHECK(t[0].gmv == 12.5);
  }
  SUBCASE("clicks above impressions is an invariant violation naming the record") {
    write_file(dir / "t.jsonl",
               R"({"query_id":"a","candidate_id":"b","impressions":10,"clicks":20,"purchases":0,"gmv":0})" "\n");
    const auto msg = message_of([&] { load_traffic(dir / "t.jsonl", catalog); });
    CHECK(msg.find("clicks exceed impressions") != std::string::npos);
    CHECK(msg.find(":1:") != std::string::npos);
  }
  SUBCASE("purchases above clicks") {
    write_file(dir / "t.jsonl",
               R"({"query_id":"a","candidate_id":"b","impressions":10,"clicks":2,"purchases":3,"gmv":0})" "\n");
    CHECK(kind_of([&] { load_traffic(dir / "t.jsonl", catalog); }) == ErrorKind::data);
  }
  SUBCASE("unknown candidate id") {
    write_file(dir / "t.jsonl",
               R"({"query_id":"a","candidate_id":"zz","impressions":10,"clicks":2,"purchases":0,"gmv":0})" "\n");
    CHECK(message_of([&] { load_traffic(dir / "t.jsonl", catalog); }).find("zz") != std::string::npos);
  }
  SUBCASE("self-pair, negative counts, negative gmv, duplicates") {
    write_file(dir / "t.jsonl",
               R"({"query_id":"a","candidate_id":"a","impressions":10,"clicks":2,"purchases":0,"gmv":0})" "\n");
    CHECK(kind_of([&] { load_traffic(dir / "t.jsonl", catalog); }) == ErrorKind::data);
    write_file(dir / "t.jsonl",
               R"({"query_id":"a","candidate_id":"b","impressions":-1,"clicks":0,"purchases":0,"gmv":0})" "\n");
    CHECK(kind_of([&] { load_traffic(dir / "t.jsonl", catalog); }) == ErrorKind::data);
    write_file(dir / "t.jsonl",
               R"({"query_id":"a","candidate_id":"b","impressions":1,"clicks":0,"purchases":0,"gmv":-2})" "\n");
    CHECK(kind_of([&] { load_traffic(dir / "t.jsonl", catalog); }) == ErrorKind::data);
    write_file(dir / "t.jsonl",
               R"({"query_id":"a","candidate_id":"b","impressions":1,"clicks":0,"purchases":0,"gmv":0}
{"query_id":"a","candidate_id":"b","impressions":2,"clicks":0,"purchases":0,"gmv":0}
)");
    CHECK(message_of([&] { load_traffic(dir / "t.jsonl", catalog); }).find("duplicate") != std::string::npos);
  }
}

TEST_CASE("loaders are pure given bytes and writers round-trip") {
  TempDir dir;
  write_file(dir / "catalog.jsonl", kCatalog);
  const auto c1 = load_catalog(dir / "catalog.jsonl");
  write_catalog(dir / "copy.jsonl", c1);
  const auto c2 = load_catalog(dir / "copy.jsonl");
  CHECK(c1.products() == c2.products());

  std::vector<TrafficRecord> t{{"a", "b", 300, 12, 3, 29.97}, {"b", "c", 1000, 0, 0, 0.0}};
  write_traffic(dir / "t.jsonl", t);
  CHECK(load_traffic(dir / "t.jsonl", c1) == t);

  LabeledPair lp;
  lp.pair = make_pair(c1.at("a"), c1.at("c"));
  lp.label = -9.210340371976182;
  lp.kind = PairKind::hard_negative;
  lp.counts = {1000, 7, 0, 0.0};
  std::vector<LabeledPair> pairs{lp};
  write_labeled_pairs(dir / "p.jsonl", pairs);
  CHECK(load_labeled_pairs(dir / "p.jsonl") == pairs);
}

TEST_CASE("grouped split: 10 queries x 5 pairs at 0.2 puts 2 groups in validation") {
  const auto pairs = grid_pairs(10, 5);
  const auto split = grouped_split(pairs, 0.2, 7);
  CHECK(query_ids(split.validation).size() == 2);
  CHECK(query_ids(split.train).size() == 8);
  CHECK(split.validation.size() == 10);
  CHECK(query_overlap(split) == 0);
  std::set<std::string> inter;
  const auto a = query_ids(split.train);
  const auto b = query_ids(split.validation);
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(inter, inter.end()));
  CHECK(inter.empty());
}

TEST_CASE("grouped split edge cases and determinism") {
  const auto two = grid_pairs(2, 3);
  const auto s = grouped_split(two, 0.5, 1);
  CHECK(query_ids(s.train).size() == 1);
  CHECK(query_ids(s.validation).size() == 1);

  const auto pairs = grid_pairs(13, 4);
  const auto x = grouped_split(pairs, 0.3, 99);
  const auto y = grouped_split(pairs, 0.3, 99);
  CHECK(x.train == y.train);
  CHECK(x.validation == y.validation);

  CHECK(kind_of([&] { grouped_split(grid_pairs(1, 4), 0.5, 1); }) == ErrorKind::data);
  CHECK(kind_of([&] { grouped_split(pairs, 0.0, 1); }) == ErrorKind::config);
  CHECK(kind_of([&] { grouped_split(pairs, 1.0, 1); }) == ErrorKind::config);
}

TEST_CASE("grouped split never leaks a query across sides") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto pairs = grid_pairs(3 + static_cast<int>(seed % 17), 1 + static_cast<int>(seed % 4));
    const auto s = grouped_split(pairs, 0.05 + 0.9 * static_cast<double>(seed % 10) / 10.0, seed);
    CHECK(query_overlap(s) == 0);
    CHECK(s.train.size() + s.validation.size() == pairs.size());
    CHECK(!s.train.empty());
    CHECK(!s.validation.empty());
  }
}

TEST_CASE("pair kind names round-trip") {
  for (auto k : {PairKind::positive, PairKind::hard_negative, PairKind::random_negative}) {
    CHECK(pair_kind_from_string(to_string(k)) == k);
  }
  CHECK(kind_of([] { pair_kind_from_string("other"); }) == ErrorKind::data);
}
