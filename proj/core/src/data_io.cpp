#include "subrank/data_io.hpp"

#include <unordered_set>

#include "jsonl.hpp"

namespace subrank {

using detail::field;
using detail::Json;

namespace {

std::uint64_t count_field(const Json& obj, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end()) throw Error(ErrorKind::data, std::string("missing field '") + name + "'");
  if (!it->is_number_integer()) {
    throw Error(ErrorKind::data, std::string("field '") + name + "' must be an integer");
  }
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  const auto v = it->get<std::int64_t>();
  if (v < 0) throw Error(ErrorKind::data, std::string("field '") + name + "' is negative");
  return static_cast<std::uint64_t>(v);
}

std::string describe(const TrafficRecord& r) {
  return "(" + r.query_id + " -> " + r.candidate_id + ", impressions=" +
         std::to_string(r.impressions) + ", clicks=" + std::to_string(r.clicks) +
         ", purchases=" + std::to_string(r.purchases) + ")";
}

}  // namespace

Catalog load_catalog(const std::filesystem::path& path) {
  std::vector<ProductRecord> products;
  std::unordered_set<std::string> seen;
  detail::for_each_jsonl(path, [&](std::size_t line, const Json& obj) {
    ProductRecord p{field<std::string>(obj, "product_id"), field<std::string>(obj, "title"),
                    field<std::string>(obj, "marketplace"), field<std::string>(obj, "language")};
    if (!seen.insert(p.product_id).second) {
      throw Error(ErrorKind::data,
                  detail::where(path, line) + "duplicate product_id '" + p.product_id + "'");
    }
    if (p.product_id.empty() || p.title.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw Error(ErrorKind::data, detail::where(path, line) +
                                       (p.product_id.empty() ? "empty product_id" : "empty title"));
    }
    products.push_back(std::move(p));
  });
  return Catalog(std::move(products));
}

void validate_traffic_record(const TrafficRecord& r) {
  if (r.query_id == r.candidate_id) {
    throw Error(ErrorKind::data, "self-pair " + describe(r));
  }
  if (r.clicks > r.impressions) {
    throw Error(ErrorKind::data, "clicks exceed impressions " + describe(r));
  }
  if (r.purchases > r.clicks) {
    throw Error(ErrorKind::data, "purchases exceed clicks " + describe(r));
  }
  if (!(r.gmv >= 0.0)) {
    throw Error(ErrorKind::data, "gmv is negative or not a number " + describe(r));
  }
}

std::vector<TrafficRecord> load_traffic(const std::filesystem::path& path,
                                        const Catalog& catalog) {
  std::vector<TrafficRecord> traffic;
  std::unordered_set<std::string> seen;
  detail::for_each_jsonl(path, [&](std::size_t line, const Json& obj) {
    TrafficRecord r;
    r.query_id = field<std::string>(obj, "query_id");
    r.candidate_id = field<std::string>(obj, "candidate_id");
    r.impressions = count_field(obj, "impressions");
    r.clicks = count_field(obj, "clicks");
    r.purchases = count_field(obj, "purchases");
    r.gmv = field<double>(obj, "gmv");
    for (const auto* id : {&r.query_id, &r.candidate_id}) {
      if (catalog.find(*id) == nullptr) {
        throw Error(ErrorKind::data, detail::where(path, line) + "unknown product_id '" + *id + "'");
      }
    }
    try {
      validate_traffic_record(r);
    } catch (const Error& e) {
      throw Error(ErrorKind::data, detail::where(path, line) + e.what());
    }
    if (!seen.insert(pair_key(r.query_id, r.candidate_id)).second) {
      throw Error(ErrorKind::data, detail::where(path, line) + "duplicate mapping " + r.query_id +
                                       " -> " + r.candidate_id);
    }
    traffic.push_back(std::move(r));
  });
  return traffic;
}

std::vector<LabeledPair> load_labeled_pairs(const std::filesystem::path& path) {
  std::vector<LabeledPair> pairs;
  detail::for_each_jsonl(path, [&](std::size_t, const Json& obj) {
    LabeledPair lp;
    lp.pair.query_id = field<std::string>(obj, "query_id");
    lp.pair.candidate_id = field<std::string>(obj, "candidate_id");
    lp.pair.query_title = field<std::string>(obj, "query_title");
    lp.pair.candidate_title = field<std::string>(obj, "candidate_title");
    lp.pair.query_language = field<std::string>(obj, "query_language");
    lp.pair.candidate_language = field<std::string>(obj, "candidate_language");
    lp.pair.marketplace = field<std::string>(obj, "marketplace");
    lp.label = field<double>(obj, "label");
    lp.kind = pair_kind_from_string(field<std::string>(obj, "kind"));
    lp.counts.impressions = count_field(obj, "impressions");
    lp.counts.clicks = count_field(obj, "clicks");
    lp.counts.purchases = count_field(obj, "purchases");
    lp.counts.gmv = field<double>(obj, "gmv");
    pairs.push_back(std::move(lp));
  });
  return pairs;
}

void write_catalog(const std::filesystem::path& path, const Catalog& catalog) {
  detail::JsonlWriter out(path);
  for (const auto& p : catalog.products()) {
    Json obj;
    obj["product_id"] = p.product_id;
    obj["title"] = p.title;
    obj["marketplace"] = p.marketplace;
    obj["language"] = p.language;
    out.write(obj);
  }
}

void write_traffic(const std::filesystem::path& path, std::span<const TrafficRecord> traffic) {
  detail::JsonlWriter out(path);
  for (const auto& r : traffic) {
    Json obj;
    obj["query_id"] = r.query_id;
    obj["candidate_id"] = r.candidate_id;
    obj["impressions"] = r.impressions;
    obj["clicks"] = r.clicks;
    obj["purchases"] = r.purchases;
    obj["gmv"] = r.gmv;
    out.write(obj);
  }
}

void write_labeled_pairs(const std::filesystem::path& path, std::span<const LabeledPair> pairs) {
  detail::JsonlWriter out(path);
  for (const auto& lp : pairs) {
    Json obj;
    obj["query_id"] = lp.pair.query_id;
    obj["candidate_id"] = lp.pair.candidate_id;
    obj["query_title"] = lp.pair.query_title;
    obj["candidate_title"] = lp.pair.candidate_title;
    obj["query_language"] = lp.pair.query_language;
    obj["candidate_language"] = lp.pair.candidate_language;
    obj["marketplace"] = lp.pair.marketplace;
    obj["label"] = lp.label;
    obj["kind"] = to_string(lp.kind);
    obj["impressions"] = lp.counts.impressions;
    obj["clicks"] = lp.counts.clicks;
    obj["purchases"] = lp.counts.purchases;
    obj["gmv"] = lp.counts.gmv;
    out.write(obj);
  }
}

}  // namespace subrank
