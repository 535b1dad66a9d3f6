#include "subrank/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "jsonl.hpp"
#include "subrank/data_io.hpp"
#include "subrank/error.hpp"
#include "subrank/rng.hpp"
#include "subrank/text.hpp"

namespace subrank {

using detail::Json;

namespace {

// Filler words inserted into titles; all are on the shipped stopword lists.
const std::map<std::string, std::vector<std::string>, std::less<>> kFillers{
    {"en", {"with", "for", "new", "pack"}}, {"de", {"mit", "für", "neu", "set"}},
    {"fr", {"avec", "pour", "nouveau", "lot"}}, {"es", {"con", "para", "nuevo", "juego"}},
    {"it", {"con", "per", "nuovo", "set"}}, {"ja", {"の", "と"}},
};

struct Syllables {
  std::vector<std::string> onsets;
  std::vector<std::string> vowels;
};

Syllables syllables_for(std::string_view language) {
  if (language == "de") return {{"b", "d", "f", "g", "k", "l", "m", "n", "r", "s", "t", "w", "sch", "st", "z"},
                                {"a", "e", "i", "o", "u", "ä", "ö", "ü", "ei", "au"}};
  if (language == "fr") return {{"b", "d", "f", "g", "j", "l", "m", "n", "p", "r", "s", "t", "v", "ch"},
                                {"a", "e", "i", "o", "u", "é", "è", "ou", "ai"}};
  if (language == "es") return {{"b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "ll", "ñ"},
                                {"a", "e", "i", "o", "u", "á", "ó"}};
  if (language == "it") return {{"b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "z", "gl"},
                                {"a", "e", "i", "o", "u", "ia", "io"}};
  return {{"b", "c", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "th", "br"},
          {"a", "e", "i", "o", "u", "y", "ea", "oo"}};
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool is_cjk_language(std::string_view language) { return language == "ja" || language == "zh"; }

/// Draws unique pseudo-words for one language. Latin words have at least
/// five bytes so they never collide with a stopword; CJK words are single
/// ideographs so the tokenizer keeps them whole.
class WordFactory {
 public:
  WordFactory(std::string language, Rng& rng, std::unordered_set<std::string>& used)
      : language_(std::move(language)), syllables_(syllables_for(language_)), rng_(rng), used_(used) {}

  std::string next() {
    for (int attempt = 0; attempt < 10000; ++attempt) {
      std::string w = is_cjk_language(language_) ? ideograph() : latin();
      if (used_.insert(w).second) return w;
    }
    throw Error(ErrorKind::config, "title vocabulary exhausted for language '" + language_ + "'");
  }

  std::vector<std::string> take(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(next());
    return out;
  }

 private:
  std::string latin() {
    std::uniform_int_distribution<int> n_syll(2, 3);
    std::string w;
    const int n = n_syll(rng_);
    for (int i = 0; i < n; ++i) {
      w += pick(syllables_.onsets);
      w += pick(syllables_.vowels);
    }
    if (w.size() < 5) w += pick(syllables_.onsets);
    return w;
  }

  std::string ideograph() {
    std::uniform_int_distribution<std::uint32_t> cp(0x4E00, 0x9FA5);
    std::string w;
    append_utf8(w, static_cast<char32_t>(cp(rng_)));
    return w;
  }

  const std::string& pick(const std::vector<std::string>& v) {
    std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
    return v[d(rng_)];
  }

  std::string language_;
  Syllables syllables_;
  Rng& rng_;
  std::unordered_set<std::string>& used_;
};

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

/// k distinct elements of `pool` (all of them when k >= size), in draw order.
std::vector<std::size_t> sample_distinct(const std::vector<std::size_t>& pool, std::size_t k, Rng& rng) {
  std::vector<std::size_t> v = pool;
  k = std::min(k, v.size());
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> d(i, v.size() - 1);
    std::swap(v[i], v[d(rng)]);
  }
  v.resize(k);
  return v;
}

std::string capitalize_ascii(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

std::string make_title(const LanguageLexicon& lex, const std::string& language, int category, Rng& rng) {
  std::vector<std::string> words;
  words.push_back(pick(lex.brands, rng));
  words.push_back(lex.signature[static_cast<std::size_t>(category)][0]);
  const auto& sig = lex.signature[static_cast<std::size_t>(category)];
  std::bernoulli_distribution coin(0.5);
  if (sig.size() > 1 && coin(rng)) {
    std::uniform_int_distribution<std::size_t> d(1, sig.size() - 1);
    words.push_back(sig[d(rng)]);
  }
  const auto filler = kFillers.find(language);
  if (filler != kFillers.end() && coin(rng)) words.push_back(pick(filler->second, rng));
  words.push_back(pick(lex.descriptors, rng));
  if (coin(rng)) words.push_back(pick(lex.descriptors, rng));

  std::string title;
  const bool cjk = is_cjk_language(language);
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!cjk && i > 0) title += ' ';
    title += cjk ? words[i] : capitalize_ascii(words[i]);
  }
  return title;
}

double price_factor(const WorldConfig& config, PriceTier tier) {
  switch (tier) {
    case PriceTier::low: return config.low_price_cvr_factor;
    case PriceTier::mid: return config.mid_price_cvr_factor;
    case PriceTier::high: return 1.0;
  }
  return 1.0;
}

}  // namespace

const char* to_string(PriceTier tier) noexcept {
  switch (tier) {
    case PriceTier::low: return "low";
    case PriceTier::mid: return "mid";
    case PriceTier::high: return "high";
  }
  return "?";
}

void WorldConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw Error(ErrorKind::config, "world: " + msg); };
  if (n_categories < 2) fail("n_categories must be >= 2");
  if (products_per_category < 1) fail("products_per_category must be >= 1");
  if (marketplaces.empty()) fail("at least one marketplace is required");
  std::set<std::string> codes;
  for (const auto& m : marketplaces) {
    if (m.code.empty() || m.language.empty()) fail("marketplace code and language must be non-empty");
    if (!codes.insert(m.code).second) fail("duplicate marketplace '" + m.code + "'");
  }
  if (signature_tokens < 1 || brand_tokens < 1 || descriptor_tokens < 1) fail("token pool sizes must be >= 1");
  if (!(related_fraction >= 0.0 && related_fraction <= 1.0)) fail("related_fraction must be in [0,1]");
  if (embedding_dim < 1) fail("embedding_dim must be >= 1");
  if (!(embedding_noise >= 0.0)) fail("embedding_noise must be >= 0");
  if (same_exposures < 0 || related_exposures < 0 || random_exposures < 0) fail("exposure counts must be >= 0");
  if (same_exposures + related_exposures + random_exposures < 1) fail("at least one exposure per query");
  if (!(impressions_log_sd >= 0.0) || !std::isfinite(impressions_log_mean)) fail("bad impression distribution");
  for (double r : {base_ctr, base_cvr, related_cvr, random_cvr}) {
    if (!(r >= 0.0 && r <= 1.0)) fail("base rates must be in [0,1]");
  }
  for (double f : {related_ctr_factor, random_ctr_factor, low_price_cvr_factor, mid_price_cvr_factor}) {
    if (!(f >= 0.0) || !std::isfinite(f)) fail("rate factors must be finite and >= 0");
  }
  if (!(cvr_noise_sd >= 0.0)) fail("cvr_noise_sd must be >= 0");
}

int partner_category(int category, int n_categories) {
  const int p = category ^ 1;
  return p < n_categories ? p : 0;
}

const SyntheticProduct& World::product(std::string_view product_id) const {
  const auto it = index_.find(std::string(product_id));
  if (it == index_.end()) throw Error(ErrorKind::data, "unknown product '" + std::string(product_id) + "'");
  return products[it->second];
}

bool World::substitutable(std::string_view query_id, std::string_view candidate_id) const {
  if (query_id == candidate_id) return false;
  return product(query_id).category == product(candidate_id).category;
}

std::unordered_map<std::string, int> World::category_of() const {
  std::unordered_map<std::string, int> out;
  for (const auto& p : products) out.emplace(p.record.product_id, p.category);
  return out;
}

World generate_world(const WorldConfig& config) {
  config.validate();
  World world;
  world.config = config;
  Rng rng(derive_seed(config.seed, "world"));

  // Disjoint token pools per language.
  std::unordered_set<std::string> used;
  for (const auto& [language, fillers] : kFillers) used.insert(fillers.begin(), fillers.end());
  for (const auto& m : config.marketplaces) {
    if (world.lexicon.count(m.language)) continue;
    WordFactory words(m.language, rng, used);
    LanguageLexicon lex;
    for (int c = 0; c < config.n_categories; ++c) lex.signature.push_back(words.take(config.signature_tokens));
    lex.brands = words.take(config.brand_tokens);
    lex.descriptors = words.take(config.descriptor_tokens);
    world.lexicon.emplace(m.language, std::move(lex));
  }

  const std::size_t n_total =
      static_cast<std::size_t>(config.n_categories) * static_cast<std::size_t>(config.products_per_category);
  std::vector<std::size_t> id_order(n_total);
  std::iota(id_order.begin(), id_order.end(), std::size_t{0});
  std::shuffle(id_order.begin(), id_order.end(), rng);
  const int width = static_cast<int>(std::to_string(n_total).size());

  std::uniform_real_distribution<double> attraction(0.05, 1.0);
  std::uniform_int_distribution<int> tier(0, 2);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::bernoulli_distribution related(config.related_fraction);
  std::vector<ProductRecord> records;
  records.reserve(n_total);
  for (int c = 0; c < config.n_categories; ++c) {
    for (int k = 0; k < config.products_per_category; ++k) {
      const std::size_t idx = static_cast<std::size_t>(c) * static_cast<std::size_t>(config.products_per_category) +
                              static_cast<std::size_t>(k);
      const auto& market = config.marketplaces[static_cast<std::size_t>(k) % config.marketplaces.size()];
      SyntheticProduct p;
      std::string id = std::to_string(id_order[idx]);
      p.record.product_id = "P" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;
      p.record.marketplace = market.code;
      p.record.language = market.language;
      p.record.title = make_title(world.lexicon.at(market.language), market.language, c, rng);
      p.category = c;
      if (related(rng)) p.related_category = partner_category(c, config.n_categories);
      p.attraction = attraction(rng);
      p.price_tier = static_cast<PriceTier>(tier(rng));
      const double u = unit(rng);
      switch (p.price_tier) {
        case PriceTier::low: p.price = 5.0 + 15.0 * u; break;
        case PriceTier::mid: p.price = 20.0 + 40.0 * u; break;
        case PriceTier::high: p.price = 60.0 + 140.0 * u; break;
      }
      p.price = std::round(p.price * 100.0) / 100.0;
      records.push_back(p.record);
      world.index_.emplace(p.record.product_id, world.products.size());
      world.products.push_back(std::move(p));
    }
  }
  world.catalog = Catalog(std::move(records));
  return world;
}

PairRates expected_rates(const World& world, std::string_view query_id, std::string_view candidate_id) {
  const auto& cfg = world.config;
  const auto& q = world.product(query_id);
  const auto& c = world.product(candidate_id);
  PairRates r;
  if (q.category == c.category) {
    r.kind = ExposureKind::same_category;
  } else if (c.category == partner_category(q.category, cfg.n_categories)) {
    r.kind = ExposureKind::related_category;
  }
  const double pf = price_factor(cfg, c.price_tier);
  double ctr = cfg.base_ctr * 2.0 * c.attraction;
  switch (r.kind) {
    case ExposureKind::same_category: r.cvr = cfg.base_cvr * pf; break;
    case ExposureKind::related_category:
      ctr *= cfg.related_ctr_factor;
      r.cvr = cfg.related_cvr * pf;
      break;
    case ExposureKind::random:
      ctr *= cfg.random_ctr_factor;
      r.cvr = cfg.random_cvr;
      break;
  }
  r.ctr = std::clamp(ctr, 0.0, 1.0);
  r.cvr = std::clamp(r.cvr, 0.0, 1.0);
  return r;
}

std::vector<TrafficRecord> simulate_traffic(const World& world) {
  const auto& cfg = world.config;
  Rng rng(derive_seed(cfg.seed, "traffic"));

  // Products per (marketplace, category).
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> cell;
  for (std::size_t i = 0; i < world.products.size(); ++i) {
    cell[{world.products[i].record.marketplace, world.products[i].category}].push_back(i);
  }
  std::map<std::string, std::vector<std::size_t>> by_market;
  for (std::size_t i = 0; i < world.products.size(); ++i) {
    by_market[world.products[i].record.marketplace].push_back(i);
  }

  std::lognormal_distribution<double> impressions(cfg.impressions_log_mean, cfg.impressions_log_sd);
  std::lognormal_distribution<double> cvr_noise(0.0, cfg.cvr_noise_sd);
  std::vector<TrafficRecord> out;

  for (std::size_t qi = 0; qi < world.products.size(); ++qi) {
    const auto& q = world.products[qi];
    const auto& market = q.record.marketplace;
    std::vector<std::size_t> chosen;

    std::vector<std::size_t> same = cell[{market, q.category}];
    std::erase(same, qi);
    for (auto i : sample_distinct(same, static_cast<std::size_t>(cfg.same_exposures), rng)) chosen.push_back(i);
    if (q.related_category) {
      const auto& rel = cell[{market, *q.related_category}];
      for (auto i : sample_distinct(rel, static_cast<std::size_t>(cfg.related_exposures), rng)) chosen.push_back(i);
    }
    const int partner = partner_category(q.category, cfg.n_categories);
    std::vector<std::size_t> others;
    for (auto i : by_market[market]) {
      const int c = world.products[i].category;
      if (c != q.category && c != partner) others.push_back(i);
    }
    for (auto i : sample_distinct(others, static_cast<std::size_t>(cfg.random_exposures), rng)) chosen.push_back(i);

    for (auto ci : chosen) {
      const auto& c = world.products[ci];
      const PairRates rates = expected_rates(world, q.record.product_id, c.record.product_id);
      TrafficRecord r;
      r.query_id = q.record.product_id;
      r.candidate_id = c.record.product_id;
      r.impressions = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(impressions(rng))));
      const double cvr = std::clamp(rates.cvr * cvr_noise(rng), 0.0, 1.0);
      r.clicks = rates.ctr > 0.0 ? std::binomial_distribution<std::uint64_t>(r.impressions, rates.ctr)(rng) : 0;
      r.purchases = (r.clicks > 0 && cvr > 0.0) ? std::binomial_distribution<std::uint64_t>(r.clicks, cvr)(rng) : 0;
      r.gmv = std::round(static_cast<double>(r.purchases) * c.price * 100.0) / 100.0;
      validate_traffic_record(r);
      out.push_back(std::move(r));
    }
  }
  return out;
}

EmbeddingTable generate_embeddings(const World& world) {
  const auto& cfg = world.config;
  const auto dim = static_cast<std::size_t>(cfg.embedding_dim);
  Rng rng(derive_seed(cfg.seed, "embeddings"));
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<std::vector<double>> centroid(static_cast<std::size_t>(cfg.n_categories), std::vector<double>(dim));
  for (auto& c : centroid) {
    for (auto& x : c) x = normal(rng);
  }
  EmbeddingTable table(dim);
  std::vector<double> v(dim);
  const auto noise_vector = [&](double scale) {
    for (auto& x : v) x = scale * normal(rng);
  };
  for (const auto& [language, lex] : world.lexicon) {
    for (std::size_t c = 0; c < lex.signature.size(); ++c) {
      for (const auto& w : lex.signature[c]) {
        for (std::size_t d = 0; d < dim; ++d) v[d] = centroid[c][d] + cfg.embedding_noise * normal(rng);
        table.add(w, v);
      }
    }
    for (const auto& w : lex.brands) {
      noise_vector(0.5);
      table.add(w, v);
    }
    for (const auto& w : lex.descriptors) {
      noise_vector(0.5);
      table.add(w, v);
    }
    const auto filler = kFillers.find(language);
    if (filler == kFillers.end()) continue;
    for (const auto& w : filler->second) {
      if (!table.lookup(w).empty()) continue;
      noise_vector(1.0);
      table.add(w, v);
    }
  }
  return table;
}

FunctionalityEvalSet build_functionality_evalset(const World& world, const FunctionalityOptions& options,
                                                 const std::unordered_set<std::string>& exclude) {
  if (!(options.ratio_pos > 0.0 && options.ratio_pos < 1.0)) {
    throw Error(ErrorKind::config, "functionality ratio_pos must be in (0,1)");
  }
  if (!(options.related_share >= 0.0 && options.related_share <= 1.0)) {
    throw Error(ErrorKind::config, "functionality related_share must be in [0,1]");
  }
  const auto& cfg = world.config;
  const std::size_t n_pos = static_cast<std::size_t>(std::llround(options.ratio_pos * static_cast<double>(options.n)));
  const std::size_t n_neg = options.n - n_pos;
  const std::size_t n_related =
      static_cast<std::size_t>(std::ceil(options.related_share * static_cast<double>(n_neg) - 1e-9));
  const std::size_t n_random = n_neg - n_related;

  std::map<std::pair<std::string, int>, std::vector<std::size_t>> cell;
  std::map<std::string, std::vector<std::size_t>> by_market;
  for (std::size_t i = 0; i < world.products.size(); ++i) {
    cell[{world.products[i].record.marketplace, world.products[i].category}].push_back(i);
    by_market[world.products[i].record.marketplace].push_back(i);
  }
  std::vector<std::size_t> related_queries;
  for (std::size_t i = 0; i < world.products.size(); ++i) {
    if (world.products[i].related_category) related_queries.push_back(i);
  }

  Rng rng(options.seed);
  std::unordered_set<std::string> taken;
  FunctionalityEvalSet set;
  set.ratio_pos = options.ratio_pos;

  const auto fill = [&](std::size_t count, FunctionalityKind kind, const std::vector<std::size_t>& queries) {
    const std::size_t max_draws = 100 * count + 1000;
    std::size_t got = 0;
    for (std::size_t draw = 0; got < count; ++draw) {
      if (draw >= max_draws || queries.empty()) {
        throw Error(ErrorKind::data, std::string("functionality set: not enough ") + to_string(kind) +
                                         " pairs in the world (" + std::to_string(got) + " of " +
                                         std::to_string(count) + ")");
      }
      const auto& q = world.products[pick(queries, rng)];
      const auto& market = q.record.marketplace;
      const std::vector<std::size_t>* pool = nullptr;
      std::vector<std::size_t> others;
      const int partner = partner_category(q.category, cfg.n_categories);
      switch (kind) {
        case FunctionalityKind::positive: pool = &cell[{market, q.category}]; break;
        case FunctionalityKind::related_negative: pool = &cell[{market, partner}]; break;
        case FunctionalityKind::random_negative:
          for (auto i : by_market[market]) {
            const int c = world.products[i].category;
            if (c != q.category && c != partner) others.push_back(i);
          }
          pool = &others;
          break;
      }
      if (pool->empty()) continue;
      const auto& c = world.products[pick(*pool, rng)];
      if (c.record.product_id == q.record.product_id) continue;
      const auto key = pair_key(q.record.product_id, c.record.product_id);
      if (exclude.count(key) || !taken.insert(key).second) continue;
      set.pairs.push_back(FunctionalityPair{make_pair(q.record, c.record),
                                            kind == FunctionalityKind::positive ? 1 : 0, kind});
      ++got;
    }
  };
  std::vector<std::size_t> all(world.products.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  fill(n_pos, FunctionalityKind::positive, all);
  fill(n_related, FunctionalityKind::related_negative, related_queries);
  fill(n_random, FunctionalityKind::random_negative, all);
  std::shuffle(set.pairs.begin(), set.pairs.end(), rng);
  set.validate();
  return set;
}

RankingEvalSet build_ranking_evalset(std::span<const TrafficRecord> traffic, const Catalog& catalog,
                                     std::uint64_t min_impressions, const std::set<std::string>* queries) {
  std::map<std::string, std::vector<const TrafficRecord*>> grouped;
  for (const auto& r : traffic) {
    if (queries != nullptr && !queries->count(r.query_id)) continue;
    grouped[r.query_id].push_back(&r);
  }
  RankingEvalSet set;
  set.min_impressions = min_impressions;
  for (auto& [query, records] : grouped) {
    std::sort(records.begin(), records.end(),
              [](const TrafficRecord* a, const TrafficRecord* b) { return a->candidate_id < b->candidate_id; });
    RankingGroup g;
    g.query_id = query;
    const auto& q = catalog.at(query);
    g.marketplace = q.marketplace;
    for (const auto* r : records) {
      if (r->impressions <= min_impressions) continue;
      g.candidates.push_back(RankingCandidate{make_pair(q, catalog.at(r->candidate_id)), counts_of(*r)});
    }
    if (g.candidates.size() < 2) {
      ++set.dropped_groups;
      continue;
    }
    set.groups.push_back(std::move(g));
  }
  if (set.groups.empty()) {
    throw Error(ErrorKind::data, "ranking set is empty: no query keeps 2 candidates above " +
                                     std::to_string(min_impressions) + " impressions; generate a larger world");
  }
  return set;
}

void write_ground_truth(const std::filesystem::path& path, const World& world) {
  detail::JsonlWriter out(path);
  for (const auto& p : world.products) {
    Json j;
    j["product_id"] = p.record.product_id;
    j["category"] = p.category;
    j["related_category"] = p.related_category ? Json(*p.related_category) : Json(nullptr);
    out.write(j);
  }
}

std::unordered_map<std::string, int> load_ground_truth(const std::filesystem::path& path) {
  std::unordered_map<std::string, int> out;
  detail::for_each_jsonl(path, [&](std::size_t line, const Json& j) {
    auto id = detail::field<std::string>(j, "product_id");
    if (!out.emplace(id, detail::field<int>(j, "category")).second) {
      throw Error(ErrorKind::data, detail::where(path, line) + "duplicate product '" + id + "'");
    }
  });
  return out;
}

void write_hidden_params(const std::filesystem::path& path, const World& world) {
  const auto& c = world.config;
  Json cfg;
  cfg["seed"] = c.seed;
  cfg["n_categories"] = c.n_categories;
  cfg["products_per_category"] = c.products_per_category;
  Json markets = Json::array();
  for (const auto& m : c.marketplaces) markets.push_back(Json{{"code", m.code}, {"language", m.language}});
  cfg["marketplaces"] = markets;
  cfg["related_fraction"] = c.related_fraction;
  cfg["embedding_dim"] = c.embedding_dim;
  cfg["embedding_noise"] = c.embedding_noise;
  cfg["same_exposures"] = c.same_exposures;
  cfg["related_exposures"] = c.related_exposures;
  cfg["random_exposures"] = c.random_exposures;
  cfg["impressions_log_mean"] = c.impressions_log_mean;
  cfg["impressions_log_sd"] = c.impressions_log_sd;
  cfg["base_ctr"] = c.base_ctr;
  cfg["related_ctr_factor"] = c.related_ctr_factor;
  cfg["random_ctr_factor"] = c.random_ctr_factor;
  cfg["base_cvr"] = c.base_cvr;
  cfg["related_cvr"] = c.related_cvr;
  cfg["random_cvr"] = c.random_cvr;
  cfg["low_price_cvr_factor"] = c.low_price_cvr_factor;
  cfg["mid_price_cvr_factor"] = c.mid_price_cvr_factor;
  cfg["cvr_noise_sd"] = c.cvr_noise_sd;

  Json products = Json::array();
  for (const auto& p : world.products) {
    products.push_back(Json{{"product_id", p.record.product_id},
                            {"category", p.category},
                            {"related_category", p.related_category ? Json(*p.related_category) : Json(nullptr)},
                            {"attraction", p.attraction},
                            {"price_tier", to_string(p.price_tier)},
                            {"price", p.price}});
  }
  Json out;
  out["config"] = std::move(cfg);
  out["products"] = std::move(products);
  detail::write_text_file(path, out.dump(1) + "\n");
}

}  // namespace subrank
