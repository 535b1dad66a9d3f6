#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "subrank/embeddings.hpp"
#include "subrank/evaluation.hpp"
#include "subrank/types.hpp"

namespace subrank {

struct MarketplaceSpec {
  std::string code;
  std::string language;
  friend bool operator==(const MarketplaceSpec&, const MarketplaceSpec&) = default;
};

enum class PriceTier { low, mid, high };

const char* to_string(PriceTier tier) noexcept;

/// Generator knobs. Defaults are calibrated so that about 60% of thresholded
/// pairs carry no purchase and CTR is nearly uncorrelated with CVR.
struct WorldConfig {
  int n_categories = 20;
  int products_per_category = 100;
  std::vector<MarketplaceSpec> marketplaces{{"US", "en"}, {"DE", "de"}, {"JP", "ja"}};

  // Title vocabulary, per language.
  int signature_tokens = 3;  // per category; the first appears in every title
  int brand_tokens = 40;
  int descriptor_tokens = 60;

  double related_fraction = 0.6;  // products exposed to their partner category
  int embedding_dim = 16;
  double embedding_noise = 0.35;

  // Exposure per query product.
  int same_exposures = 7;
  int related_exposures = 4;
  int random_exposures = 1;
  double impressions_log_mean = 7.0;
  double impressions_log_sd = 1.0;

  // Click and purchase propensities.
  double base_ctr = 0.03;
  double related_ctr_factor = 1.5;
  double random_ctr_factor = 0.3;
  double base_cvr = 0.01;
  double related_cvr = 0.002;
  double random_cvr = 0.001;
  double low_price_cvr_factor = 3.0;  // versus high tier
  double mid_price_cvr_factor = 1.7;
  double cvr_noise_sd = 0.5;  // log-normal pair-level spread

  std::uint64_t seed = 1;

  /// Throws Error(config).
  void validate() const;
};

struct SyntheticProduct {
  ProductRecord record;
  int category = 0;
  std::optional<int> related_category;
  double attraction = 0.5;  // in (0,1)
  PriceTier price_tier = PriceTier::mid;
  double price = 0.0;
};

/// Token pools of one language. signature[c] belongs to category c.
struct LanguageLexicon {
  std::vector<std::vector<std::string>> signature;
  std::vector<std::string> brands;
  std::vector<std::string> descriptors;
};

struct World {
  WorldConfig config;
  std::vector<SyntheticProduct> products;
  Catalog catalog;
  std::map<std::string, LanguageLexicon> lexicon;  // by language code

  const SyntheticProduct& product(std::string_view product_id) const;
  /// Ground truth: same category. Self-pairs are never substitutable.
  bool substitutable(std::string_view query_id, std::string_view candidate_id) const;
  std::unordered_map<std::string, int> category_of() const;

 private:
  friend World generate_world(const WorldConfig& config);
  std::unordered_map<std::string, std::size_t> index_;
};

/// Co-view partner of a category (pairs 0-1, 2-3, ...; a trailing odd
/// category partners with 0).
int partner_category(int category, int n_categories);

World generate_world(const WorldConfig& config);

enum class ExposureKind { same_category, related_category, random };

struct PairRates {
  double ctr = 0.0;
  double cvr = 0.0;
  ExposureKind kind = ExposureKind::random;
};

/// Noise-free click and conversion propensities of a pair.
PairRates expected_rates(const World& world, std::string_view query_id, std::string_view candidate_id);

std::vector<TrafficRecord> simulate_traffic(const World& world);

/// Signature tokens sit near a per-category centroid shared by all
/// languages; everything else is unrelated noise.
EmbeddingTable generate_embeddings(const World& world);

struct FunctionalityOptions {
  double ratio_pos = 0.6;
  std::size_t n = 2000;
  double related_share = 0.5;  // of negatives
  std::uint64_t seed = 0;
};

/// Pairs within one marketplace. `exclude` holds pair_key()s not to draw.
/// Throws Error(data) when a class cannot be filled.
FunctionalityEvalSet build_functionality_evalset(const World& world, const FunctionalityOptions& options,
                                                 const std::unordered_set<std::string>& exclude = {});

/// Groups by query (sorted), keeps candidates with impressions strictly above
/// `min_impressions`, drops groups left with fewer than 2. When `queries` is
/// given only those query ids are used. Throws Error(data) when empty.
RankingEvalSet build_ranking_evalset(std::span<const TrafficRecord> traffic, const Catalog& catalog,
                                     std::uint64_t min_impressions = 500,
                                     const std::set<std::string>* queries = nullptr);

/// One line per product: product_id, category, related_category (or null).
void write_ground_truth(const std::filesystem::path& path, const World& world);
std::unordered_map<std::string, int> load_ground_truth(const std::filesystem::path& path);

/// Debug dump of the generator's latent parameters. Nothing reads it back.
void write_hidden_params(const std::filesystem::path& path, const World& world);

}  // namespace subrank
