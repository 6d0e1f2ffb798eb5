#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "agentdiff/corpus.hpp"
#include "agentdiff/error.hpp"

namespace agentdiff::severity {

// Levenshtein distance over Unicode scalar values.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);

// Levenshtein / max(|a|, |b|); 0 when both strings are empty.
double edit_distance_normalized(std::string_view a, std::string_view b);

// 1 - |A ∩ B| / |A ∪ B| over case-folded alphanumeric token sets.
double token_jaccard_distance(std::string_view a, std::string_view b);

// | |b| - |a| | / |a| in characters; nullopt when `a` is empty.
std::optional<double> length_change_ratio(std::string_view a, std::string_view b);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dimension() const = 0;
  // Throws AdapterError on provider failure.
  virtual std::vector<double> embed(std::string_view text) = 0;
};

// Feature-hashed token counts: each case-folded token adds 1 to bucket
// fnv1a(token) mod dimension.
class HashEmbedder : public EmbeddingProvider {
 public:
  explicit HashEmbedder(std::size_t dimension = 256) : dimension_(dimension) {}
  std::string id() const override { return "hash"; }
  std::size_t dimension() const override { return dimension_; }
  std::vector<double> embed(std::string_view text) override;
  std::size_t bucket(std::string_view token) const;

 private:
  std::size_t dimension_;
};

// Memoizes another provider by content hash. Safe for concurrent use. With a
// cache file, entries are loaded on construction and written by flush().
class CachedEmbedder : public EmbeddingProvider {
 public:
  CachedEmbedder(std::shared_ptr<EmbeddingProvider> inner,
                 std::optional<std::filesystem::path> cache_file = std::nullopt);
  std::string id() const override { return inner_->id(); }
  std::size_t dimension() const override { return inner_->dimension(); }
  std::vector<double> embed(std::string_view text) override;
  void flush() const;
  std::size_t size() const;

 private:
  std::shared_ptr<EmbeddingProvider> inner_;
  std::optional<std::filesystem::path> cache_file_;
  mutable std::mutex mu_;
  std::map<std::uint64_t, std::vector<double>> cache_;
};

// 1 - cos, clamped to [0, 1]. A zero vector has distance 1 to anything but
// itself-by-content (identical inputs always give 0).
double cosine_distance(std::span<const double> a, std::span<const double> b);

// nullopt when the provider fails or returns the wrong dimension.
std::optional<double> embed_cosine_distance(std::string_view a, std::string_view b,
                                            EmbeddingProvider& provider);

// Proxy value for one (original, variant) pair; nullopt when unavailable.
std::optional<double> score(Proxy proxy, std::string_view original, std::string_view variant,
                            EmbeddingProvider* provider);

struct ScoredVariant {
  std::string id;
  Side side = Side::meaning_bearing;
  double score = 0.0;
};

struct MatchedSample {
  std::string cell_key;
  Proxy proxy = Proxy::edit_norm;
  // Deduplicated quantile edges, first = min, last = max of pooled scores.
  std::vector<double> bin_edges;
  std::vector<std::vector<std::string>> kept_meaning_bearing;  // per bin
  std::vector<std::vector<std::string>> kept_presentation;     // per bin
  std::optional<double> shrinkage_pp;                          // Δ_raw − Δ_matched

  std::set<std::string> kept_ids() const;
  std::size_t kept_count() const;
};

// Type-7 (linear interpolation) empirical quantile edges at i/n_bins for
// i = 0..n_bins; repeated edges are collapsed.
std::vector<double> quantile_edges(std::vector<double> values, int n_bins);

// Bin index for a score: intervals are (e[i], e[i+1]], the first bin also
// holds e[0]. Scores outside [e.front(), e.back()] clamp to the end bins.
std::size_t bin_of(std::span<const double> edges, double score);

// Within-cell quantile-bin matching: in each bin keep min(#sem, #sur)
// variants per side, subsampling the larger side uniformly without
// replacement with a seed derived from (seed, cell_key, proxy, bin).
// Throws EmptyMatch when no bin holds both sides.
MatchedSample severity_match(std::span<const ScoredVariant> variants, Proxy proxy,
                             const std::string& cell_key, int n_bins, std::uint64_t seed);

// Same, with caller-supplied edges.
MatchedSample severity_match_with_edges(std::span<const ScoredVariant> variants, Proxy proxy,
                                        const std::string& cell_key,
                                        std::vector<double> edges, std::uint64_t seed);

// Mean proxy value per operator over variants that carry the proxy.
std::map<Operator, double> mean_severity_by_operator(std::span<const Variant> variants,
                                                     Proxy proxy);

}  // namespace agentdiff::severity
