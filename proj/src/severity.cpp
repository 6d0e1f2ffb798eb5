#include "agentdiff/severity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "agentdiff/error.hpp"
#include "agentdiff/rng.hpp"
#include "agentdiff/text.hpp"
#include "json.hpp"

namespace agentdiff::severity {

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double edit_distance_normalized(std::string_view a, std::string_view b) {
  const auto ua = text::decode_utf8(a);
  const auto ub = text::decode_utf8(b);
  const std::size_t longest = std::max(ua.size(), ub.size());
  if (longest == 0) return 0.0;
  return static_cast<double>(levenshtein(ua, ub)) / static_cast<double>(longest);
}

double token_jaccard_distance(std::string_view a, std::string_view b) {
  const auto ta = text::tokens(a);
  const auto tb = text::tokens(b);
  const std::set<std::string> sa(ta.begin(), ta.end());
  const std::set<std::string> sb(tb.begin(), tb.end());
  if (sa.empty() && sb.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

std::optional<double> length_change_ratio(std::string_view a, std::string_view b) {
  const auto la = static_cast<double>(text::char_length(a));
  if (la == 0.0) return std::nullopt;
  const auto lb = static_cast<double>(text::char_length(b));
  return std::abs(lb - la) / la;
}

std::size_t HashEmbedder::bucket(std::string_view token) const {
  return static_cast<std::size_t>(text::fnv1a(token) % dimension_);
}

std::vector<double> HashEmbedder::embed(std::string_view text) {
  std::vector<double> v(dimension_, 0.0);
  for (const auto& tok : text::tokens(text)) v[bucket(tok)] += 1.0;
  return v;
}

CachedEmbedder::CachedEmbedder(std::shared_ptr<EmbeddingProvider> inner,
                               std::optional<std::filesystem::path> cache_file)
    : inner_(std::move(inner)), cache_file_(std::move(cache_file)) {
  if (!cache_file_ || !std::filesystem::exists(*cache_file_)) return;
  std::ifstream in(*cache_file_);
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || j.value("provider", std::string()) != inner_->id()) continue;
    auto vec = j.at("vector").get<std::vector<double>>();
    if (vec.size() != inner_->dimension()) continue;
    cache_[j.at("hash").get<std::uint64_t>()] = std::move(vec);
  }
}

std::vector<double> CachedEmbedder::embed(std::string_view text) {
  const std::uint64_t h = text::fnv1a(text);
  {
    std::lock_guard lock(mu_);
    auto it = cache_.find(h);
    if (it != cache_.end()) return it->second;
  }
  auto v = inner_->embed(text);
  std::lock_guard lock(mu_);
  cache_.emplace(h, v);
  return v;
}

void CachedEmbedder::flush() const {
  if (!cache_file_) return;
  std::lock_guard lock(mu_);
  if (cache_file_->has_parent_path()) std::filesystem::create_directories(cache_file_->parent_path());
  std::ofstream out(*cache_file_, std::ios::trunc);
  for (const auto& [h, v] : cache_) {
    out << nlohmann::json{{"provider", inner_->id()}, {"hash", h}, {"vector", v}}.dump() << '\n';
  }
}

std::size_t CachedEmbedder::size() const {
  std::lock_guard lock(mu_);
  return cache_.size();
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  const double cos = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(1.0 - cos, 0.0, 1.0);
}

std::optional<double> embed_cosine_distance(std::string_view a, std::string_view b,
                                            EmbeddingProvider& provider) {
  if (a == b) return 0.0;
  try {
    const auto ea = provider.embed(a);
    const auto eb = provider.embed(b);
    if (ea.size() != provider.dimension() || eb.size() != provider.dimension()) {
      return std::nullopt;
    }
    return cosine_distance(ea, eb);
  } catch (const AdapterError&) {
    return std::nullopt;
  }
}

std::optional<double> score(Proxy proxy, std::string_view original, std::string_view variant,
                            EmbeddingProvider* provider) {
  switch (proxy) {
    case Proxy::edit_norm:
      return edit_distance_normalized(original, variant);
    case Proxy::token_jaccard:
      return token_jaccard_distance(original, variant);
    case Proxy::embed_cosine_dist:
      if (!provider) return std::nullopt;
      return embed_cosine_distance(original, variant, *provider);
    case Proxy::length_ratio:
      return length_change_ratio(original, variant);
  }
  return std::nullopt;
}

std::set<std::string> MatchedSample::kept_ids() const {
  std::set<std::string> out;
  for (const auto& bin : kept_meaning_bearing) out.insert(bin.begin(), bin.end());
  for (const auto& bin : kept_presentation) out.insert(bin.begin(), bin.end());
  return out;
}

std::size_t MatchedSample::kept_count() const {
  std::size_t n = 0;
  for (const auto& bin : kept_meaning_bearing) n += bin.size();
  for (const auto& bin : kept_presentation) n += bin.size();
  return n;
}

std::vector<double> quantile_edges(std::vector<double> values, int n_bins) {
  if (values.empty() || n_bins < 1) return {};
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  std::vector<double> edges;
  for (int i = 0; i <= n_bins; ++i) {
    const double h = (n - 1.0) * static_cast<double>(i) / n_bins;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double e = values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
    if (edges.empty() || e > edges.back()) edges.push_back(e);
  }
  return edges;
}

std::size_t bin_of(std::span<const double> edges, double score) {
  if (edges.size() < 2) return 0;
  auto it = std::lower_bound(edges.begin() + 1, edges.end(), score);
  if (it == edges.end()) return edges.size() - 2;
  return static_cast<std::size_t>(it - (edges.begin() + 1));
}

MatchedSample severity_match_with_edges(std::span<const ScoredVariant> variants, Proxy proxy,
                                        const std::string& cell_key,
                                        std::vector<double> edges, std::uint64_t seed) {
  MatchedSample out;
  out.cell_key = cell_key;
  out.proxy = proxy;
  out.bin_edges = std::move(edges);
  const std::size_t n_bins = out.bin_edges.size() < 2 ? 1 : out.bin_edges.size() - 1;
  std::vector<std::vector<std::string>> sem(n_bins);
  std::vector<std::vector<std::string>> sur(n_bins);
  for (const auto& v : variants) {
    const std::size_t b = bin_of(out.bin_edges, v.score);
    (v.side == Side::meaning_bearing ? sem : sur)[b].push_back(v.id);
  }
  const std::uint64_t cell_seed =
      derive_seed(seed, cell_key + "|" + std::string(to_string(proxy)));
  out.kept_meaning_bearing.resize(n_bins);
  out.kept_presentation.resize(n_bins);
  bool any = false;
  for (std::size_t b = 0; b < n_bins; ++b) {
    auto& s = sem[b];
    auto& p = sur[b];
    std::sort(s.begin(), s.end());
    std::sort(p.begin(), p.end());
    const std::size_t m = std::min(s.size(), p.size());
    if (m == 0) continue;
    any = true;
    Rng rng(derive_seed(cell_seed, b));
    auto take = [&](std::vector<std::string> ids) {
      if (ids.size() > m) {
        rng.shuffle(ids);
        ids.resize(m);
        std::sort(ids.begin(), ids.end());
      }
      return ids;
    };
    out.kept_meaning_bearing[b] = take(s);
    out.kept_presentation[b] = take(p);
  }
  if (!any) {
    throw EmptyMatch("cell " + cell_key + ": no severity bin holds both sides under " +
                     std::string(to_string(proxy)));
  }
  return out;
}

MatchedSample severity_match(std::span<const ScoredVariant> variants, Proxy proxy,
                             const std::string& cell_key, int n_bins, std::uint64_t seed) {
  std::vector<double> pooled;
  pooled.reserve(variants.size());
  for (const auto& v : variants) pooled.push_back(v.score);
  return severity_match_with_edges(variants, proxy, cell_key, quantile_edges(pooled, n_bins),
                                   seed);
}

std::map<Operator, double> mean_severity_by_operator(std::span<const Variant> variants,
                                                     Proxy proxy) {
  std::map<Operator, std::pair<double, std::size_t>> acc;
  for (const auto& v : variants) {
    auto it = v.severity.find(proxy);
    if (it == v.severity.end()) continue;
    acc[v.op].first += it->second;
    acc[v.op].second += 1;
  }
  std::map<Operator, double> out;
  for (const auto& [op, sum_n] : acc) out[op] = sum_n.first / static_cast<double>(sum_n.second);
  return out;
}

}  // namespace agentdiff::severity
