#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "agentdiff/corpus.hpp"
#include "agentdiff/error.hpp"
#include "agentdiff/rng.hpp"

namespace agentdiff::stats {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Uniform output of every test and estimator.
struct StatResult {
  std::string method;
  double estimate = kNaN;
  double statistic = kNaN;
  std::optional<double> p_two_sided;
  std::optional<std::pair<double, double>> ci95;
  std::size_t n = 0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::optional<double> df;
  // Set whenever the closed-form statistic is undefined (zero variance,
  // empty margin, constant vector, too few observations).
  bool degenerate = false;
  // p-value from an exact distribution rather than an approximation.
  bool exact = false;
  // Bootstrap: more than 10% of replicates had to be discarded.
  bool warning = false;
  std::size_t discarded = 0;
};

double mean(std::span<const double> x);
// Sample variance (n − 1 denominator).
double variance(std::span<const double> x);
double median(std::vector<double> x);
// Type-7 (linear interpolation) quantile, q in [0, 1].
double quantile(std::vector<double> x, double q);

// Average ranks (1-based), ties get the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> x);

double student_t_two_sided_p(double t, double df);
double normal_two_sided_p(double z);

StatResult paired_t(std::span<const double> diffs);
StatResult welch_t(std::span<const double> x, std::span<const double> y);

// Zero differences are dropped. Exact null distribution (ties handled through
// midranks) when the remaining n <= 25, otherwise tie-corrected normal
// approximation. statistic = W+ (sum of positive ranks).
StatResult wilcoxon_signed_rank(std::span<const double> diffs);

// statistic = U for the first sample. Exact when n1 + n2 <= 20, otherwise
// tie-corrected normal approximation with continuity correction.
StatResult mann_whitney_u(std::span<const double> x, std::span<const double> y);

// table = {{a, b}, {c, d}}. Two-sided p sums the hypergeometric probabilities
// of all tables with the observed margins that are no more likely than the
// observed one. estimate = sample odds ratio.
StatResult fisher_exact_2x2(const std::array<std::array<long, 2>, 2>& table);

StatResult pearson(std::span<const double> x, std::span<const double> y);
StatResult spearman(std::span<const double> x, std::span<const double> y);

// κ = (p_o − p_e) / (1 − p_e) over a square contingency table (rows = rater
// 1, columns = rater 2). statistic is κ / SE under the null.
StatResult cohen_kappa(const std::vector<std::vector<double>>& table);
StatResult cohen_kappa(std::span<const int> rater1, std::span<const int> rater2);

// Step-up adjusted q-values in the input order.
std::vector<double> benjamini_hochberg(std::span<const double> p);

// --- Regression -------------------------------------------------------------

struct Design {
  std::vector<std::string> columns;
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> clusters;  // one label per row
};

struct Coefficient {
  std::string name;
  double beta = 0.0;
  double se = 0.0;
  double t = 0.0;
  bool degenerate = false;  // SE == 0
};

struct OlsFit {
  Eigen::VectorXd beta;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd covariance;  // CR1
  std::vector<Coefficient> coefficients;
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t n_clusters = 0;
};

// OLS through a column-pivoting QR decomposition with CR1 cluster-robust
// covariance: bread·meat·bread scaled by (K/(K−1))·((n−1)/(n−k)).
// Throws RankDeficient naming the first collinear column.
OlsFit ols_cluster_robust(const Design& design);

// Wild cluster restricted bootstrap for one coefficient: the null β_j = 0 is
// imposed, restricted residuals are sign-flipped per cluster with Rademacher
// weights, and p = (#{|t*| >= |t|} + 1) / (B + 1). Rows are put into a
// canonical order and weights are keyed by cluster label, so results depend
// only on the seed and the set of rows.
StatResult wild_cluster_bootstrap(const Design& design, std::size_t coefficient,
                                  std::size_t replicates, std::uint64_t seed,
                                  unsigned workers = 1);

enum class ClusterKey { model, family };
enum class DeltaSource { raw, matched };

// Cell-level regression of Δ (pp) on intercept, multi-path indicator (1 for
// GSM8K and HotpotQA, 0 for MATH), accuracy, and a ReAct dummy (included only
// when the panel has both cot and react cells). Cells without the chosen Δ
// are skipped.
Design cell_regression_design(std::span<const CellMetrics> cells, ClusterKey key,
                              DeltaSource source, Proxy proxy = Proxy::edit_norm,
                              bool include_react = true);

// --- Hierarchical bootstrap ---------------------------------------------------

template <class Obs>
struct NestedCell {
  std::string id;
  std::vector<Obs> items;
};

template <class Obs>
struct NestedModel {
  std::string id;
  std::vector<NestedCell<Obs>> cells;
};

template <class Obs>
using Nested = std::vector<NestedModel<Obs>>;

namespace detail {
template <class Obs>
Nested<Obs> canonical(Nested<Obs> data) {
  std::sort(data.begin(), data.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (auto& m : data) {
    std::sort(m.cells.begin(), m.cells.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    for (auto& c : m.cells) std::sort(c.items.begin(), c.items.end());
  }
  return data;
}
}  // namespace detail

// Resamples models, then cells within each drawn model, then items within each
// drawn cell, all with replacement. `statistic` returns nullopt when a
// replicate leaves it undefined; such replicates are discarded and counted.
// CI = 2.5/97.5 percentiles; p = 2·min(P*(≤0), P*(≥0)) clipped to [0, 1].
template <class Obs, class Statistic>
StatResult hierarchical_bootstrap(const Nested<Obs>& input, Statistic statistic,
                                  std::size_t replicates, std::uint64_t seed) {
  StatResult r;
  r.method = "hierarchical_bootstrap";
  const Nested<Obs> data = detail::canonical(input);
  r.n = data.size();
  const std::optional<double> observed = statistic(data);
  if (!observed || data.size() < 2) {
    r.degenerate = true;
    return r;
  }
  r.estimate = *observed;
  std::vector<double> draws;
  draws.reserve(replicates);
  Nested<Obs> sample;
  for (std::size_t b = 0; b < replicates; ++b) {
    Rng rng(derive_seed(seed, b));
    sample.clear();
    sample.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& model = data[rng.index(data.size())];
      NestedModel<Obs> m;
      m.id = model.id;
      m.cells.reserve(model.cells.size());
      for (std::size_t c = 0; c < model.cells.size(); ++c) {
        const auto& cell = model.cells[rng.index(model.cells.size())];
        NestedCell<Obs> nc;
        nc.id = cell.id;
        nc.items.reserve(cell.items.size());
        for (std::size_t q = 0; q < cell.items.size(); ++q) {
          nc.items.push_back(cell.items[rng.index(cell.items.size())]);
        }
        m.cells.push_back(std::move(nc));
      }
      sample.push_back(std::move(m));
    }
    const auto v = statistic(sample);
    if (!v || !std::isfinite(*v)) {
      ++r.discarded;
      continue;
    }
    draws.push_back(*v);
  }
  r.warning = replicates > 0 && static_cast<double>(r.discarded) > 0.1 * replicates;
  if (draws.empty()) {
    r.degenerate = true;
    return r;
  }
  r.ci95 = std::make_pair(quantile(draws, 0.025), quantile(draws, 0.975));
  std::size_t le = 0;
  std::size_t ge = 0;
  for (double d : draws) {
    le += d <= 0.0;
    ge += d >= 0.0;
  }
  const double nd = static_cast<double>(draws.size());
  r.p_two_sided = std::clamp(2.0 * std::min(le / nd, ge / nd), 0.0, 1.0);
  r.statistic = r.estimate;
  return r;
}

}  // namespace agentdiff::stats
