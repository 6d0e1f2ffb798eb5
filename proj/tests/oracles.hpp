#pragma once

// Brute-force reference implementations used by unit and acceptance tests.
// They follow the textbook definitions directly and share no code with the
// library.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace oracle {

// Plain recursive Levenshtein without memoization.
inline int edit_distance(const std::string& a, const std::string& b) {
  if (a.empty()) return static_cast<int>(b.size());
  if (b.empty()) return static_cast<int>(a.size());
  const std::string ta = a.substr(1);
  const std::string tb = b.substr(1);
  const int sub = edit_distance(ta, tb) + (a[0] == b[0] ? 0 : 1);
  const int del = edit_distance(ta, b) + 1;
  const int ins = edit_distance(a, tb) + 1;
  return std::min({sub, del, ins});
}

// All strings over `alphabet` with length 0..max_len.
inline std::vector<std::string> all_strings(const std::string& alphabet, int max_len) {
  std::vector<std::string> out{""};
  std::vector<std::string> frontier{""};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<std::string> next;
    for (const auto& s : frontier) {
      for (char c : alphabet) next.push_back(s + c);
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

// Divergence step over symbolic step sequences with an arbitrary equality.
using StepEq = std::function<bool(std::size_t var_idx, std::size_t orig_idx)>;

inline std::optional<int> divergence_step(std::size_t n_orig, std::size_t n_var, const StepEq& eq) {
  std::vector<int> mismatches;
  for (std::size_t k = 0; k < std::min(n_orig, n_var); ++k) {
    if (!eq(k, k)) mismatches.push_back(static_cast<int>(k) + 1);
  }
  if (!mismatches.empty()) return *std::min_element(mismatches.begin(), mismatches.end());
  if (n_orig == n_var) return std::nullopt;
  return static_cast<int>(std::min(n_orig, n_var)) + 1;
}

// Marks every variant step at or after the divergence point as matched or
// not against the whole original tail, then takes the leading run of
// unmatched steps.
inline int cascade_depth(std::size_t n_orig, std::size_t n_var, const StepEq& eq) {
  const auto d = divergence_step(n_orig, n_var, eq);
  if (!d) return 0;
  const std::size_t start = static_cast<std::size_t>(*d) - 1;
  std::vector<bool> unmatched;
  for (std::size_t v = start; v < n_var; ++v) {
    bool any = false;
    for (std::size_t o = start; o < n_orig; ++o) any = any || eq(v, o);
    unmatched.push_back(!any);
  }
  int depth = 0;
  for (bool u : unmatched) {
    if (!u) break;
    ++depth;
  }
  return depth;
}

// n choose k as a double, by the multiplicative formula.
inline double choose(long n, long k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (long i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// Fisher two-sided p by listing every table with the same margins.
inline double fisher_p(long a, long b, long c, long d) {
  const long r1 = a + b, r2 = c + d, c1 = a + c;
  const double total = choose(r1 + r2, c1);
  const double p_obs = choose(r1, a) * choose(r2, c) / total;
  double p = 0.0;
  for (long x = 0; x <= c1; ++x) {
    if (x > r1 || c1 - x > r2) continue;
    const double px = choose(r1, x) * choose(r2, c1 - x) / total;
    if (px <= p_obs * (1.0 + 1e-7)) p += px;
  }
  return std::min(1.0, p);
}

// Midranks computed by counting: rank = #less + (#equal + 1) / 2.
inline std::vector<double> midranks(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double v : x) {
      less += v < x[i];
      equal += v == x[i];
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

// Wilcoxon signed-rank: enumerate all 2^n sign assignments of the ranks.
// Returns {W+, two-sided p}.
inline std::pair<double, double> wilcoxon(const std::vector<double>& diffs) {
  std::vector<double> nz;
  for (double d : diffs) {
    if (d != 0.0) nz.push_back(d);
  }
  std::vector<double> absd;
  for (double d : nz) absd.push_back(std::abs(d));
  const auto ranks = midranks(absd);
  double w = 0.0;
  for (std::size_t i = 0; i < nz.size(); ++i) {
    if (nz[i] > 0) w += ranks[i];
  }
  const std::size_t n = nz.size();
  double lower = 0, upper = 0, all = 0;
  for (unsigned long mask = 0; mask < (1UL << n); ++mask) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1UL << i)) s += ranks[i];
    }
    all += 1;
    lower += s <= w + 1e-9;
    upper += s >= w - 1e-9;
  }
  return {w, std::min(1.0, 2.0 * std::min(lower / all, upper / all))};
}

// Mann–Whitney: enumerate every assignment of n1 pooled positions to the
// first sample. Returns {U, two-sided p}.
inline std::pair<double, double> mann_whitney(const std::vector<double>& x,
                                              const std::vector<double>& y) {
  std::vector<double> pooled = x;
  pooled.insert(pooled.end(), y.begin(), y.end());
  const auto ranks = midranks(pooled);
  const std::size_t n = pooled.size(), n1 = x.size();
  double r1 = 0.0;
  for (std::size_t i = 0; i < n1; ++i) r1 += ranks[i];
  double lower = 0, upper = 0, all = 0;
  for (unsigned long mask = 0; mask < (1UL << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcountl(mask)) != n1) continue;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1UL << i)) s += ranks[i];
    }
    all += 1;
    lower += s <= r1 + 1e-9;
    upper += s >= r1 - 1e-9;
  }
  const double u = r1 - static_cast<double>(n1 * (n1 + 1)) / 2.0;
  return {u, std::min(1.0, 2.0 * std::min(lower / all, upper / all))};
}

}  // namespace oracle
