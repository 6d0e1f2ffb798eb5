// Acceptance suite: one PASS/FAIL/SKIP line per criterion. Exit status is
// nonzero when any criterion fails; skips do not fail the run.
//
// Criteria 11-18 need the released panel corpus. Point AGENTDIFF_RELEASED_DIR
// at a directory holding config.json plus two workspaces prepared through the
// run stage: panel/ (the 68-cell panel) and pooled/ (panel plus held-out
// cells, used for the partition table).

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "agentdiff/analysis_records.hpp"
#include "agentdiff/divergence.hpp"
#include "agentdiff/metrics.hpp"
#include "agentdiff/pipeline.hpp"
#include "agentdiff/rng.hpp"
#include "agentdiff/severity.hpp"
#include "agentdiff/stats.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

using namespace agentdiff;
namespace fs = std::filesystem;
namespace pl = agentdiff::pipeline;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
  Status status = Status::pass;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::pass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::fail, std::move(d)}; }
Outcome skip(std::string d) { return {Status::skip, std::move(d)}; }
Outcome verdict(bool ok, std::string d) { return {ok ? Status::pass : Status::fail, std::move(d)}; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

bool same_p(double a, double b) { return std::fabs(a - b) <= 1e-9 * std::max(1.0, std::fabs(b)); }

// ---------------------------------------------------------------------------

Outcome c1_edit_distance() {
  const auto strings = oracle::all_strings("ab", 6);
  std::size_t pairs = 0, bad = 0;
  for (const auto& a : strings) {
    const std::u32string ua(a.begin(), a.end());
    for (const auto& b : strings) {
      const std::u32string ub(b.begin(), b.end());
      ++pairs;
      if (severity::levenshtein(ua, ub) != static_cast<std::size_t>(oracle::edit_distance(a, b))) ++bad;
    }
  }
  return verdict(bad == 0, std::to_string(pairs - bad) + "/" + std::to_string(pairs) + " pairs match");
}

Trajectory symbols_trajectory(const std::string& s) {
  Trajectory t;
  int i = 1;
  for (char c : s) t.steps.push_back({i++, std::string("step ") + c, "", ""});
  return t;
}

Outcome c2_divergence_cascade() {
  const auto seqs = oracle::all_strings("xyz", 4);
  std::size_t pairs = 0, bad = 0;
  for (const auto& o : seqs) {
    for (const auto& v : seqs) {
      const auto eq = [&](std::size_t vi, std::size_t oi) { return v[vi] == o[oi]; };
      divergence::PairAligner al(symbols_trajectory(o), symbols_trajectory(v));
      const auto mode = divergence::AlignMode::exact();
      ++pairs;
      if (al.divergence_step(mode) != oracle::divergence_step(o.size(), v.size(), eq) ||
          al.cascade_depth(mode) != oracle::cascade_depth(o.size(), v.size(), eq)) {
        ++bad;
      }
    }
  }
  return verdict(bad == 0, std::to_string(pairs - bad) + "/" + std::to_string(pairs) + " pairs match");
}

// Steps are short sentences over a small vocabulary; variants copy the
// original and then rewrite, insert or drop steps and swap words.
std::vector<std::string> random_steps(Rng& rng, std::size_t n) {
  static const std::vector<std::string> vocab{"add",   "the",  "total", "apples", "cost", "each",
                                              "price", "then", "we",    "have",   "so",   "answer"};
  std::vector<std::string> steps;
  for (std::size_t i = 0; i < n; ++i) {
    std::string s;
    const std::size_t words = 3 + rng.index(4);
    for (std::size_t w = 0; w < words; ++w) s += (w ? " " : "") + vocab[rng.index(vocab.size())];
    steps.push_back(s);
  }
  return steps;
}

std::string mutate_words(Rng& rng, const std::string& step) {
  const auto split = [](const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> w;
    for (std::string t; in >> t;) w.push_back(t);
    return w;
  };
  auto words = split(step);
  const auto repl = split(random_steps(rng, 1)[0]);
  for (std::size_t k = 0, n = 1 + rng.index(2); k < n && !words.empty(); ++k) {
    words[rng.index(words.size())] = repl[rng.index(repl.size())];
  }
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) out += (i ? " " : "") + words[i];
  return out;
}

Outcome c3_threshold_monotonicity() {
  Rng rng(20240607);
  const auto m3 = divergence::AlignMode::tfidf(0.3);
  const auto m5 = divergence::AlignMode::tfidf(0.5);
  const auto m7 = divergence::AlignMode::tfidf(0.7);
  std::size_t violations = 0;
  std::string example;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto orig = random_steps(rng, 3 + rng.index(4));
    std::vector<std::string> var;
    for (const auto& s : orig) {
      const double u = rng.uniform();
      if (u < 0.15) continue;
      if (u < 0.35) {
        var.push_back(mutate_words(rng, s));
      } else if (u < 0.45) {
        var.push_back(random_steps(rng, 1)[0]);
        var.push_back(s);
      } else {
        var.push_back(s);
      }
    }
    if (var.empty()) var.push_back(random_steps(rng, 1)[0]);
    divergence::PairAligner al(orig, var);
    const int d3 = al.cascade_depth(m3), d5 = al.cascade_depth(m5), d7 = al.cascade_depth(m7);
    if (!(d7 >= d5 && d5 >= d3)) {
      if (violations == 0) {
        example = " (first at trial " + std::to_string(trial) + ": depths " + std::to_string(d3) + "/" +
                  std::to_string(d5) + "/" + std::to_string(d7) + ")";
      }
      ++violations;
    }
  }
  return verdict(violations == 0, std::to_string(violations) + " violations in 1000 pairs" + example);
}

Outcome c4_exact_tests() {
  std::size_t checked = 0, bad = 0;
  for (long a = 0; a <= 8; ++a)
    for (long b = 0; a + b <= 8; ++b)
      for (long c = 0; a + c <= 8; ++c)
        for (long d = 0; c + d <= 8 && b + d <= 8; ++d) {
          ++checked;
          const auto r = stats::fisher_exact_2x2({{{a, b}, {c, d}}});
          if (!r.p_two_sided || !same_p(*r.p_two_sided, oracle::fisher_p(a, b, c, d))) ++bad;
        }
  const std::size_t fisher = checked;

  // Wilcoxon: every sign pattern of |d| = 1..n, plus tied integer samples.
  Rng rng(7);
  for (int n = 1; n <= 8; ++n) {
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      std::vector<double> d;
      for (int i = 0; i < n; ++i) d.push_back((mask >> i & 1u) ? i + 1.0 : -(i + 1.0));
      const auto r = stats::wilcoxon_signed_rank(d);
      const auto [w, p] = oracle::wilcoxon(d);
      ++checked;
      if (!r.p_two_sided || r.statistic != w || !same_p(*r.p_two_sided, p)) ++bad;
    }
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> d;
      for (int i = 0; i < n; ++i) d.push_back(static_cast<double>(static_cast<long>(rng.index(7)) - 3));
      const auto r = stats::wilcoxon_signed_rank(d);
      const auto [w, p] = oracle::wilcoxon(d);
      std::size_t nonzero = 0;
      for (double x : d) nonzero += x != 0.0;
      if (nonzero == 0) continue;
      ++checked;
      if (!r.p_two_sided || r.statistic != w || !same_p(*r.p_two_sided, p)) ++bad;
    }
  }
  // Mann-Whitney: every split n1 + n2 <= 8, distinct and tied values.
  for (int n1 = 1; n1 <= 7; ++n1) {
    for (int n2 = 1; n1 + n2 <= 8; ++n2) {
      for (int rep = 0; rep < 200; ++rep) {
        const bool ties = rep % 2 == 1;
        std::vector<double> x, y;
        for (int i = 0; i < n1; ++i) x.push_back(ties ? static_cast<double>(rng.index(4)) : rng.uniform());
        for (int i = 0; i < n2; ++i) y.push_back(ties ? static_cast<double>(rng.index(4)) : rng.uniform());
        const auto r = stats::mann_whitney_u(x, y);
        const auto [u, p] = oracle::mann_whitney(x, y);
        ++checked;
        if (!r.p_two_sided || r.statistic != u || !same_p(*r.p_two_sided, p)) ++bad;
      }
    }
  }
  return verdict(bad == 0, std::to_string(checked - bad) + "/" + std::to_string(checked) +
                               " instances match enumeration (" + std::to_string(fisher) + " Fisher tables)");
}

Outcome c5_kappa() {
  const double k1 = stats::cohen_kappa({{20, 5}, {10, 15}}).estimate;
  const double k2 = stats::cohen_kappa({{12, 0, 0}, {0, 7, 0}, {0, 0, 9}}).estimate;
  // Outer product of margins (6, 4) x (5, 5): observed agreement equals chance.
  const double k3 = stats::cohen_kappa({{15, 15}, {10, 10}}).estimate;
  const bool ok = near(k1, 0.4, 1e-12) && near(k2, 1.0, 1e-12) && near(k3, 0.0, 1e-12);
  return verdict(ok, "kappa = " + fmt("%.12g", k1) + ", " + fmt("%.12g", k2) + ", " + fmt("%.12g", k3));
}

Outcome c6_wild_bootstrap_size() {
  const int runs = 500, K = 10, per = 6;
  const std::size_t B = 999;
  int rejections = 0;
  for (int run = 0; run < runs; ++run) {
    Rng rng(derive_seed(11, static_cast<std::uint64_t>(run)));
    stats::Design d;
    d.columns = {"intercept", "x"};
    d.X.resize(K * per, 2);
    d.y.resize(K * per);
    for (int k = 0; k < K; ++k) {
      const double u = rng.normal();
      const double xk = rng.normal();
      for (int i = 0; i < per; ++i) {
        const int row = k * per + i;
        d.X(row, 0) = 1.0;
        d.X(row, 1) = xk + 0.5 * rng.normal();
        d.y(row) = u + rng.normal();
        d.clusters.push_back("c" + std::to_string(k));
      }
    }
    const auto r = stats::wild_cluster_bootstrap(d, 1, B, derive_seed(12, static_cast<std::uint64_t>(run)));
    if (r.p_two_sided && *r.p_two_sided < 0.05) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / runs;
  return verdict(rate >= 0.02 && rate <= 0.09, "rejection rate " + fmt("%.3f", rate) + " at alpha 0.05");
}

Outcome c7_hierarchical_coverage() {
  const int sims = 300, models = 20, cells = 4, items = 10;
  const double mu = 1.0;
  int covered = 0, defined = 0;
  const auto grand_mean = [](const stats::Nested<double>& data) -> std::optional<double> {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& m : data)
      for (const auto& c : m.cells)
        for (double v : c.items) {
          s += v;
          ++n;
        }
    if (n == 0) return std::nullopt;
    return s / n;
  };
  for (int sim = 0; sim < sims; ++sim) {
    Rng rng(derive_seed(21, static_cast<std::uint64_t>(sim)));
    stats::Nested<double> data;
    for (int m = 0; m < models; ++m) {
      stats::NestedModel<double> nm;
      nm.id = "m" + std::to_string(m);
      const double um = rng.normal();
      for (int c = 0; c < cells; ++c) {
        stats::NestedCell<double> nc;
        nc.id = "c" + std::to_string(c);
        const double uc = 0.5 * rng.normal();
        for (int q = 0; q < items; ++q) nc.items.push_back(mu + um + uc + rng.normal());
        nm.cells.push_back(std::move(nc));
      }
      data.push_back(std::move(nm));
    }
    const auto r = stats::hierarchical_bootstrap(data, grand_mean, 999, derive_seed(22, static_cast<std::uint64_t>(sim)));
    if (!r.ci95) continue;
    ++defined;
    if (r.ci95->first <= mu && mu <= r.ci95->second) ++covered;
  }
  const double coverage = defined ? static_cast<double>(covered) / defined : 0.0;
  return verdict(defined == sims && coverage >= 0.90 && coverage <= 0.99,
                 "coverage " + fmt("%.3f", coverage) + " over " + std::to_string(defined) + " simulations");
}

std::optional<double> planted_delta(const synthetic::PlantedCell& pc, bool matched, std::uint64_t seed) {
  metrics::MetricsOptions opt;
  opt.proxies = {Proxy::edit_norm};
  opt.seed = seed;
  const auto trajs = metrics::CellTrajectories::from(pc.originals, pc.variant_trajectories);
  const auto comp = metrics::compute_cell_metrics(pc.cell, trajs, pc.variants, opt);
  if (!matched) return comp.metrics.delta_raw;
  const auto it = comp.metrics.delta_matched.find(Proxy::edit_norm);
  if (it == comp.metrics.delta_matched.end()) return std::nullopt;
  return it->second;
}

Outcome c8_planted_delta() {
  const auto pc = synthetic::planted_cell("planted", Scaffold::cot, 200, 0.5, 0.2, 8);
  const auto raw = planted_delta(pc, false, 8);
  // Severity-balanced: both sides draw scores from the same distribution.
  const auto big = synthetic::planted_cell("balanced", Scaffold::cot, 2000, 0.5, 0.2, 9);
  const auto big_raw = planted_delta(big, false, 9);
  const auto big_matched = planted_delta(big, true, 9);
  if (!raw || !big_raw || !big_matched) return fail("delta undefined");
  const double shift = *big_matched - *big_raw;
  const bool ok = near(*raw, 30.0, 5.0) && std::fabs(shift) < 1.0;
  return verdict(ok, "n=200 delta " + fmt("%+.2f", *raw) + " pp; balanced matching shift " + fmt("%+.3f", shift) +
                         " pp (n=2000)");
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = testutil::read_file(e.path());
  }
  return out;
}

Outcome c9_determinism() {
  const auto cfg = pl::load_config(fs::path(AGENTDIFF_SOURCE_DIR) / "fixtures/mock/config.json");
  testutil::TempDir a("accept-a"), b("accept-b");
  for (const auto* ws : {&a, &b}) {
    pl::Log log;
    pl::ingest(cfg, ws->path(), log);
    pl::perturb_stage(cfg, ws->path(), log);
    pl::judge(cfg, ws->path(), log);
    pl::severity_stage(cfg, ws->path(), log);
    pl::run(cfg, ws->path(), log);
    pl::AnalyzeOptions opt;
    opt.seed = cfg.seed;
    pl::analyze(cfg, ws->path(), opt, log);
    pl::report(ws->path(), log);
  }
  const auto sa = snapshot(a.path()), sb = snapshot(b.path());
  std::size_t differing = 0;
  for (const auto& [name, content] : sa) {
    const auto it = sb.find(name);
    if (it == sb.end() || it->second != content) ++differing;
  }
  const bool ok = !sa.empty() && sa.size() == sb.size() && differing == 0;
  return verdict(ok, std::to_string(sa.size()) + " files, " + std::to_string(differing) + " differ");
}

Outcome c10_partition_and_bh() {
  using metrics::Group;
  using metrics::TaskClass;
  const Group expected[4][3] = {
      {Group::B, Group::B, Group::B},
      {Group::excluded, Group::B, Group::excluded},
      {Group::A, Group::B, Group::A},
      {Group::A, Group::B, Group::A},
  };
  const Tier tiers[4] = {Tier::weak, Tier::mid, Tier::strong, Tier::frontier};
  const TaskClass tasks[3] = {TaskClass::shallow_arith, TaskClass::deep_math, TaskClass::multi_hop};
  int table_ok = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) table_ok += metrics::partition_group(tiers[i], tasks[j]) == expected[i][j];

  Rng rng(10);
  std::size_t bh_bad = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> p(1 + rng.index(30));
    for (auto& v : p) v = rng.uniform();
    const auto q = stats::benjamini_hochberg(p);
    std::vector<std::size_t> order(p.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return p[x] < p[y]; });
    bool ok = q.size() == p.size();
    for (std::size_t i = 0; ok && i < p.size(); ++i) ok = q[i] >= p[i] && q[i] <= 1.0;
    for (std::size_t i = 1; ok && i < order.size(); ++i) ok = q[order[i]] >= q[order[i - 1]];
    bh_bad += !ok;
  }
  return verdict(table_ok == 12 && bh_bad == 0, std::to_string(table_ok) + "/12 table entries; " +
                                                     std::to_string(1000 - bh_bad) + "/1000 BH vectors valid");
}

// --- reproduction on the released corpus -----------------------------------------

class Released {
 public:
  static std::optional<fs::path> root() {
    const char* dir = std::getenv("AGENTDIFF_RELEASED_DIR");
    if (!dir || !*dir || !fs::exists(fs::path(dir) / "config.json")) return std::nullopt;
    return fs::path(dir);
  }

  // Analyzes a copy of the named workspace once and caches the rows.
  const std::vector<ResultRow>* rows(const std::string& workspace) {
    auto it = cache_.find(workspace);
    if (it != cache_.end()) return it->second ? &*it->second : nullptr;
    auto& slot = cache_[workspace];
    const auto base = root();
    if (!base || !fs::exists(*base / workspace)) return nullptr;
    try {
      const auto cfg = pl::load_config(*base / "config.json");
      const auto ws = tmp_.path() / workspace;
      fs::copy(*base / workspace, ws, fs::copy_options::recursive);
      pl::AnalyzeOptions opt;
      opt.seed = cfg.seed;
      opt.bootstrap = 10000;
      opt.hierarchical_bootstrap = 5000;
      pl::Log log;
      pl::analyze(cfg, ws, opt, log);
      slot = load_records<ResultRow>(pl::files::results(ws));
    } catch (const std::exception& e) {
      error_ = e.what();
      return nullptr;
    }
    return &*slot;
  }

  const std::string& error() const { return error_; }

 private:
  testutil::TempDir tmp_{"released"};
  std::map<std::string, std::optional<std::vector<ResultRow>>> cache_;
  std::string error_;
};

const ResultRow* find_row(const std::vector<ResultRow>& rows, const std::string& section,
                          const std::string& scope, const std::string& method) {
  for (const auto& r : rows) {
    if (r.section == section && r.scope == scope && r.method == method) return &r;
  }
  return nullptr;
}

// Collects comparisons of one criterion.
class Check {
 public:
  explicit Check(const std::vector<ResultRow>& rows) : rows_(rows) {}

  void value(const std::string& label, const std::string& section, const std::string& scope,
             const std::string& method, std::optional<double> ResultRow::*field, double want, double tol) {
    const auto* r = find_row(rows_, section, scope, method);
    if (!r || !(r->*field)) {
      missing(label);
      return;
    }
    compare(label, *(r->*field), want, tol);
  }

  void count(const std::string& label, const std::string& section, const std::string& scope,
             const std::string& method, long want) {
    const auto* r = find_row(rows_, section, scope, method);
    if (!r || !r->count) {
      missing(label);
      return;
    }
    if (*r->count != want) ok_ = false;
    add(label + " " + std::to_string(*r->count) + (*r->count == want ? "" : " (want " + std::to_string(want) + ")"));
  }

  void n(const std::string& label, const std::string& section, const std::string& scope,
         const std::string& method, long want) {
    const auto* r = find_row(rows_, section, scope, method);
    if (!r) {
      missing(label);
      return;
    }
    if (r->n != want) ok_ = false;
    add(label + " " + std::to_string(r->n) + (r->n == want ? "" : " (want " + std::to_string(want) + ")"));
  }

  void compare(const std::string& label, double got, double want, double tol) {
    const bool good = near(got, want, tol);
    if (!good) ok_ = false;
    add(label + " " + fmt("%.4g", got) + (good ? "" : " (want " + fmt("%.4g", want) + ")"));
  }

  Outcome outcome() const { return verdict(ok_, detail_); }

 private:
  void missing(const std::string& label) {
    ok_ = false;
    add(label + " missing");
  }
  void add(const std::string& s) { detail_ += (detail_.empty() ? "" : "; ") + s; }

  const std::vector<ResultRow>& rows_;
  bool ok_ = true;
  std::string detail_;
};

using Field = std::optional<double> ResultRow::*;
constexpr Field kEst = &ResultRow::estimate;
constexpr Field kStat = &ResultRow::statistic;
constexpr Field kP = &ResultRow::p;
constexpr Field kSe = &ResultRow::se;
constexpr Field kLo = &ResultRow::ci_lo;
constexpr Field kHi = &ResultRow::ci_hi;

Outcome with_rows(Released& rel, const std::string& workspace, const std::function<Outcome(Check&)>& body) {
  if (!Released::root()) return skip("released corpus not found (set AGENTDIFF_RELEASED_DIR)");
  const auto* rows = rel.rows(workspace);
  if (!rows) {
    return rel.error().empty() ? skip("released corpus has no " + workspace + "/ workspace")
                               : fail("analyze on " + workspace + "/ failed: " + rel.error());
  }
  Check check(*rows);
  return body(check);
}

Outcome c11(Released& rel) {
  return with_rows(rel, "panel", [](Check& c) {
    c.value("matched", "panel_delta", "paired_t", "matched:edit_norm", kEst, 19.69, 0.05);
    c.value("raw", "panel_delta", "paired_t", "raw", kEst, 18.90, 0.05);
    c.count("matched positive", "panel_delta", "paired_t", "matched:edit_norm", 64);
    c.count("raw positive", "panel_delta", "paired_t", "raw", 63);
    c.value("t", "panel_delta", "paired_t", "matched:edit_norm", kStat, 9.58, 0.05);
    return c.outcome();
  });
}

Outcome c12(Released& rel) {
  return with_rows(rel, "panel", [](Check& c) {
    const std::array<std::tuple<const char*, double, long>, 4> want{{{"edit_norm", 18.94, 63},
                                                                     {"token_jaccard", 20.91, 61},
                                                                     {"embed_cosine_dist", 19.04, 64},
                                                                     {"length_ratio", 20.09, 62}}};
    for (const auto& [proxy, delta, positive] : want) {
      const std::string m = std::string("matched:") + proxy;
      c.value(proxy, "panel_delta", "paired_t", m, kEst, delta, 0.1);
      c.count(std::string(proxy) + " positive", "panel_delta", "paired_t", m, positive);
    }
    return c.outcome();
  });
}

Outcome c13(Released& rel) {
  return with_rows(rel, "panel", [](Check& c) {
    const std::array<std::pair<const char*, double>, 5> want{
        {{"paraphrase", 0.480}, {"synonym", 0.257}, {"reorder", 0.284}, {"format", 0.078}, {"distractor", 0.485}}};
    for (const auto& [op, sev] : want) c.value(op, "severity_by_operator", op, "edit_norm", kEst, sev, 0.005);
    return c.outcome();
  });
}

Outcome c14(Released& rel) {
  return with_rows(rel, "panel", [](Check& c) {
    const std::string scope = "model|matched:edit_norm";
    const std::array<std::tuple<const char*, double, double, double>, 4> want{{{"intercept", -2.48, 1.79, 0.108},
                                                                               {"multi_path", 4.31, 2.40, 0.165},
                                                                               {"accuracy", 11.49, 5.81, 0.126},
                                                                               {"react", -1.25, 2.74, 0.626}}};
    for (const auto& [term, beta, se, p] : want) {
      c.value(std::string(term) + " beta", "regression", scope, term, kEst, beta, 0.01);
      c.value(std::string(term) + " se", "regression", scope, term, kSe, se, 0.01);
      c.value(std::string(term) + " wild p", "regression", scope, term, kP, p, 0.02);
    }
    return c.outcome();
  });
}

Outcome c15(Released& rel) {
  return with_rows(rel, "panel", [](Check& c) {
    c.value("exact", "cascade", "gsm8k", "exact:cell_paired_t", kEst, 0.38, 0.02);
    c.value("tfidf@0.3", "cascade_audit", "gsm8k", "tfidf@0.3:cell_paired_t", kEst, 0.66, 0.03);
    c.value("tfidf@0.5", "cascade_audit", "gsm8k", "tfidf@0.5:cell_paired_t", kEst, 0.46, 0.03);
    c.value("tfidf@0.7", "cascade_audit", "gsm8k", "tfidf@0.7:cell_paired_t", kEst, 0.24, 0.03);
    c.value("hier lo", "cascade", "gsm8k", "exact:hierarchical", kLo, 0.02, 0.05);
    c.value("hier hi", "cascade", "gsm8k", "exact:hierarchical", kHi, 0.87, 0.05);
    return c.outcome();
  });
}

Outcome c16(Released& rel) {
  return with_rows(rel, "pooled", [](Check& c) {
    c.value("group A", "partition", "A", "mean", kEst, 10.0, 0.05);
    c.count("A positive", "partition", "A", "mean", 13);
    c.n("A cells", "partition", "A", "mean", 16);
    c.value("welch t", "partition", "A_vs_B", "welch", kStat, 3.81, 0.05);
    c.value("U", "partition", "A_vs_B", "mann_whitney", kStat, 237.0, 1e-9);
    c.value("fisher p", "partition", "capable_vs_weak", "fisher", kP, 4.5e-3, 0.45e-3);
    return c.outcome();
  });
}

Outcome c17(Released& rel) {
  return with_rows(rel, "panel", [](Check& c) {
    c.value("M3", "probe", "M3", "M3_cascade_depth", kEst, 0.167, 0.05);
    c.value("M3 t", "probe", "M3", "M3_cascade_depth", kStat, 7.69, 0.05);
    c.value("M4 k2", "probe", "M4:step2", "M4_step_similarity_k2", kEst, -0.056, 0.003);
    c.value("M4 k3", "probe", "M4:step3", "M4_step_similarity_k3", kEst, -0.093, 0.003);
    c.value("M4 k4", "probe", "M4:step4", "M4_step_similarity_k4", kEst, -0.088, 0.003);
    c.value("M1", "probe", "M1", "M1_divergence_step", kEst, 0.156, 0.01);
    c.value("M2 p", "probe", "M2", "M2_self_correct", kP, 0.230, 0.02);
    return c.outcome();
  });
}

Outcome c18(Released& rel) {
  return with_rows(rel, "panel", [](Check& c) {
    const std::string scope = "matched:edit_norm";
    c.value("MAE", "lomo", scope, "mae_pp", kEst, 7.10, 0.2);
    c.value("sign accuracy", "lomo", scope, "sign_accuracy", kEst, 0.722, 0.01);
    c.value("trivial", "lomo", scope, "trivial_sign_accuracy", kEst, 0.722, 0.01);
    return c.outcome();
  });
}

}  // namespace

int main() {
  Released released;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"edit distance vs recursive oracle, {a,b} strings up to length 6", c1_edit_distance},
      {"divergence step and cascade depth vs oracle, 3 symbols up to 4 steps", c2_divergence_cascade},
      {"cascade depth monotone in TF-IDF threshold on 1000 random pairs", c3_threshold_monotonicity},
      {"Fisher, Wilcoxon, Mann-Whitney vs full enumeration, size up to 8", c4_exact_tests},
      {"Cohen kappa on three fixed tables", c5_kappa},
      {"wild cluster bootstrap size, K=10, 500 runs x 999 replicates", c6_wild_bootstrap_size},
      {"hierarchical bootstrap 95% CI coverage, 300 simulations", c7_hierarchical_coverage},
      {"planted delta recovery and balanced severity matching", c8_planted_delta},
      {"mock pipeline byte-identical across two runs", c9_determinism},
      {"partition truth table and BH properties", c10_partition_and_bh},
      {"panel delta: matched, raw, positives, paired t", [&] { return c11(released); }},
      {"matched delta per severity proxy", [&] { return c12(released); }},
      {"per-operator edit severity", [&] { return c13(released); }},
      {"cell regression coefficients, CR1 SEs, wild p", [&] { return c14(released); }},
      {"GSM8K cascade gaps and hierarchical CI", [&] { return c15(released); }},
      {"capability partition on pooled cells", [&] { return c16(released); }},
      {"mechanism probes M1-M4", [&] { return c17(released); }},
      {"leave-one-model-out probe evaluation", [&] { return c18(released); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    failures += o.status == Status::fail;
    std::cout << tag << " criterion " << i + 1 << ": " << criteria[i].first << " -- " << o.detail << " ["
              << fmt("%.1f", secs) << "s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
