#include <algorithm>
#include <set>
#include <tuple>

#include "agentdiff/error.hpp"
#include "agentdiff/pipeline.hpp"
#include "agentdiff/probe.hpp"
#include "agentdiff/records.hpp"

namespace agentdiff::pipeline {

namespace {

struct CascadeItem {
  std::string question_id;
  std::vector<int> sem;
  std::vector<int> sur;
  bool operator<(const CascadeItem& o) const {
    return std::tie(question_id, sem, sur) < std::tie(o.question_id, o.sem, o.sur);
  }
};

ResultRow row(std::string section, std::string scope, std::string method,
              std::optional<double> estimate, long n = 0) {
  ResultRow r;
  r.section = std::move(section);
  r.scope = std::move(scope);
  r.method = std::move(method);
  r.estimate = estimate;
  r.n = n;
  return r;
}

ResultRow stat_row(std::string section, std::string scope, std::string method,
                   const stats::StatResult& s) {
  ResultRow r = make_row(std::move(section), std::move(scope), s);
  r.method = std::move(method);
  return r;
}

std::optional<double> selected_delta(const CellMetrics& m, stats::DeltaSource source, Proxy proxy) {
  if (source == stats::DeltaSource::raw) return m.delta_raw;
  auto it = m.delta_matched.find(proxy);
  if (it == m.delta_matched.end()) return std::nullopt;
  return it->second;
}

long count_positive(const std::vector<double>& v) {
  return static_cast<long>(std::count_if(v.begin(), v.end(), [](double d) { return d > 0; }));
}

std::string source_label(stats::DeltaSource s, Proxy p) {
  return s == stats::DeltaSource::raw ? "raw" : "matched:" + std::string(to_string(p));
}

struct PairRecord {
  Cell cell;
  std::string question_id;
  Side side;
  bool inconsistent = false;
  divergence::PropagationDetails details;
};

double mean_of(const std::vector<int>& v) {
  double s = 0;
  for (int x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

void analyze(const Config& cfg, const fs::path& ws, const AnalyzeOptions& opt, Log& log) {
  require_file("analyze", layout::cells_file(ws));
  auto cells = load_records<Cell>(layout::cells_file(ws));
  if (cells.empty()) throw StageError("analyze", "no cells in " + layout::cells_file(ws).string());

  std::map<Benchmark, std::vector<Question>> corpora;
  std::map<Benchmark, std::vector<Variant>> variants;
  for (const auto& c : cells) {
    if (corpora.count(c.benchmark)) continue;
    require_file("analyze", layout::corpus_file(ws, c.benchmark));
    require_file("analyze", layout::variants_file(ws, c.benchmark));
    corpora[c.benchmark] = load_records<Question>(layout::corpus_file(ws, c.benchmark));
    variants[c.benchmark] = load_records<Variant>(layout::variants_file(ws, c.benchmark));
  }
  std::map<std::string, const Variant*> variant_by_id;
  for (const auto& [b, vs] : variants) {
    for (const auto& v : vs) variant_by_id[v.id] = &v;
  }

  // Tiers from cells that have an accuracy.
  std::vector<Cell> with_acc;
  for (const auto& c : cells) {
    if (c.accuracy) {
      with_acc.push_back(c);
    } else {
      log.push_back("analyze: " + c.key() + " has no accuracy; no tier");
    }
  }
  const auto tiers = metrics::assign_tier(with_acc, cfg.tiers);
  for (auto& c : cells) {
    auto it = tiers.find(c.model_id);
    if (it != tiers.end()) c.tier = it->second;
  }

  // Per-cell metrics.
  std::vector<ResultRow> rows;
  std::vector<CellMetrics> panel;
  std::map<std::string, metrics::CellTrajectories> trajs;
  std::size_t audit_violations = 0, failed = 0, excluded = 0, unjudged = 0;
  metrics::MetricsOptions mo;
  mo.n_bins = cfg.n_bins;
  mo.seed = opt.seed;
  for (const auto& c : cells) {
    const auto key = c.key();
    require_file("analyze", layout::trajectory_file(ws, key, true));
    require_file("analyze", layout::trajectory_file(ws, key, false));
    const auto orig = load_records<Trajectory>(layout::trajectory_file(ws, key, true));
    const auto var = load_records<Trajectory>(layout::trajectory_file(ws, key, false));
    for (const auto& t : orig) failed += t.failed;
    for (const auto& t : var) failed += t.failed;
    auto& ct = trajs[key] = metrics::CellTrajectories::from(orig, var);
    auto comp = metrics::compute_cell_metrics(
        c, ct, variants[c.benchmark], mo,
        [&](const Variant& v) { audit_violations += v.judge_equivalent == false; });
    for (auto& n : comp.notes) log.push_back("analyze: " + n);
    const auto& m = comp.metrics;
    rows.push_back(row("delta_cell", key, "raw", m.delta_raw, m.n_originals));
    for (const auto& [p, d] : m.delta_matched) {
      ResultRow r = row("delta_cell", key, "matched:" + std::string(to_string(p)), d, m.n_originals);
      const auto& sample = comp.matched.at(p);
      r.count = static_cast<long>(sample.kept_count());
      rows.push_back(r);
    }
    rows.push_back(row("delta_cell", key, "accuracy", c.accuracy, m.n_originals));
    for (const auto& [op, ir] : m.ir_per_operator) {
      rows.push_back(row("ir_cell", key, std::string(to_string(op)), ir));
    }
    panel.push_back(m);
  }
  for (const auto& [b, vs] : variants) {
    for (const auto& v : vs) {
      if (!v.judge_equivalent) ++unjudged;
      else if (!*v.judge_equivalent) ++excluded;
    }
  }
  save_records(layout::metrics_file(ws), panel);

  // Severity audit: mean proxy value per operator.
  {
    std::vector<Variant> pooled;
    for (const auto& [b, vs] : variants) {
      for (const auto& v : vs) {
        if (v.passes_judge()) pooled.push_back(v);
      }
    }
    for (Proxy p : kProxies) {
      for (const auto& [op, mean] : severity::mean_severity_by_operator(pooled, p)) {
        const long n = static_cast<long>(std::count_if(pooled.begin(), pooled.end(), [&](const Variant& v) {
          return v.op == op && v.severity.count(p);
        }));
        rows.push_back(row("severity_by_operator", std::string(to_string(op)),
                           std::string(to_string(p)), mean, n));
      }
    }
  }

  // Panel Δ: raw and matched under every proxy.
  {
    std::vector<std::pair<std::string, std::vector<double>>> series;
    std::vector<double> raw;
    for (const auto& m : panel) {
      if (m.delta_raw) raw.push_back(*m.delta_raw);
    }
    series.emplace_back("raw", raw);
    for (Proxy p : kProxies) {
      std::vector<double> v, shrink;
      for (const auto& m : panel) {
        auto it = m.delta_matched.find(p);
        if (it == m.delta_matched.end()) continue;
        v.push_back(it->second);
        if (m.delta_raw) shrink.push_back(*m.delta_raw - it->second);
      }
      series.emplace_back("matched:" + std::string(to_string(p)), v);
      rows.push_back(row("panel_delta", "shrinkage", std::string(to_string(p)),
                         shrink.empty() ? std::nullopt : std::optional<double>(stats::mean(shrink)),
                         static_cast<long>(shrink.size())));
    }
    for (const auto& [name, v] : series) {
      if (v.empty()) {
        rows.push_back(row("panel_delta", "paired_t", name, std::nullopt));
        continue;
      }
      ResultRow tr = stat_row("panel_delta", "paired_t", name, stats::paired_t(v));
      tr.count = count_positive(v);
      rows.push_back(tr);
      ResultRow wr = stat_row("panel_delta", "wilcoxon", name, stats::wilcoxon_signed_rank(v));
      wr.estimate = stats::median(v);
      wr.count = count_positive(v);
      rows.push_back(wr);
    }
  }

  // Cell-level regression with CR1 SEs and wild cluster bootstrap p values.
  {
    const std::string scope = std::string(opt.cluster == stats::ClusterKey::model ? "model" : "family") +
                              "|" + source_label(opt.source, opt.proxy);
    try {
      const auto design = stats::cell_regression_design(panel, opt.cluster, opt.source, opt.proxy);
      const auto fit = stats::ols_cluster_robust(design);
      std::vector<ResultRow> coef_rows;
      std::vector<double> ps;
      std::vector<std::size_t> tested;
      for (std::size_t j = 0; j < fit.coefficients.size(); ++j) {
        const auto& c = fit.coefficients[j];
        ResultRow r = row("regression", scope, c.name, c.beta, static_cast<long>(fit.n));
        r.se = c.se;
        if (!c.degenerate) r.statistic = c.t;
        r.count = static_cast<long>(fit.n_clusters);
        const auto w = stats::wild_cluster_bootstrap(design, j, opt.bootstrap,
                                                     derive_seed(opt.seed, "wild:" + c.name));
        if (w.p_two_sided) {
          r.p = *w.p_two_sided;
          ps.push_back(*w.p_two_sided);
          tested.push_back(coef_rows.size());
        }
        if (w.degenerate) r.note = "wild bootstrap degenerate";
        coef_rows.push_back(r);
      }
      const auto q = stats::benjamini_hochberg(ps);
      for (std::size_t i = 0; i < tested.size(); ++i) coef_rows[tested[i]].q = q[i];
      rows.insert(rows.end(), coef_rows.begin(), coef_rows.end());
    } catch (const Error& e) {
      ResultRow r = row("regression", scope, "skipped", std::nullopt);
      r.note = e.what();
      rows.push_back(r);
      log.push_back(std::string("analyze: regression skipped: ") + e.what());
    }
  }

  // Trajectory pairs: propagation records, cascade gaps, mechanism probes.
  std::vector<PairRecord> pairs;
  for (const auto& c : cells) {
    const auto& ct = trajs.at(c.key());
    for (const auto& [vid, vt] : ct.variants) {
      auto vit = variant_by_id.find(vid);
      if (vit == variant_by_id.end() || !vit->second->passes_judge()) continue;
      const Variant& v = *vit->second;
      auto ot = ct.originals.find(v.question_id);
      if (ot == ct.originals.end() || ot->second.failed || vt.failed) continue;
      PairRecord p;
      p.cell = c;
      p.question_id = v.question_id;
      p.side = v.side;
      p.inconsistent = !perturb::answers_equivalent(vt.final_answer, ot->second.final_answer);
      p.details = divergence::analyze_pair(ot->second, vt, perturb::answers_equivalent);
      p.details.cell_key = c.key();
      pairs.push_back(std::move(p));
    }
  }
  {
    std::vector<divergence::PropagationDetails> details;
    for (const auto& p : pairs) details.push_back(p.details);
    save_records(layout::propagation_file(ws), details);
  }

  std::vector<divergence::AlignMode> modes = divergence::standard_modes();
  const std::string primary_label = opt.align.label();
  if (std::none_of(modes.begin(), modes.end(), [&](const auto& m) { return m.label() == primary_label; })) {
    modes.push_back(opt.align);
  }
  auto depth_of = [&](const PairRecord& p, const divergence::AlignMode& mode) -> int {
    auto it = p.details.cascade_depth.find(mode.label());
    if (it != p.details.cascade_depth.end()) return it->second;
    return divergence::cascade_depth(trajs.at(p.cell.key()).originals.at(p.question_id),
                                     trajs.at(p.cell.key()).variants.at(p.details.variant_id), mode);
  };
  for (Benchmark b : kBenchmarks) {
    const std::string bname(to_string(b));
    for (const auto& mode : modes) {
      const std::string label = mode.label();
      std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> per_cell;
      std::vector<double> sem_all, sur_all;
      std::map<std::string, std::map<std::string, std::map<std::string, CascadeItem>>> nested;
      for (const auto& p : pairs) {
        if (p.cell.benchmark != b || !p.inconsistent) continue;
        const int d = depth_of(p, mode);
        auto& pc = per_cell[p.cell.key()];
        auto& item = nested[p.cell.model_id][p.cell.key()][p.question_id];
        item.question_id = p.question_id;
        if (p.side == Side::meaning_bearing) {
          pc.first.push_back(d);
          sem_all.push_back(d);
          item.sem.push_back(d);
        } else {
          pc.second.push_back(d);
          sur_all.push_back(d);
          item.sur.push_back(d);
        }
      }
      if (per_cell.empty()) continue;
      std::vector<double> gaps;
      for (const auto& [k, v] : per_cell) {
        if (!v.first.empty() && !v.second.empty()) gaps.push_back(mean_of(v.first) - mean_of(v.second));
      }
      const std::string section = label == primary_label ? "cascade" : "cascade_audit";
      if (gaps.size() >= 2) {
        rows.push_back(stat_row(section, bname, label + ":cell_paired_t", stats::paired_t(gaps)));
      } else {
        ResultRow r = row(section, bname, label + ":cell_paired_t", std::nullopt, static_cast<long>(gaps.size()));
        r.note = "fewer than 2 cells with both sides";
        rows.push_back(r);
      }
      if (sem_all.size() >= 2 && sur_all.size() >= 2) {
        ResultRow r = stat_row(section, bname, label + ":welch", stats::welch_t(sem_all, sur_all));
        r.estimate = stats::mean(sem_all) - stats::mean(sur_all);
        rows.push_back(r);
      }
      if (label == primary_label) {
        stats::Nested<CascadeItem> data;
        for (auto& [model, mcells] : nested) {
          stats::NestedModel<CascadeItem> nm;
          nm.id = model;
          for (auto& [ck, items] : mcells) {
            stats::NestedCell<CascadeItem> nc;
            nc.id = ck;
            for (auto& [qid, it] : items) nc.items.push_back(it);
            nm.cells.push_back(std::move(nc));
          }
          data.push_back(std::move(nm));
        }
        auto statistic = [](const stats::Nested<CascadeItem>& d) -> std::optional<double> {
          double s1 = 0, s2 = 0;
          std::size_t n1 = 0, n2 = 0;
          for (const auto& m : d)
            for (const auto& c : m.cells)
              for (const auto& it : c.items) {
                for (int x : it.sem) s1 += x;
                for (int x : it.sur) s2 += x;
                n1 += it.sem.size();
                n2 += it.sur.size();
              }
          if (n1 == 0 || n2 == 0) return std::nullopt;
          return s1 / n1 - s2 / n2;
        };
        const auto h = stats::hierarchical_bootstrap(data, statistic, opt.hierarchical_bootstrap,
                                                     derive_seed(opt.seed, "hier:" + bname));
        ResultRow r = stat_row(section, bname, label + ":hierarchical", h);
        r.count = static_cast<long>(h.discarded);
        rows.push_back(r);
      }
    }
  }

  // Within-benchmark tractability strata.
  {
    std::map<std::string, metrics::Stratum> stratum_of;
    std::size_t assumptions = 0;
    for (const auto& [b, qs] : corpora) {
      for (const auto& q : qs) {
        try {
          const auto tag = metrics::tag_tractability(q, cfg.tractability);
          stratum_of[q.id] = tag.stratum;
          if (!tag.assumption.empty()) ++assumptions;
        } catch (const TagUnavailable& e) {
          log.push_back(std::string("analyze: ") + e.what());
        }
      }
    }
    if (assumptions > 0) {
      log.push_back("analyze: " + std::to_string(assumptions) +
                    " MATH questions with an unlisted subject treated as single_canonical");
    }
    std::vector<ResultRow> strata_rows;
    std::map<Benchmark, std::pair<std::vector<double>, std::vector<double>>> by_bench;
    for (const auto& c : cells) {
      const auto& ct = trajs.at(c.key());
      for (bool multi : {true, false}) {
        auto filter = [&](const Variant& v) {
          auto it = stratum_of.find(v.question_id);
          return it != stratum_of.end() && metrics::is_multi_path(it->second) == multi;
        };
        const auto d = metrics::delta(metrics::ir_per_operator(ct, variants[c.benchmark], filter));
        strata_rows.push_back(row("strata", c.key(), multi ? "multi_path" : "single_path", d));
        if (d) (multi ? by_bench[c.benchmark].first : by_bench[c.benchmark].second).push_back(*d);
      }
    }
    save_records(files::strata(ws), strata_rows);
    for (const auto& [b, v] : by_bench) {
      const std::string bname(to_string(b));
      const auto& [multi, single] = v;
      if (!multi.empty()) rows.push_back(row("tractability", bname, "multi_path_mean", stats::mean(multi), static_cast<long>(multi.size())));
      if (!single.empty()) rows.push_back(row("tractability", bname, "single_path_mean", stats::mean(single), static_cast<long>(single.size())));
      if (multi.size() >= 2 && single.size() >= 2) {
        ResultRow r = stat_row("tractability", bname, "welch", stats::welch_t(multi, single));
        r.estimate = stats::mean(multi) - stats::mean(single);
        rows.push_back(r);
      }
    }
  }

  // Second-judge agreement.
  {
    std::map<std::string, std::map<std::string, Verdict>> by_judge;
    const auto dir = ws / "judgments";
    if (fs::is_directory(dir)) {
      std::vector<fs::path> jfiles;
      for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".jd") jfiles.push_back(e.path());
      }
      std::sort(jfiles.begin(), jfiles.end());
      for (const auto& f : jfiles) {
        for (const auto& d : load_records<JudgeDecision>(f)) by_judge[d.judge_id][d.variant_id] = d.verdict;
      }
    }
    for (auto a = by_judge.begin(); a != by_judge.end(); ++a) {
      for (auto b = std::next(a); b != by_judge.end(); ++b) {
        std::vector<int> r1, r2;
        for (const auto& [vid, va] : a->second) {
          auto vb = b->second.find(vid);
          if (vb == b->second.end()) continue;
          if (va == Verdict::indeterminate || vb->second == Verdict::indeterminate) continue;
          r1.push_back(va == Verdict::equivalent);
          r2.push_back(vb->second == Verdict::equivalent);
        }
        if (r1.empty()) continue;
        rows.push_back(stat_row("kappa", a->first + "~" + b->first, "cohen_kappa", stats::cohen_kappa(r1, r2)));
      }
    }
  }

  // Generator-swap rank agreement of per-cell Δ.
  if (!cfg.generator_swaps.empty()) {
    std::map<std::string, std::map<std::string, double>> series;
    for (const auto& m : panel) {
      if (auto d = selected_delta(m, opt.source, opt.proxy)) series["primary"][m.cell.key()] = *d;
    }
    for (const auto& [label, path] : cfg.generator_swaps) {
      require_file("analyze", path);
      for (const auto& m : load_records<CellMetrics>(path)) {
        if (auto d = selected_delta(m, opt.source, opt.proxy)) series[label][m.cell.key()] = *d;
      }
    }
    for (auto a = series.begin(); a != series.end(); ++a) {
      for (auto b = std::next(a); b != series.end(); ++b) {
        std::vector<double> x, y;
        for (const auto& [k, v] : a->second) {
          auto it = b->second.find(k);
          if (it == b->second.end()) continue;
          x.push_back(v);
          y.push_back(it->second);
        }
        if (x.size() < 3) continue;
        const std::string scope = a->first + "~" + b->first;
        rows.push_back(stat_row("generator_corr", scope, "pearson", stats::pearson(x, y)));
        rows.push_back(stat_row("generator_corr", scope, "spearman", stats::spearman(x, y)));
      }
    }
  }

  // Capability x tractability partition on cot/react cells.
  {
    std::vector<double> a, b, capable_acc, capable_delta, all_acc, all_delta;
    std::array<std::array<long, 2>, 2> fisher{};
    for (const auto& m : panel) {
      if (m.cell.scaffold == Scaffold::direct || !m.cell.tier) continue;
      const auto d = selected_delta(m, opt.source, opt.proxy);
      if (!d) continue;
      const auto p = metrics::assign_partition(m.cell, *m.cell.tier);
      if (p.group == metrics::Group::A) a.push_back(*d);
      if (p.group == metrics::Group::B) b.push_back(*d);
      if (m.cell.accuracy) {
        const bool capable = *m.cell.accuracy >= cfg.tiers.capable_floor;
        fisher[capable ? 0 : 1][*d > 0 ? 0 : 1] += 1;
        all_acc.push_back(*m.cell.accuracy);
        all_delta.push_back(*d);
        if (capable) {
          capable_acc.push_back(*m.cell.accuracy);
          capable_delta.push_back(*d);
        }
      }
    }
    for (const auto& [name, v] : {std::pair{"A", a}, std::pair{"B", b}}) {
      ResultRow r = row("partition", name, "mean", v.empty() ? std::nullopt : std::optional<double>(stats::mean(v)),
                        static_cast<long>(v.size()));
      r.count = count_positive(v);
      rows.push_back(r);
    }
    if (a.size() >= 2 && b.size() >= 2) {
      ResultRow w = stat_row("partition", "A_vs_B", "welch", stats::welch_t(a, b));
      w.estimate = stats::mean(a) - stats::mean(b);
      rows.push_back(w);
    }
    if (!a.empty() && !b.empty()) rows.push_back(stat_row("partition", "A_vs_B", "mann_whitney", stats::mann_whitney_u(a, b)));
    const long total = fisher[0][0] + fisher[0][1] + fisher[1][0] + fisher[1][1];
    if (total > 0) {
      ResultRow f = stat_row("partition", "capable_vs_weak", "fisher", stats::fisher_exact_2x2(fisher));
      f.note = "[[" + std::to_string(fisher[0][0]) + "," + std::to_string(fisher[0][1]) + "],[" +
               std::to_string(fisher[1][0]) + "," + std::to_string(fisher[1][1]) + "]]";
      f.n = total;
      rows.push_back(f);
    }
    if (capable_acc.size() >= 3) rows.push_back(stat_row("capability_gate", "capable", "pearson", stats::pearson(capable_acc, capable_delta)));
    if (all_acc.size() >= 3) rows.push_back(stat_row("capability_gate", "all", "pearson", stats::pearson(all_acc, all_delta)));
  }

  // Mechanism probes.
  {
    std::vector<divergence::ProbePair> pp;
    for (const auto& p : pairs) pp.push_back({p.question_id, p.cell.scaffold, p.side, p.details});
    const auto report = divergence::mechanism_probes(pp);
    const std::string note = report.insufficient ? "insufficient data" : "";
    auto add = [&](const std::string& scope, const stats::StatResult& s) {
      ResultRow r = stat_row("probe", scope, s.method, s);
      if (!note.empty()) r.note = note;
      r.count = static_cast<long>(report.groups);
      rows.push_back(r);
    };
    add("M1", report.m1_divergence_step);
    add("M2", report.m2_self_correct);
    add("M3", report.m3_cascade_depth);
    for (std::size_t k = 0; k < report.m4_step_similarity.size(); ++k) {
      add("M4:step" + std::to_string(k + 1), report.m4_step_similarity[k]);
    }
    auto finite = [](double v) { return std::isfinite(v) ? std::optional<double>(v) : std::nullopt; };
    rows.push_back(row("probe", "M2", "rate_meaning_bearing", finite(report.m2_rate_meaning_bearing)));
    rows.push_back(row("probe", "M2", "rate_presentation", finite(report.m2_rate_presentation)));
    for (int k = 0; k < divergence::kProbeSteps; ++k) {
      for (Side side : {Side::meaning_bearing, Side::presentation}) {
        std::vector<double> sims;
        for (const auto& p : pairs) {
          if (p.side == side && static_cast<int>(p.details.step_similarity.size()) > k) {
            sims.push_back(p.details.step_similarity[static_cast<std::size_t>(k)]);
          }
        }
        rows.push_back(row("probe_step", "step" + std::to_string(k + 1), std::string(to_string(side)),
                           sims.empty() ? std::nullopt : std::optional<double>(stats::mean(sims)),
                           static_cast<long>(sims.size())));
      }
    }
  }

  // Leave-one-model-out evaluation of the probe estimator.
  {
    probe::LomoOptions lo;
    lo.source = opt.source;
    lo.proxy = opt.proxy;
    lo.lambda = opt.lambda;
    try {
      const auto r = probe::evaluate_lomo(panel, lo);
      rows.push_back(row("lomo", source_label(opt.source, opt.proxy), "mae_pp", r.mae, static_cast<long>(r.n)));
      rows.push_back(row("lomo", source_label(opt.source, opt.proxy), "sign_accuracy", r.sign_accuracy, static_cast<long>(r.n)));
      rows.push_back(row("lomo", source_label(opt.source, opt.proxy), "trivial_sign_accuracy", r.trivial_sign_accuracy, static_cast<long>(r.n)));
    } catch (const ConfigError& e) {
      ResultRow r = row("lomo", source_label(opt.source, opt.proxy), "skipped", std::nullopt);
      r.note = e.what();
      rows.push_back(r);
    }
  }

  rows.push_back(row("telemetry", "workspace", "failed_trajectories", static_cast<double>(failed)));
  rows.push_back(row("telemetry", "workspace", "judge_excluded_variants", static_cast<double>(excluded)));
  rows.push_back(row("telemetry", "workspace", "unjudged_variants", static_cast<double>(unjudged)));
  rows.push_back(row("telemetry", "workspace", "audit_violations", static_cast<double>(audit_violations)));
  if (audit_violations > 0) {
    throw StageError("analyze", std::to_string(audit_violations) +
                                    " judge-rejected variants reached an IR denominator");
  }
  save_records(files::results(ws), rows);
  log.push_back("analyze: " + std::to_string(panel.size()) + " cells, " +
                std::to_string(pairs.size()) + " trajectory pairs, " + std::to_string(rows.size()) +
                " result rows");
}

}  // namespace agentdiff::pipeline
