#include "agentdiff/metrics.hpp"

#include <fstream>

#include "agentdiff/error.hpp"
#include "agentdiff/perturb.hpp"
#include "agentdiff/rng.hpp"
#include "agentdiff/text.hpp"

namespace agentdiff::metrics {

CellTrajectories CellTrajectories::from(const std::vector<Trajectory>& originals,
                                        const std::vector<Trajectory>& variants) {
  CellTrajectories c;
  for (const auto& t : originals) c.originals[t.subject_id] = t;
  for (const auto& t : variants) c.variants[t.subject_id] = t;
  return c;
}

std::optional<double> IrCount::rate() const {
  if (n == 0) return std::nullopt;
  return static_cast<double>(differ) / static_cast<double>(n);
}

IrCount inconsistency_count(const CellTrajectories& trajs, const std::vector<Variant>& variants,
                            Operator op, const VariantFilter& include, const AuditHook& audit) {
  IrCount c;
  for (const auto& v : variants) {
    if (v.op != op || !v.passes_judge()) continue;
    if (include && !include(v)) continue;
    auto vt = trajs.variants.find(v.id);
    auto ot = trajs.originals.find(v.question_id);
    if (vt == trajs.variants.end() || ot == trajs.originals.end()) continue;
    if (vt->second.failed || ot->second.failed) continue;
    if (audit) audit(v);
    ++c.n;
    if (!perturb::answers_equivalent(vt->second.final_answer, ot->second.final_answer)) ++c.differ;
  }
  return c;
}

std::optional<double> inconsistency_rate(const CellTrajectories& trajs,
                                         const std::vector<Variant>& variants, Operator op,
                                         const VariantFilter& include, const AuditHook& audit) {
  return inconsistency_count(trajs, variants, op, include, audit).rate();
}

std::map<Operator, double> ir_per_operator(const CellTrajectories& trajs,
                                           const std::vector<Variant>& variants,
                                           const VariantFilter& include, const AuditHook& audit) {
  std::map<Operator, double> out;
  for (Operator op : kOperators) {
    if (auto r = inconsistency_rate(trajs, variants, op, include, audit)) out[op] = *r;
  }
  return out;
}

std::optional<double> delta(const std::map<Operator, double>& ir) {
  double sem = 0.0, sur = 0.0;
  int n_sem = 0, n_sur = 0;
  for (const auto& [op, r] : ir) {
    if (side_of(op) == Side::meaning_bearing) {
      sem += r;
      ++n_sem;
    } else {
      sur += r;
      ++n_sur;
    }
  }
  if (n_sem == 0 || n_sur == 0) return std::nullopt;
  return 100.0 * (sem / n_sem - sur / n_sur);
}

CellComputation compute_cell_metrics(const Cell& cell, const CellTrajectories& trajs,
                                     const std::vector<Variant>& variants,
                                     const MetricsOptions& options, const AuditHook& audit) {
  CellComputation out;
  CellMetrics& m = out.metrics;
  m.cell = cell;
  for (const auto& [id, t] : trajs.originals) {
    if (!t.failed) ++m.n_originals;
  }
  m.ir_per_operator = ir_per_operator(trajs, variants, {}, audit);
  m.delta_raw = delta(m.ir_per_operator);
  m.accuracy = cell.accuracy.value_or(0.0);

  const std::string key = cell.key();
  for (Proxy proxy : options.proxies) {
    std::vector<severity::ScoredVariant> scored;
    for (const auto& v : variants) {
      if (!v.passes_judge()) continue;
      auto s = v.severity.find(proxy);
      if (s == v.severity.end()) continue;
      auto vt = trajs.variants.find(v.id);
      auto ot = trajs.originals.find(v.question_id);
      if (vt == trajs.variants.end() || ot == trajs.originals.end()) continue;
      if (vt->second.failed || ot->second.failed) continue;
      scored.push_back({v.id, v.side, s->second});
    }
    try {
      auto sample = severity::severity_match(scored, proxy, key, options.n_bins, options.seed);
      const auto kept = sample.kept_ids();
      const auto ir = ir_per_operator(trajs, variants,
                                      [&](const Variant& v) { return kept.count(v.id) > 0; });
      if (auto d = delta(ir)) {
        m.delta_matched[proxy] = *d;
        if (m.delta_raw) sample.shrinkage_pp = *m.delta_raw - *d;
      } else {
        out.notes.push_back(key + ": matched delta undefined for " + std::string(to_string(proxy)));
      }
      out.matched.emplace(proxy, std::move(sample));
    } catch (const EmptyMatch& e) {
      out.notes.push_back(key + ": " + e.what());
    }
  }
  return out;
}

// --- tractability -----------------------------------------------------------------

std::string_view to_string(Stratum s) {
  switch (s) {
    case Stratum::multi_route: return "multi_route";
    case Stratum::single_route: return "single_route";
    case Stratum::multi_method: return "multi_method";
    case Stratum::single_canonical: return "single_canonical";
    case Stratum::multi_evidence: return "multi_evidence";
    case Stratum::unique_chain: return "unique_chain";
  }
  return "?";
}

Stratum parse_stratum(std::string_view s) {
  for (Stratum x : {Stratum::multi_route, Stratum::single_route, Stratum::multi_method,
                    Stratum::single_canonical, Stratum::multi_evidence, Stratum::unique_chain}) {
    if (to_string(x) == s) return x;
  }
  throw ConfigError("unknown stratum '" + std::string(s) + "'");
}

bool is_multi_path(Stratum s) {
  return s == Stratum::multi_route || s == Stratum::multi_method || s == Stratum::multi_evidence;
}

TractabilityRules TractabilityRules::load(const std::filesystem::path& data_dir) {
  TractabilityRules r;
  const auto path = data_dir / "arith_keywords.txt";
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    line = text::to_lower_ascii(text::trim(line));
    if (!line.empty() && line[0] != '#') r.keywords.insert(line);
  }
  return r;
}

TractabilityTag tag_tractability(const Question& q, const TractabilityRules& rules) {
  TractabilityTag tag;
  tag.question_id = q.id;
  switch (q.benchmark) {
    case Benchmark::gsm8k: {
      const auto nums = text::numbers(q.text);
      const std::set<std::string> distinct(nums.begin(), nums.end());
      std::set<std::string> hits;
      for (const auto& tok : text::tokens(q.text)) {
        if (rules.keywords.count(tok)) hits.insert(tok);
      }
      tag.stratum = (distinct.size() >= rules.min_numbers || hits.size() >= rules.min_keywords)
                        ? Stratum::multi_route
                        : Stratum::single_route;
      break;
    }
    case Benchmark::math: {
      auto it = q.meta.find("subject");
      if (it == q.meta.end()) throw TagUnavailable(q.id + ": missing meta 'subject'");
      const std::string& subj = it->second;
      if (subj == "algebra" || subj == "counting_and_probability") {
        tag.stratum = Stratum::multi_method;
      } else {
        tag.stratum = Stratum::single_canonical;
        if (subj != "number_theory" && subj != "geometry") {
          tag.assumption = "subject '" + subj + "' treated as single_canonical";
        }
      }
      break;
    }
    case Benchmark::hotpotqa: {
      auto type = q.meta.find("type");
      auto facts = q.meta.find("supporting_facts");
      if (type == q.meta.end()) throw TagUnavailable(q.id + ": missing meta 'type'");
      if (facts == q.meta.end()) throw TagUnavailable(q.id + ": missing meta 'supporting_facts'");
      int n = 0;
      try {
        n = std::stoi(facts->second);
      } catch (const std::exception&) {
        throw TagUnavailable(q.id + ": meta 'supporting_facts' is not a count");
      }
      tag.stratum = (type->second == "comparison" && n >= 3) ? Stratum::multi_evidence
                                                             : Stratum::unique_chain;
      break;
    }
  }
  return tag;
}

// --- tiers and partition --------------------------------------------------------------

std::map<std::string, Tier> assign_tier(const std::vector<Cell>& cells, const TierRules& rules) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& c : cells) {
    if (!c.accuracy) throw ConfigError("cell " + c.key() + " has no accuracy");
    auto& a = acc[c.model_id];
    a.first += *c.accuracy;
    a.second += 1;
  }
  std::map<std::string, Tier> out;
  for (const auto& [model, a] : acc) {
    if (auto o = rules.overrides.find(model); o != rules.overrides.end()) {
      out[model] = o->second;
      continue;
    }
    const double mean = a.first / a.second;
    if (mean < rules.capable_floor) {
      out[model] = Tier::weak;
    } else if (mean < rules.strong_floor) {
      out[model] = Tier::mid;
    } else {
      out[model] = Tier::strong;
    }
  }
  return out;
}

std::string_view to_string(TaskClass t) {
  switch (t) {
    case TaskClass::shallow_arith: return "shallow_arith";
    case TaskClass::deep_math: return "deep_math";
    case TaskClass::multi_hop: return "multi_hop";
  }
  return "?";
}

std::string_view to_string(Group g) {
  switch (g) {
    case Group::A: return "A";
    case Group::B: return "B";
    case Group::excluded: return "excluded";
  }
  return "?";
}

TaskClass task_class(Benchmark b) {
  switch (b) {
    case Benchmark::gsm8k: return TaskClass::shallow_arith;
    case Benchmark::math: return TaskClass::deep_math;
    case Benchmark::hotpotqa: return TaskClass::multi_hop;
  }
  return TaskClass::shallow_arith;
}

Group partition_group(Tier tier, TaskClass task) {
  if (task == TaskClass::deep_math || tier == Tier::weak) return Group::B;
  if (tier == Tier::strong || tier == Tier::frontier) return Group::A;
  return Group::excluded;
}

PartitionAssignment assign_partition(const Cell& cell, Tier tier) {
  PartitionAssignment p;
  p.cell_key = cell.key();
  p.task = task_class(cell.benchmark);
  p.group = partition_group(tier, p.task);
  return p;
}

}  // namespace agentdiff::metrics
