#include "agentdiff/pipeline.hpp"

#include <set>

#include "agentdiff/error.hpp"
#include "agentdiff/records.hpp"
#include "agentdiff/severity.hpp"

namespace agentdiff::pipeline {

namespace files {
fs::path results(const fs::path& ws) { return ws / "analysis" / "results.rs"; }
fs::path strata(const fs::path& ws) { return ws / "metrics" / "strata.rs"; }
fs::path probe_estimates(const fs::path& ws) { return ws / "probe" / "estimates.pe"; }
fs::path lomo(const fs::path& ws) { return ws / "probe" / "lomo.rs"; }
fs::path report_dir(const fs::path& ws) { return ws / "report"; }
}  // namespace files

void require_file(const std::string& stage, const fs::path& path) {
  if (!fs::exists(path)) throw StageError(stage, "missing upstream file " + path.string());
}

namespace {

std::vector<Benchmark> ingested(const fs::path& ws) {
  std::vector<Benchmark> out;
  for (Benchmark b : kBenchmarks) {
    if (fs::exists(layout::corpus_file(ws, b))) out.push_back(b);
  }
  return out;
}

std::vector<Benchmark> require_corpora(const std::string& stage, const fs::path& ws) {
  auto bs = ingested(ws);
  if (bs.empty()) throw StageError(stage, "missing upstream file " + (ws / "corpus").string() + "/<benchmark>.qs");
  return bs;
}

std::map<std::string, Question> question_index(const std::vector<Question>& qs) {
  std::map<std::string, Question> out;
  for (const auto& q : qs) out[q.id] = q;
  return out;
}

}  // namespace

void ingest(const Config& cfg, const fs::path& ws, Log& log) {
  if (cfg.benchmarks.empty()) throw StageError("ingest", "config lists no benchmarks");
  for (const auto& src : cfg.benchmarks) {
    require_file("ingest", src.path);
    std::vector<std::string> warnings;
    auto qs = ingest_benchmark(src.path, src.benchmark, src.limit,
                               derive_seed(cfg.seed, to_string(src.benchmark)), &warnings);
    for (auto& w : warnings) log.push_back("ingest: " + w);
    save_records(layout::corpus_file(ws, src.benchmark), qs);
    log.push_back("ingest: " + std::string(to_string(src.benchmark)) + ": " +
                  std::to_string(qs.size()) + " questions");
  }
}

void perturb_stage(const Config& cfg, const fs::path& ws, Log& log) {
  const auto bs = require_corpora("perturb", ws);
  perturb::Lexicon lexicon;
  std::vector<std::string> pool;
  std::map<Operator, std::unique_ptr<ChatModel>> generators;
  PromptTemplate paraphrase_prompt, synonym_prompt;
  perturb::GenerationResources res;
  std::vector<perturb::OperatorConfig> configs = cfg.operators;
  for (auto& oc : configs) {
    if (oc.op == Operator::distractor) {
      if (pool.empty()) pool = perturb::load_distractor_pool(cfg.distractor_pool);
      oc.distractor_pool = pool;
    }
    if (side_of(oc.op) != Side::meaning_bearing) continue;
    if (oc.generator_ref == "lexicon") {
      if (oc.op == Operator::paraphrase) throw StageError("perturb", "paraphrase cannot use the lexicon generator");
      if (lexicon.size() == 0) lexicon = perturb::Lexicon::load(cfg.lexicon);
      res.lexicon = &lexicon;
    } else if (oc.generator_ref.empty()) {
      throw StageError("perturb", "no generator configured for " + std::string(to_string(oc.op)));
    } else {
      generators[oc.op] = make_chat_model(cfg, oc.generator_ref, oc.generator_ref);
      res.generators[oc.op] = generators[oc.op].get();
    }
  }
  paraphrase_prompt = PromptTemplate::load(cfg.prompt_dir, "paraphrase.v1");
  synonym_prompt = PromptTemplate::load(cfg.prompt_dir, "synonym.v1");
  res.paraphrase_prompt = &paraphrase_prompt;
  res.synonym_prompt = &synonym_prompt;

  for (Benchmark b : bs) {
    const auto qs = load_records<Question>(layout::corpus_file(ws, b));
    std::vector<Variant> out;
    perturb::GenerationLog glog;
    for (const auto& q : qs) {
      auto vs = perturb::generate_variants(q, configs, cfg.samples_per_operator, res, glog);
      out.insert(out.end(), vs.begin(), vs.end());
    }
    for (auto& m : glog.messages) log.push_back("perturb: " + m);
    save_records(layout::variants_file(ws, b), out);
    log.push_back("perturb: " + std::string(to_string(b)) + ": " + std::to_string(out.size()) +
                  " variants, " + std::to_string(glog.not_perturbable) + " not perturbable, " +
                  std::to_string(glog.generator_unavailable) + " generator failures");
  }
}

void judge(const Config& cfg, const fs::path& ws, Log& log) {
  const auto bs = require_corpora("judge", ws);
  std::map<std::string, std::vector<JudgeDecision>> decisions;
  std::map<std::string, std::unique_ptr<ChatModel>> models;
  std::optional<PromptTemplate> prompt;
  for (const auto& id : cfg.judges) {
    decisions[id];
    if (id != "rules") {
      models[id] = make_chat_model(cfg, id, id);
      if (!prompt) prompt = PromptTemplate::load(cfg.prompt_dir, cfg.judge_prompt);
    }
  }
  const std::string& primary = cfg.judges.front();
  for (Benchmark b : bs) {
    require_file("judge", layout::variants_file(ws, b));
    const auto questions = question_index(load_records<Question>(layout::corpus_file(ws, b)));
    auto variants = load_records<Variant>(layout::variants_file(ws, b));
    std::size_t excluded = 0, indeterminate = 0, unjudged = 0;
    for (auto& v : variants) {
      auto q = questions.find(v.question_id);
      if (q == questions.end()) throw StageError("judge", "variant " + v.id + " has no question");
      std::optional<Verdict> verdict;
      for (const auto& id : cfg.judges) {
        std::optional<JudgeDecision> d;
        if (id == "rules") {
          if (side_of(v.op) == Side::presentation) d = perturb::judge_rules(q->second, v);
        } else {
          d = perturb::judge_llm(q->second, v, *models[id], *prompt, id);
        }
        if (!d) continue;
        if (id == primary) verdict = d->verdict;
        decisions[id].push_back(std::move(*d));
      }
      if (!verdict) {
        v.judge_equivalent.reset();
        ++unjudged;
      } else {
        v.judge_equivalent = *verdict == Verdict::equivalent;
        if (*verdict == Verdict::indeterminate) ++indeterminate;
        if (*verdict != Verdict::equivalent) ++excluded;
      }
    }
    save_records(layout::variants_file(ws, b), variants);
    log.push_back("judge: " + std::string(to_string(b)) + ": " + std::to_string(excluded) +
                  " excluded (" + std::to_string(indeterminate) + " indeterminate), " +
                  std::to_string(unjudged) + " not screened by " + primary);
  }
  for (auto& [id, ds] : decisions) save_records(layout::judgments_file(ws, id), ds);
}

void severity_stage(const Config& cfg, const fs::path& ws, Log& log) {
  const auto bs = require_corpora("severity", ws);
  std::shared_ptr<severity::EmbeddingProvider> inner;
  if (cfg.embedder == "hash") {
    inner = std::make_shared<severity::HashEmbedder>(cfg.embed_dimension);
  } else {
    auto e = cfg.endpoints.find(cfg.embedder);
    if (e == cfg.endpoints.end()) throw StageError("severity", "unknown embedder '" + cfg.embedder + "'");
    inner = std::make_shared<HttpEmbedder>(e->second, cfg.embed_dimension);
  }
  severity::CachedEmbedder embedder(inner, cfg.embed_cache);
  for (Benchmark b : bs) {
    require_file("severity", layout::variants_file(ws, b));
    const auto questions = question_index(load_records<Question>(layout::corpus_file(ws, b)));
    auto variants = load_records<Variant>(layout::variants_file(ws, b));
    std::size_t unavailable = 0;
    for (auto& v : variants) {
      const auto& orig = questions.at(v.question_id).text;
      v.severity.clear();
      for (Proxy p : kProxies) {
        if (auto s = severity::score(p, orig, v.text, &embedder)) {
          v.severity[p] = *s;
        } else {
          ++unavailable;
        }
      }
    }
    save_records(layout::variants_file(ws, b), variants);
    log.push_back("severity: " + std::string(to_string(b)) + ": " + std::to_string(variants.size()) +
                  " variants scored, " + std::to_string(unavailable) + " proxy values unavailable");
  }
  embedder.flush();
}

void run(const Config& cfg, const fs::path& ws, Log& log) {
  const auto bs = require_corpora("run", ws);
  if (cfg.models.empty()) throw StageError("run", "config lists no models");
  std::vector<Cell> cells;
  runner::OfflineParagraphLookup lookup;
  for (const auto& m : cfg.models) {
    std::unique_ptr<ChatModel> model;
    std::optional<runner::ReplayStore> replay;
    runner::AgentAdapter adapter;
    adapter.kind = m.adapter.kind;
    adapter.retries = cfg.retries;
    switch (m.adapter.kind) {
      case runner::AgentAdapter::Kind::mock:
        model = runner::MockChatModel::load(m.adapter.script, m.model_id);
        adapter.backoff_ms = 0;
        break;
      case runner::AgentAdapter::Kind::http:
        model = make_chat_model(cfg, m.adapter.endpoint, m.model_id);
        adapter.backoff_ms = cfg.backoff_ms;
        adapter.record_timestamps = true;
        break;
      case runner::AgentAdapter::Kind::replay:
        replay = runner::ReplayStore::load(m.adapter.replay_root);
        adapter.replay = &*replay;
        break;
    }
    adapter.model = model.get();
    for (Benchmark b : m.benchmarks) {
      if (std::find(bs.begin(), bs.end(), b) == bs.end()) {
        throw StageError("run", "missing upstream file " + layout::corpus_file(ws, b).string());
      }
      require_file("run", layout::variants_file(ws, b));
      const auto qs = load_records<Question>(layout::corpus_file(ws, b));
      const auto vs = load_records<Variant>(layout::variants_file(ws, b));
      for (Scaffold s : m.scaffolds) {
        Cell cell;
        cell.model_id = m.model_id;
        cell.family = m.family;
        cell.benchmark = b;
        cell.scaffold = s;
        auto spec = runner::default_spec(s);
        if (auto it = cfg.max_steps.find(s); it != cfg.max_steps.end()) spec.max_steps = it->second;
        runner::RunResources res;
        res.prompt = PromptTemplate::load(cfg.prompt_dir, spec.prompt_template_ref);
        res.lookup = &lookup;
        const std::uint64_t seed = derive_seed(cfg.seed, cell.key());
        auto result = runner::run_cell(cell, qs, vs, spec, res, adapter, seed, cfg.max_concurrency);
        cell.accuracy = result.accuracy;
        save_records(layout::trajectory_file(ws, cell.key(), true), result.originals);
        save_records(layout::trajectory_file(ws, cell.key(), false), result.variants);
        log.push_back("run: " + cell.key() + ": " +
                      std::to_string(result.originals.size() + result.variants.size()) +
                      " trajectories, " + std::to_string(result.failed) + " failed");
        cells.push_back(cell);
      }
    }
  }
  save_records(layout::cells_file(ws), cells);
}

void probe(const Config&, const fs::path& ws, const ProbeOptions& options, Log& log) {
  require_file("probe", options.panel);
  const auto panel = load_records<CellMetrics>(options.panel);
  const auto prior = probe::panel_prior(panel, options.source, options.proxy);
  if (!prior) throw StageError("probe", "panel metrics hold no defined delta");

  if (!options.calibration.empty()) {
    require_file("probe", layout::cells_file(options.calibration));
    const auto cells = load_records<Cell>(layout::cells_file(options.calibration));
    std::vector<Variant> variants;
    for (Benchmark b : kBenchmarks) {
      const auto f = layout::variants_file(options.calibration, b);
      if (fs::exists(f)) load_records(f, variants);
    }
    std::vector<probe::CalibrationCell> cal;
    for (const auto& c : cells) {
      const auto key = c.key();
      require_file("probe", layout::trajectory_file(options.calibration, key, true));
      require_file("probe", layout::trajectory_file(options.calibration, key, false));
      cal.push_back({c, metrics::CellTrajectories::from(
                            load_records<Trajectory>(layout::trajectory_file(options.calibration, key, true)),
                            load_records<Trajectory>(layout::trajectory_file(options.calibration, key, false)))});
    }
    probe::CalibrationSpec spec;
    spec.lambda = options.lambda;
    std::vector<probe::ProbeEstimate> est;
    try {
      est = probe::estimate_delta(cal, variants, *prior, spec);
    } catch (const ConfigError& e) {
      throw StageError("probe", e.what());
    }
    for (const auto& e : est) {
      log.push_back("probe: " + e.cell_key + ": estimate " + std::to_string(e.estimate) + " pp" +
                    (e.low_confidence ? " (low confidence)" : ""));
    }
    save_records(files::probe_estimates(ws), est);
  }

  std::vector<ResultRow> rows;
  try {
    probe::LomoOptions lo;
    lo.source = options.source;
    lo.proxy = options.proxy;
    lo.lambda = options.lambda;
    const auto r = probe::evaluate_lomo(panel, lo);
    for (const auto& [method, value] : std::vector<std::pair<std::string, double>>{
             {"mae_pp", r.mae}, {"sign_accuracy", r.sign_accuracy},
             {"trivial_sign_accuracy", r.trivial_sign_accuracy}}) {
      ResultRow row;
      row.section = "lomo";
      row.scope = "panel";
      row.method = method;
      row.estimate = value;
      row.n = static_cast<long>(r.n);
      rows.push_back(row);
    }
    log.push_back("probe: LOMO MAE " + std::to_string(r.mae) + " pp, sign accuracy " +
                  std::to_string(r.sign_accuracy));
  } catch (const ConfigError& e) {
    log.push_back(std::string("probe: LOMO skipped: ") + e.what());
  }
  save_records(files::lomo(ws), rows);
}

}  // namespace agentdiff::pipeline
