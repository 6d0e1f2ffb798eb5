#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "agentdiff/error.hpp"
#include "agentdiff/pipeline.hpp"

namespace ad = agentdiff;
namespace pl = agentdiff::pipeline;

namespace {

void print(const pl::Log& log) {
  for (const auto& line : log) std::cerr << line << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"agentdiff: perturbation-consistency measurement for LLM agents"};
  app.require_subcommand(1);
  std::string config_path = "agentdiff.json";
  std::string workspace = ".";
  std::optional<std::uint64_t> seed;
  app.add_option("-c,--config", config_path, "Pipeline config file")->capture_default_str();
  app.add_option("-w,--workspace", workspace, "Workspace directory")->capture_default_str();
  app.add_option("--seed", seed, "Override the config seed");

  auto* ingest = app.add_subcommand("ingest", "Read benchmark dumps into corpus files");
  auto* perturb = app.add_subcommand("perturb", "Generate variants with the five operators");
  auto* judge = app.add_subcommand("judge", "Screen variants with the configured judges");
  auto* severity = app.add_subcommand("severity", "Score variants under the four severity proxies");
  auto* run = app.add_subcommand("run", "Run agent trajectories for every configured cell");

  auto* analyze = app.add_subcommand("analyze", "Compute metrics and statistics");
  pl::AnalyzeOptions aopt;
  std::string proxy = "edit_norm", align = "exact", cluster = "model", delta = "matched";
  analyze->add_option("--proxy", proxy, "Severity proxy for matched delta")
      ->check(CLI::IsMember({"edit_norm", "token_jaccard", "embed_cosine_dist", "length_ratio"}))
      ->capture_default_str();
  analyze->add_option("--align", align, "Alignment mode: exact or tfidf@<tau>")->capture_default_str();
  analyze->add_option("--cluster", cluster, "Cluster key for the regression")
      ->check(CLI::IsMember({"model", "family"}))
      ->capture_default_str();
  analyze->add_option("--delta", delta, "Delta used by regression, partition and LOMO")
      ->check(CLI::IsMember({"raw", "matched"}))
      ->capture_default_str();
  analyze->add_option("--bootstrap", aopt.bootstrap, "Wild bootstrap replicates")->capture_default_str();
  analyze->add_option("--hier-bootstrap", aopt.hierarchical_bootstrap, "Hierarchical bootstrap replicates")
      ->capture_default_str();
  analyze->add_option("--lambda", aopt.lambda, "Probe shrinkage weight")->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  auto* probe = app.add_subcommand("probe", "Estimate delta from a calibration run; LOMO evaluation");
  pl::ProbeOptions popt;
  std::string calibration, panel, pdelta = "raw", pproxy = "edit_norm";
  probe->add_option("--calibration", calibration, "Workspace holding the calibration run");
  probe->add_option("--panel", panel, "Panel metrics file")->required();
  probe->add_option("--lambda", popt.lambda, "Shrinkage weight toward the panel prior")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  probe->add_option("--delta", pdelta, "Delta source")->check(CLI::IsMember({"raw", "matched"}))->capture_default_str();
  probe->add_option("--proxy", pproxy, "Proxy when --delta matched")->capture_default_str();

  auto* report = app.add_subcommand("report", "Render report/ from the results file");

  auto* all = app.add_subcommand("pipeline", "ingest, perturb, judge, severity, run, analyze, report");

  CLI11_PARSE(app, argc, argv);

  std::string stage = app.get_subcommands().front()->get_name();
  pl::Log log;
  try {
    const pl::fs::path ws(workspace);
    auto load = [&] {
      auto cfg = pl::load_config(config_path);
      if (seed) {
        cfg.seed = *seed;
        for (auto& oc : cfg.operators) oc.seed = *seed;
      }
      return cfg;
    };
    auto analyze_options = [&](const pl::Config& cfg) {
      aopt.proxy = ad::parse_proxy(proxy);
      aopt.align = ad::divergence::AlignMode::parse(align);
      aopt.cluster = cluster == "model" ? ad::stats::ClusterKey::model : ad::stats::ClusterKey::family;
      aopt.source = delta == "raw" ? ad::stats::DeltaSource::raw : ad::stats::DeltaSource::matched;
      aopt.seed = cfg.seed;
      return aopt;
    };
    if (*ingest) {
      pl::ingest(load(), ws, log);
    } else if (*perturb) {
      pl::perturb_stage(load(), ws, log);
    } else if (*judge) {
      pl::judge(load(), ws, log);
    } else if (*severity) {
      pl::severity_stage(load(), ws, log);
    } else if (*run) {
      pl::run(load(), ws, log);
    } else if (*analyze) {
      const auto cfg = load();
      pl::analyze(cfg, ws, analyze_options(cfg), log);
    } else if (*probe) {
      popt.calibration = calibration;
      popt.panel = panel;
      popt.source = pdelta == "raw" ? ad::stats::DeltaSource::raw : ad::stats::DeltaSource::matched;
      popt.proxy = ad::parse_proxy(pproxy);
      pl::Config cfg;
      pl::probe(cfg, ws, popt, log);
    } else if (*report) {
      pl::report(ws, log);
    } else if (*all) {
      const auto cfg = load();
      stage = "ingest";
      pl::ingest(cfg, ws, log);
      stage = "perturb";
      pl::perturb_stage(cfg, ws, log);
      stage = "judge";
      pl::judge(cfg, ws, log);
      stage = "severity";
      pl::severity_stage(cfg, ws, log);
      stage = "run";
      pl::run(cfg, ws, log);
      stage = "analyze";
      pl::analyze(cfg, ws, analyze_options(cfg), log);
      stage = "report";
      pl::report(ws, log);
    }
  } catch (const pl::StageError& e) {
    print(log);
    std::cerr << "agentdiff " << e.stage() << ": error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    print(log);
    std::cerr << "agentdiff " << stage << ": error: " << e.what() << "\n";
    return 2;
  }
  print(log);
  return 0;
}
