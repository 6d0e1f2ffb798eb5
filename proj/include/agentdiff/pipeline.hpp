#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agentdiff/analysis_records.hpp"
#include "agentdiff/corpus.hpp"
#include "agentdiff/divergence.hpp"
#include "agentdiff/http.hpp"
#include "agentdiff/metrics.hpp"
#include "agentdiff/perturb.hpp"
#include "agentdiff/runner.hpp"
#include "agentdiff/stats.hpp"

namespace agentdiff::pipeline {

namespace fs = std::filesystem;

struct BenchmarkSource {
  Benchmark benchmark = Benchmark::gsm8k;
  fs::path path;
  std::size_t limit = 50;
};

struct AdapterConfig {
  runner::AgentAdapter::Kind kind = runner::AgentAdapter::Kind::mock;
  std::string endpoint;  // http
  fs::path script;       // mock
  fs::path replay_root;  // replay
};

struct ModelConfig {
  std::string model_id;
  std::string family;
  std::vector<Benchmark> benchmarks;
  std::vector<Scaffold> scaffolds;
  AdapterConfig adapter;
};

// Pipeline-wide configuration (JSON; format in docs/config.md). Relative
// paths resolve against the config file's directory. Secrets never appear
// here: endpoints name the environment variable that holds their key.
struct Config {
  fs::path base_dir;
  std::uint64_t seed = 0;
  std::vector<BenchmarkSource> benchmarks;

  int samples_per_operator = 1;
  std::vector<perturb::OperatorConfig> operators;
  // Meaning-bearing operator -> endpoint label or "lexicon".
  std::map<Operator, std::string> generators{{Operator::paraphrase, ""},
                                             {Operator::synonym, "lexicon"}};
  fs::path lexicon;
  fs::path distractor_pool;

  std::map<std::string, EndpointConfig> endpoints;
  std::map<std::string, fs::path> mock_endpoints;  // label -> mock script
  std::vector<std::string> judges{"rules"};  // first is primary
  std::string judge_prompt = "judge_equivalence.v1";

  std::vector<ModelConfig> models;
  int max_concurrency = 4;
  int retries = 2;
  int backoff_ms = 250;
  std::map<Scaffold, int> max_steps;

  std::string embedder = "hash";  // "hash" or an endpoint label
  std::size_t embed_dimension = 256;
  std::optional<fs::path> embed_cache;

  int n_bins = 10;
  metrics::TractabilityRules tractability;
  metrics::TierRules tiers;

  // Label -> metrics file of a workspace built with another generator.
  std::map<std::string, fs::path> generator_swaps;

  fs::path prompt_dir;
  fs::path data_dir;
};

Config load_config(const fs::path& path);

// Chat backend for an endpoint label: {"mock": script} endpoints give a
// scripted model, anything else an HTTP client.
std::unique_ptr<ChatModel> make_chat_model(const Config& cfg, const std::string& label,
                                           const std::string& model_id);
Config parse_config(const nlohmann::json& j, const fs::path& base_dir);

// Error tagged with the stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error(stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

using Log = std::vector<std::string>;

void ingest(const Config& cfg, const fs::path& ws, Log& log);
void perturb_stage(const Config& cfg, const fs::path& ws, Log& log);
void judge(const Config& cfg, const fs::path& ws, Log& log);
void severity_stage(const Config& cfg, const fs::path& ws, Log& log);
void run(const Config& cfg, const fs::path& ws, Log& log);

struct AnalyzeOptions {
  Proxy proxy = Proxy::edit_norm;
  divergence::AlignMode align = divergence::AlignMode::exact();
  stats::ClusterKey cluster = stats::ClusterKey::model;
  stats::DeltaSource source = stats::DeltaSource::matched;
  std::size_t bootstrap = 10000;
  std::size_t hierarchical_bootstrap = 5000;
  std::uint64_t seed = 0;
  double lambda = 0.25;
};

// Writes metrics/cells.cm, metrics/strata.rs, analysis/propagation.pd and
// analysis/results.rs.
void analyze(const Config& cfg, const fs::path& ws, const AnalyzeOptions& options, Log& log);

// Renders report/ from analysis/results.rs alone.
void report(const fs::path& ws, Log& log);

struct ProbeOptions {
  fs::path calibration;  // workspace holding the calibration run
  fs::path panel;        // metrics file of the panel
  double lambda = 0.25;
  stats::DeltaSource source = stats::DeltaSource::raw;
  Proxy proxy = Proxy::edit_norm;
};

// Writes probe/estimates.pe and probe/lomo.rs under `ws`.
void probe(const Config& cfg, const fs::path& ws, const ProbeOptions& options, Log& log);

// Workspace files beyond the corpus layout.
namespace files {
fs::path results(const fs::path& ws);
fs::path strata(const fs::path& ws);
fs::path probe_estimates(const fs::path& ws);
fs::path lomo(const fs::path& ws);
fs::path report_dir(const fs::path& ws);
}  // namespace files

// Throws StageError naming `path` when it does not exist.
void require_file(const std::string& stage, const fs::path& path);

}  // namespace agentdiff::pipeline
