#include <gtest/gtest.h>

#include <map>

#include "agentdiff/pipeline.hpp"
#include "agentdiff/records.hpp"
#include "test_util.hpp"

using namespace agentdiff;
namespace pl = agentdiff::pipeline;
namespace fs = std::filesystem;

namespace {

const fs::path kMockConfig = fs::path(AGENTDIFF_SOURCE_DIR) / "fixtures/mock/config.json";

pl::AnalyzeOptions fast_options(std::uint64_t seed) {
  pl::AnalyzeOptions o;
  o.bootstrap = 199;
  o.hierarchical_bootstrap = 199;
  o.seed = seed;
  return o;
}

void run_all(const pl::Config& cfg, const fs::path& ws) {
  pl::Log log;
  pl::ingest(cfg, ws, log);
  pl::perturb_stage(cfg, ws, log);
  pl::judge(cfg, ws, log);
  pl::severity_stage(cfg, ws, log);
  pl::run(cfg, ws, log);
  pl::analyze(cfg, ws, fast_options(cfg.seed), log);
  pl::report(ws, log);
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = testutil::read_file(e.path());
  }
  return out;
}

}  // namespace

TEST(Pipeline, MockRunIsByteIdenticalAcrossRuns) {
  const auto cfg = pl::load_config(kMockConfig);
  testutil::TempDir a("pipe-a"), b("pipe-b");
  run_all(cfg, a.path());
  run_all(cfg, b.path());
  const auto sa = snapshot(a.path());
  const auto sb = snapshot(b.path());
  ASSERT_FALSE(sa.empty());
  ASSERT_EQ(sa.size(), sb.size());
  for (const auto& [name, content] : sa) {
    ASSERT_TRUE(sb.count(name)) << name;
    EXPECT_EQ(content, sb.at(name)) << name;
  }
  EXPECT_TRUE(fs::exists(pl::files::results(a.path())));
  EXPECT_TRUE(fs::exists(pl::files::report_dir(a.path())));
}

TEST(Pipeline, MissingUpstreamNamesPath) {
  const auto cfg = pl::load_config(kMockConfig);
  testutil::TempDir ws("pipe-empty");
  pl::Log log;
  try {
    pl::analyze(cfg, ws.path(), fast_options(0), log);
    FAIL() << "expected StageError";
  } catch (const pl::StageError& e) {
    EXPECT_EQ(e.stage(), "analyze");
    EXPECT_NE(std::string(e.what()).find(ws.path().string()), std::string::npos) << e.what();
  }
  EXPECT_THROW(pl::run(cfg, ws.path(), log), pl::StageError);
  EXPECT_THROW(pl::report(ws.path(), log), pl::StageError);
}

TEST(Config, RelativePathsResolveAgainstConfigDir) {
  const auto cfg = pl::load_config(kMockConfig);
  const auto dir = kMockConfig.parent_path();
  ASSERT_EQ(cfg.benchmarks.size(), 3u);
  EXPECT_EQ(fs::weakly_canonical(cfg.benchmarks[0].path), fs::weakly_canonical(dir / "gsm8k.jsonl"));
  EXPECT_EQ(cfg.benchmarks[0].limit, 5u);
  EXPECT_EQ(cfg.models.size(), 3u);
  EXPECT_EQ(fs::weakly_canonical(cfg.mock_endpoints.at("paraphraser")),
            fs::weakly_canonical(dir / "paraphraser.json"));
  EXPECT_EQ(cfg.seed, 20240607u);
}

TEST(Config, EndpointKeyComesFromEnvironmentName) {
  nlohmann::json j = {{"endpoints", {{"remote", {{"base_url", "http://127.0.0.1:9"},
                                                 {"model", "m"},
                                                 {"api_key_env", "AGENTDIFF_TEST_KEY"}}}}}};
  const auto cfg = pl::parse_config(j, "/tmp");
  EXPECT_EQ(cfg.endpoints.at("remote").api_key_env, "AGENTDIFF_TEST_KEY");
  EXPECT_EQ(cfg.endpoints.at("remote").model, "m");
}

TEST(Config, InlineSecretRejected) {
  for (const char* field : {"api_key", "token"}) {
    nlohmann::json j = {{"endpoints", {{"remote", {{"base_url", "http://127.0.0.1:9"},
                                                   {"model", "m"},
                                                   {field, "sk-literal"}}}}}};
    EXPECT_THROW(pl::parse_config(j, "/tmp"), ConfigError) << field;
  }
}

TEST(Config, MissingFileIsConfigError) {
  EXPECT_THROW(pl::load_config("/nonexistent/agentdiff.json"), Error);
}
