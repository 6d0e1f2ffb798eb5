#include <fstream>

#include "agentdiff/error.hpp"
#include "agentdiff/pipeline.hpp"

namespace agentdiff::pipeline {

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

template <class T>
T opt(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

perturb::Casing parse_casing(const std::string& s) {
  if (s == "keep") return perturb::Casing::keep;
  if (s == "lower") return perturb::Casing::lower;
  if (s == "upper") return perturb::Casing::upper;
  if (s == "seeded") return perturb::Casing::seeded;
  throw ConfigError("unknown casing '" + s + "'");
}

perturb::ReorderUnit parse_unit(const std::string& s) {
  if (s == "sentence") return perturb::ReorderUnit::sentence;
  if (s == "clause") return perturb::ReorderUnit::clause;
  throw ConfigError("unknown reorder unit '" + s + "'");
}

AdapterConfig parse_adapter(const nlohmann::json& j, const fs::path& base) {
  AdapterConfig a;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "mock") {
    a.kind = runner::AgentAdapter::Kind::mock;
    a.script = resolve(base, j.at("script").get<std::string>());
  } else if (kind == "http") {
    a.kind = runner::AgentAdapter::Kind::http;
    a.endpoint = j.at("endpoint").get<std::string>();
  } else if (kind == "replay") {
    a.kind = runner::AgentAdapter::Kind::replay;
    a.replay_root = resolve(base, j.at("root").get<std::string>());
  } else {
    throw ConfigError("unknown adapter kind '" + kind + "'");
  }
  return a;
}

}  // namespace

Config parse_config(const nlohmann::json& j, const fs::path& base) {
  Config c;
  try {
    c.base_dir = base;
    c.seed = opt<std::uint64_t>(j, "seed", 0);
    c.prompt_dir = j.contains("prompt_dir") ? resolve(base, j["prompt_dir"].get<std::string>())
                                            : default_prompt_dir();
    c.data_dir = j.contains("data_dir") ? resolve(base, j["data_dir"].get<std::string>())
                                        : default_data_dir();

    for (const auto& b : j.value("benchmarks", nlohmann::json::array())) {
      BenchmarkSource s;
      s.benchmark = parse_benchmark(b.at("name").get<std::string>());
      s.path = resolve(base, b.at("path").get<std::string>());
      s.limit = opt<std::size_t>(b, "limit", 50);
      c.benchmarks.push_back(s);
    }

    const auto p = j.value("perturb", nlohmann::json::object());
    c.samples_per_operator = opt<int>(p, "samples_per_operator", 1);
    if (c.samples_per_operator < 1) throw ConfigError("samples_per_operator must be >= 1");
    c.lexicon = p.contains("lexicon") ? resolve(base, p["lexicon"].get<std::string>())
                                      : c.data_dir / "synonyms.tsv";
    c.distractor_pool = p.contains("distractor_pool")
                            ? resolve(base, p["distractor_pool"].get<std::string>())
                            : c.data_dir / "distractors.txt";
    const auto generators_obj = p.value("generators", nlohmann::json::object());
    for (const auto& [k, v] : generators_obj.items()) {
      const Operator op = parse_operator(k);
      if (side_of(op) != Side::meaning_bearing) {
        throw ConfigError("presentation operator '" + k + "' takes no generator");
      }
      c.generators[op] = v.get<std::string>();
    }
    std::vector<std::string> ops;
    if (p.contains("operators")) {
      ops = p["operators"].get<std::vector<std::string>>();
    } else {
      for (Operator o : kOperators) ops.emplace_back(to_string(o));
    }
    const auto fmt = p.value("format", nlohmann::json::object());
    for (const auto& name : ops) {
      perturb::OperatorConfig oc;
      oc.op = parse_operator(name);
      oc.seed = c.seed;
      oc.synonym_rate = opt<double>(p, "synonym_rate", 0.3);
      oc.reorder_unit = parse_unit(opt<std::string>(p, "reorder_unit", "sentence"));
      oc.format.casing = parse_casing(opt<std::string>(fmt, "casing", "seeded"));
      oc.format.collapse_whitespace = opt<bool>(fmt, "collapse_whitespace", true);
      oc.format.punctuation_spacing = opt<bool>(fmt, "punctuation_spacing", true);
      if (side_of(oc.op) == Side::meaning_bearing) oc.generator_ref = c.generators[oc.op];
      c.operators.push_back(oc);
    }

    const auto endpoints_obj = j.value("endpoints", nlohmann::json::object());
    for (const auto& [label, e] : endpoints_obj.items()) {
      if (e.contains("mock")) {
        c.mock_endpoints[label] = resolve(base, e["mock"].get<std::string>());
      } else {
        c.endpoints[label] = endpoint_from_json(e);
      }
    }
    if (j.contains("judges")) c.judges = j["judges"].get<std::vector<std::string>>();
    if (c.judges.empty()) throw ConfigError("at least one judge is required");
    c.judge_prompt = opt<std::string>(j, "judge_prompt", c.judge_prompt);

    for (const auto& m : j.value("models", nlohmann::json::array())) {
      ModelConfig mc;
      mc.model_id = m.at("id").get<std::string>();
      mc.family = opt<std::string>(m, "family", mc.model_id);
      for (const auto& b : m.at("benchmarks")) mc.benchmarks.push_back(parse_benchmark(b.get<std::string>()));
      for (const auto& s : m.at("scaffolds")) mc.scaffolds.push_back(parse_scaffold(s.get<std::string>()));
      mc.adapter = parse_adapter(m.at("adapter"), base);
      if (m.contains("tier")) c.tiers.overrides[mc.model_id] = parse_tier(m["tier"].get<std::string>());
      c.models.push_back(mc);
    }

    const auto r = j.value("runner", nlohmann::json::object());
    c.max_concurrency = opt<int>(r, "max_concurrency", 4);
    c.retries = opt<int>(r, "retries", 2);
    c.backoff_ms = opt<int>(r, "backoff_ms", 250);
    const auto max_steps_obj = r.value("max_steps", nlohmann::json::object());
    for (const auto& [k, v] : max_steps_obj.items()) {
      c.max_steps[parse_scaffold(k)] = v.get<int>();
    }

    const auto sv = j.value("severity", nlohmann::json::object());
    c.embedder = opt<std::string>(sv, "embedder", "hash");
    c.embed_dimension = opt<std::size_t>(sv, "dimension", 256);
    if (sv.contains("cache") && !sv["cache"].is_null()) c.embed_cache = resolve(base, sv["cache"].get<std::string>());

    const auto mt = j.value("metrics", nlohmann::json::object());
    c.n_bins = opt<int>(mt, "n_bins", 10);
    c.tractability = metrics::TractabilityRules::load(c.data_dir);
    c.tractability.min_numbers = opt<std::size_t>(mt, "min_numbers", 4);
    c.tractability.min_keywords = opt<std::size_t>(mt, "min_keywords", 2);
    c.tiers.capable_floor = opt<double>(mt, "capable_floor", 0.65);
    c.tiers.strong_floor = opt<double>(mt, "strong_floor", 0.75);
    const auto tier_overrides_obj = mt.value("tier_overrides", nlohmann::json::object());
    for (const auto& [k, v] : tier_overrides_obj.items()) {
      c.tiers.overrides[k] = parse_tier(v.get<std::string>());
    }

    const auto generator_swaps_obj = j.value("generator_swaps", nlohmann::json::object());
    for (const auto& [k, v] : generator_swaps_obj.items()) {
      c.generator_swaps[k] = resolve(base, v.get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

Config load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j, fs::absolute(path).parent_path());
}

std::unique_ptr<ChatModel> make_chat_model(const Config& cfg, const std::string& label,
                                           const std::string& model_id) {
  if (auto m = cfg.mock_endpoints.find(label); m != cfg.mock_endpoints.end()) {
    return runner::MockChatModel::load(m->second, model_id);
  }
  auto e = cfg.endpoints.find(label);
  if (e == cfg.endpoints.end()) throw ConfigError("unknown endpoint '" + label + "'");
  return std::make_unique<HttpChatModel>(e->second);
}

}  // namespace agentdiff::pipeline
