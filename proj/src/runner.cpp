#include "agentdiff/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <thread>

#include "agentdiff/error.hpp"
#include "agentdiff/perturb.hpp"
#include "agentdiff/records.hpp"
#include "agentdiff/rng.hpp"
#include "agentdiff/text.hpp"
#include "json.hpp"

namespace agentdiff::runner {

ScaffoldSpec default_spec(Scaffold scaffold) {
  ScaffoldSpec s;
  s.scaffold = scaffold;
  switch (scaffold) {
    case Scaffold::cot:
      s.max_steps = 16;
      s.prompt_template_ref = "cot.v1";
      break;
    case Scaffold::direct:
      s.max_steps = 1;
      s.prompt_template_ref = "direct.v1";
      break;
    case Scaffold::react:
      s.max_steps = 8;
      s.tool_set = {"calculate", "lookup", "finish"};
      s.prompt_template_ref = "react.v1";
      break;
  }
  return s;
}

std::vector<Step> segment_cot(const std::string& completion) {
  std::vector<Step> steps;
  for (const auto& raw : text::split_lines(completion)) {
    const std::string line = text::collapse_whitespace(raw);
    if (line.empty()) continue;
    if (!steps.empty() && text::char_length(line) < kMinStepChars) {
      steps.back().thought += " " + line;
      continue;
    }
    Step s;
    s.index = static_cast<int>(steps.size()) + 1;
    s.thought = line;
    steps.push_back(std::move(s));
  }
  return steps;
}

std::string extract_answer(const std::string& completion, const std::string& marker) {
  if (marker.empty()) return "";
  const std::string low = text::to_lower_ascii(completion);
  const auto at = low.rfind(text::to_lower_ascii(marker));
  if (at == std::string::npos) return "";
  const auto begin = at + marker.size();
  const auto nl = completion.find('\n', begin);
  return text::trim(completion.substr(begin, nl == std::string::npos ? std::string::npos : nl - begin));
}

namespace {

class ExprParser {
 public:
  explicit ExprParser(std::string_view s) : s_(s) {}

  std::optional<double> parse() {
    auto v = sum();
    skip();
    if (!v || pos_ != s_.size()) return std::nullopt;
    return v;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  std::optional<double> sum() {
    auto v = product();
    while (v) {
      if (eat('+')) {
        auto r = product();
        if (!r) return std::nullopt;
        *v += *r;
      } else if (eat('-')) {
        auto r = product();
        if (!r) return std::nullopt;
        *v -= *r;
      } else {
        break;
      }
    }
    return v;
  }
  std::optional<double> product() {
    auto v = power();
    while (v) {
      if (eat('*') || eat('x')) {
        auto r = power();
        if (!r) return std::nullopt;
        *v *= *r;
      } else if (eat('/')) {
        auto r = power();
        if (!r || *r == 0.0) return std::nullopt;
        *v /= *r;
      } else {
        break;
      }
    }
    return v;
  }
  std::optional<double> power() {
    auto base = unary();
    if (base && eat('^')) {
      auto e = power();
      if (!e) return std::nullopt;
      return std::pow(*base, *e);
    }
    return base;
  }
  std::optional<double> unary() {
    if (eat('-')) {
      auto v = unary();
      if (v) *v = -*v;
      return v;
    }
    if (eat('+')) return unary();
    return atom();
  }
  std::optional<double> atom() {
    if (eat('(')) {
      auto v = sum();
      if (!v || !eat(')')) return std::nullopt;
      return v;
    }
    skip();
    const std::size_t start = pos_;
    std::string digits;
    while (pos_ < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' || s_[pos_] == ',')) {
      if (s_[pos_] != ',') digits.push_back(s_[pos_]);
      ++pos_;
    }
    if (pos_ == start || digits.empty() || digits == ".") return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(digits.c_str(), &end);
    if (*end != '\0') return std::nullopt;
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string complete_with_retry(const AgentAdapter& adapter, const ChatRequest& req,
                                const CallContext& ctx) {
  int delay = adapter.backoff_ms;
  for (int attempt = 0;; ++attempt) {
    try {
      return adapter.model->complete(req, ctx);
    } catch (const AdapterError&) {
      if (attempt >= adapter.retries) throw;
      if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      delay *= 2;
    }
  }
}

struct ParsedTurn {
  std::string thought;
  std::string action;  // full "name[arg]" text
  std::string name;
  std::string arg;
};

ParsedTurn parse_react_turn(const std::string& output) {
  ParsedTurn t;
  for (const auto& raw : text::split_lines(output)) {
    const std::string line = text::trim(raw);
    if (t.action.empty() && text::starts_with_ci(line, "thought:")) {
      t.thought = text::trim(line.substr(8));
    } else if (t.action.empty() && text::starts_with_ci(line, "action:")) {
      t.action = text::trim(line.substr(7));
    } else if (t.action.empty() && t.thought.empty() && !line.empty()) {
      t.thought = line;
    }
  }
  const auto open = t.action.find('[');
  const auto close = t.action.rfind(']');
  if (open != std::string::npos && close != std::string::npos && close > open) {
    t.name = text::to_lower_ascii(text::trim(t.action.substr(0, open)));
    t.arg = text::trim(t.action.substr(open + 1, close - open - 1));
  }
  return t;
}

}  // namespace

std::optional<double> evaluate_arithmetic(std::string_view expr) {
  auto v = ExprParser(expr).parse();
  if (v && !std::isfinite(*v)) return std::nullopt;
  return v;
}

std::string format_number(double v) {
  if (std::abs(v) < 1e15 && v == std::round(v)) {
    return std::to_string(static_cast<long long>(std::llround(v)));
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::optional<std::string> OfflineParagraphLookup::lookup(const Question& question,
                                                          const std::string& title) const {
  const std::string want = text::to_lower_ascii(text::trim(title));
  for (const auto& [k, v] : question.meta) {
    if (k.rfind("para:", 0) == 0 && text::to_lower_ascii(k.substr(5)) == want) return v;
  }
  return std::nullopt;
}

// --- mock ---------------------------------------------------------------------

std::unique_ptr<MockChatModel> MockChatModel::load(const std::filesystem::path& path,
                                                   const std::string& model_id) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mock script " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("mock script " + path.string() + ": " + e.what());
  }
  std::map<std::string, std::vector<std::string>> script;
  const auto outputs = j.value("outputs", nlohmann::json::object());
  for (const auto& [k, v] : outputs.items()) {
    if (v.is_string()) {
      script[k] = {v.get<std::string>()};
    } else if (v.is_array()) {
      script[k] = v.get<std::vector<std::string>>();
    } else {
      throw ConfigError("mock script " + path.string() + ": bad entry '" + k + "'");
    }
  }
  std::vector<std::string> failing;
  if (j.contains("fail")) failing = j["fail"].get<std::vector<std::string>>();
  return std::make_unique<MockChatModel>(model_id, std::move(script), std::move(failing));
}

std::string MockChatModel::complete(const ChatRequest&, const CallContext& ctx) {
  const std::string& id = ctx.subject_id;
  if (std::find(failing_.begin(), failing_.end(), id) != failing_.end()) {
    throw AdapterError("scripted failure for " + id);
  }
  std::vector<std::string> keys{model_id_ + "|" + id, id};
  const auto first = id.find("::");
  if (first != std::string::npos) {
    const std::string qid = id.substr(0, first);
    const auto second = id.find("::", first + 2);
    const std::string op = id.substr(first + 2, second == std::string::npos ? std::string::npos
                                                                           : second - first - 2);
    keys.push_back(model_id_ + "|" + qid + "::" + op);
    keys.push_back(qid + "::" + op);
    keys.push_back(model_id_ + "|" + qid);
    keys.push_back(qid);
  }
  keys.push_back(model_id_ + "|default");
  keys.push_back("default");
  for (const auto& k : keys) {
    auto it = script_.find(k);
    if (it == script_.end() || it->second.empty()) continue;
    const auto& rounds = it->second;
    return rounds[std::min<std::size_t>(static_cast<std::size_t>(std::max(ctx.round, 0)), rounds.size() - 1)];
  }
  throw AdapterError("mock script has no entry for " + id);
}

// --- replay -------------------------------------------------------------------

ReplayStore ReplayStore::load(const std::filesystem::path& root) {
  ReplayStore store;
  const auto dir = root / "traj";
  if (!std::filesystem::is_directory(dir)) throw Error("no trajectory directory at " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".tj") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    for (auto& t : load_records<Trajectory>(f)) store.add(std::move(t));
  }
  return store;
}

void ReplayStore::add(Trajectory t) {
  auto key = std::make_pair(t.cell_key, t.subject_id);
  store_[std::move(key)] = std::move(t);
}

const Trajectory& ReplayStore::get(const std::string& cell_key,
                                   const std::string& subject_id) const {
  auto it = store_.find({cell_key, subject_id});
  if (it == store_.end()) throw ReplayMiss("no recorded trajectory for " + cell_key + " / " + subject_id);
  return it->second;
}

// --- execution ----------------------------------------------------------------

Trajectory run_trajectory(const Cell& cell, const Subject& subject, const ScaffoldSpec& spec,
                          const RunResources& resources, const AgentAdapter& adapter,
                          std::uint64_t seed) {
  if (spec.max_steps < 1) throw ConfigError("max_steps must be at least 1");
  const std::string cell_key = cell.key();
  if (adapter.kind == AgentAdapter::Kind::replay) {
    if (!adapter.replay) throw ConfigError("replay adapter without a store");
    return adapter.replay->get(cell_key, subject.id);
  }
  if (!adapter.model) throw ConfigError("adapter has no chat model");

  Trajectory t;
  t.cell_key = cell_key;
  t.subject_id = subject.id;
  t.is_original = subject.is_original;
  t.run_meta.seed = seed;
  t.run_meta.endpoint = adapter.model->label();
  if (adapter.record_timestamps) t.run_meta.timestamp = now_utc();

  ChatRequest req;
  req.seed = seed;
  try {
    if (spec.scaffold != Scaffold::react) {
      req.messages.push_back({"user", resources.prompt.render({{"question", subject.text}})});
      const std::string out = complete_with_retry(adapter, req, {subject.id, 0});
      if (spec.scaffold == Scaffold::direct) {
        Step s;
        s.thought = text::collapse_whitespace(out);
        t.steps.push_back(s);
        std::string ans = extract_answer(out, spec.answer_marker);
        t.final_answer = ans.empty() ? text::collapse_whitespace(out) : ans;
      } else {
        t.steps = segment_cot(out);
        if (t.steps.empty()) t.steps.push_back(Step{});
        if (static_cast<int>(t.steps.size()) > spec.max_steps) {
          t.steps.resize(static_cast<std::size_t>(spec.max_steps));
          t.hit_max_steps = true;
        }
        t.final_answer = extract_answer(out, spec.answer_marker);
      }
      return t;
    }

    req.stop = {"\nObservation:"};
    std::string history;
    for (int round = 0; round < spec.max_steps; ++round) {
      req.messages = {{"user", resources.prompt.render({{"question", subject.text},
                                                        {"history", history}})}};
      const std::string out = complete_with_retry(adapter, req, {subject.id, round});
      ParsedTurn turn = parse_react_turn(out);
      Step s;
      s.index = round + 1;
      s.thought = turn.thought;
      s.action = turn.action;
      const bool allowed = std::find(spec.tool_set.begin(), spec.tool_set.end(), turn.name) !=
                           spec.tool_set.end();
      if (turn.name == "finish" && allowed) {
        t.steps.push_back(s);
        t.final_answer = turn.arg;
        return t;
      }
      if (turn.action.empty()) {
        const std::string ans = extract_answer(out, spec.answer_marker);
        if (!ans.empty()) {
          s.action = "finish[" + ans + "]";
          t.steps.push_back(s);
          t.final_answer = ans;
          return t;
        }
        s.observation = "No action given.";
      } else if (!allowed) {
        s.observation = "Unknown or unavailable action '" + turn.name + "'.";
      } else if (turn.name == "calculate") {
        auto v = evaluate_arithmetic(turn.arg);
        s.observation = v ? format_number(*v) : "Error: could not evaluate expression.";
      } else if (turn.name == "lookup") {
        std::optional<std::string> para;
        if (resources.lookup && subject.question) para = resources.lookup->lookup(*subject.question, turn.arg);
        s.observation = para ? *para : "No paragraph titled '" + turn.arg + "'.";
      }
      history += "Thought: " + s.thought + "\nAction: " + s.action + "\nObservation: " +
                 s.observation + "\n";
      t.steps.push_back(std::move(s));
    }
    t.hit_max_steps = true;
    return t;
  } catch (const AdapterError&) {
    t.steps.clear();
    t.final_answer.clear();
    t.hit_max_steps = false;
    t.failed = true;
    return t;
  }
}

CellRun run_cell(const Cell& cell, const std::vector<Question>& questions,
                 const std::vector<Variant>& variants, const ScaffoldSpec& spec,
                 const RunResources& resources, const AgentAdapter& adapter, std::uint64_t seed,
                 int max_concurrency) {
  std::map<std::string, const Question*> by_id;
  for (const auto& q : questions) by_id[q.id] = &q;

  std::vector<Subject> subjects;
  for (const auto& q : questions) subjects.push_back({q.id, q.text, true, &q});
  for (const auto& v : variants) {
    auto it = by_id.find(v.question_id);
    if (it == by_id.end()) continue;
    if (!v.passes_judge()) continue;
    subjects.push_back({v.id, v.text, false, it->second});
  }

  std::vector<Trajectory> results(subjects.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < subjects.size(); i = next++) {
      results[i] = run_trajectory(cell, subjects[i], spec, resources, adapter,
                                  derive_seed(seed, subjects[i].id));
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, max_concurrency)), subjects.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  CellRun run;
  std::size_t ok = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    auto& t = results[i];
    if (t.failed) ++run.failed;
    if (subjects[i].is_original) {
      if (!t.failed) {
        ++ok;
        if (perturb::answers_equivalent(t.final_answer, subjects[i].question->gold_answer)) ++correct;
      }
      run.originals.push_back(std::move(t));
    } else {
      run.variants.push_back(std::move(t));
    }
  }
  auto by_subject = [](const Trajectory& a, const Trajectory& b) { return a.subject_id < b.subject_id; };
  std::sort(run.originals.begin(), run.originals.end(), by_subject);
  std::sort(run.variants.begin(), run.variants.end(), by_subject);
  if (ok > 0) run.accuracy = static_cast<double>(correct) / static_cast<double>(ok);
  return run;
}

}  // namespace agentdiff::runner
