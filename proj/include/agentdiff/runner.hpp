#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agentdiff/chat.hpp"
#include "agentdiff/corpus.hpp"
#include "agentdiff/error.hpp"

namespace agentdiff::runner {

struct ScaffoldSpec {
  Scaffold scaffold = Scaffold::cot;
  // cot/direct: parsed reasoning lines; react: thought/action/observation rounds.
  int max_steps = 16;
  std::vector<std::string> tool_set;  // react only
  std::string prompt_template_ref;
  std::string answer_marker = "Answer:";
};

// Defaults: cot 16 lines, direct 1, react 8 rounds with calculate/lookup/finish.
ScaffoldSpec default_spec(Scaffold scaffold);

// Lines shorter than this are merged into the previous CoT step.
inline constexpr std::size_t kMinStepChars = 20;

// Splits a CoT completion into steps on line boundaries.
std::vector<Step> segment_cot(const std::string& completion);

// Text after the last occurrence of `marker` (case-insensitive) up to the end
// of that line, trimmed. Empty when the marker is absent.
std::string extract_answer(const std::string& completion, const std::string& marker);

// + - * / ^ and parentheses over decimals. nullopt on a syntax error or
// division by zero.
std::optional<double> evaluate_arithmetic(std::string_view expr);

// Renders a calculator result: integers without a fractional part.
std::string format_number(double v);

class LookupTool {
 public:
  virtual ~LookupTool() = default;
  virtual std::optional<std::string> lookup(const Question& question,
                                            const std::string& title) const = 0;
};

// Looks titles up among the question's "para:<title>" meta entries.
class OfflineParagraphLookup : public LookupTool {
 public:
  std::optional<std::string> lookup(const Question& question,
                                    const std::string& title) const override;
};

// Scripted backend. Outputs are looked up, first match wins, under
//   "<model>|<subject>", "<subject>", "<question>::<operator>", "<question>",
//   "default"
// where <subject> is the full subject id and <question>/<operator> are its
// leading "::" components. Each entry is a list of per-round outputs; rounds
// past the end repeat the last one. Subjects listed under "fail" throw
// AdapterError on every call.
class MockChatModel : public ChatModel {
 public:
  MockChatModel(std::string model_id, std::map<std::string, std::vector<std::string>> script,
                std::vector<std::string> failing = {})
      : model_id_(std::move(model_id)), script_(std::move(script)), failing_(std::move(failing)) {}
  // JSON file {"outputs": {key: [round0, round1, ...] | "text"}, "fail": [ids]}.
  static std::unique_ptr<MockChatModel> load(const std::filesystem::path& path,
                                             const std::string& model_id);

  std::string label() const override { return "mock:" + model_id_; }
  std::string complete(const ChatRequest& request, const CallContext& context) override;

 private:
  std::string model_id_;
  std::map<std::string, std::vector<std::string>> script_;
  std::vector<std::string> failing_;
};

// Recorded trajectories keyed by (cell_key, subject_id).
class ReplayStore {
 public:
  // Loads every traj/<cell>/{orig,var}.tj under a workspace root.
  static ReplayStore load(const std::filesystem::path& root);
  void add(Trajectory t);
  // Throws ReplayMiss when the key was never recorded.
  const Trajectory& get(const std::string& cell_key, const std::string& subject_id) const;
  std::size_t size() const { return store_.size(); }

 private:
  std::map<std::pair<std::string, std::string>, Trajectory> store_;
};

struct AgentAdapter {
  enum class Kind { http, replay, mock };
  Kind kind = Kind::mock;
  ChatModel* model = nullptr;          // http and mock
  const ReplayStore* replay = nullptr;  // replay
  int retries = 2;
  int backoff_ms = 250;  // doubled on each retry
  // Wall-clock timestamps are recorded only when set; mock runs stay
  // byte-reproducible.
  bool record_timestamps = false;
};

struct Subject {
  std::string id;
  std::string text;
  bool is_original = true;
  const Question* question = nullptr;  // owning question, for tools
};

struct RunResources {
  PromptTemplate prompt;
  const LookupTool* lookup = nullptr;
};

Trajectory run_trajectory(const Cell& cell, const Subject& subject, const ScaffoldSpec& spec,
                          const RunResources& resources, const AgentAdapter& adapter,
                          std::uint64_t seed);

struct CellRun {
  std::vector<Trajectory> originals;  // sorted by subject id
  std::vector<Trajectory> variants;   // sorted by subject id
  std::optional<double> accuracy;     // over successful originals
  std::size_t failed = 0;
};

// One trajectory per original and per judge-passing variant of those
// originals. At most `max_concurrency` subjects are in flight; the result
// does not depend on scheduling.
CellRun run_cell(const Cell& cell, const std::vector<Question>& questions,
                 const std::vector<Variant>& variants, const ScaffoldSpec& spec,
                 const RunResources& resources, const AgentAdapter& adapter, std::uint64_t seed,
                 int max_concurrency);

}  // namespace agentdiff::runner
