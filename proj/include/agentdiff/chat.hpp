#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace agentdiff {

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 512;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> stop;
};

// Per-call context so scripted backends can tell subjects and rounds apart.
struct CallContext {
  std::string subject_id;
  int round = 0;
};

// Anything that turns a message list into assistant text: HTTP endpoints,
// scripted mocks. Implementations throw AdapterError on transport failure.
class ChatModel {
 public:
  virtual ~ChatModel() = default;
  virtual std::string label() const = 0;
  virtual std::string complete(const ChatRequest& request, const CallContext& context) = 0;
};

// A versioned text template with {name} placeholders.
class PromptTemplate {
 public:
  PromptTemplate() = default;
  PromptTemplate(std::string id, std::string body) : id_(std::move(id)), body_(std::move(body)) {}

  // Loads <dir>/<name>.txt; the id is the file stem (e.g. "paraphrase.v1").
  static PromptTemplate load(const std::filesystem::path& dir, const std::string& name);

  const std::string& id() const { return id_; }
  const std::string& body() const { return body_; }
  // Unknown placeholders are left in place.
  std::string render(const std::map<std::string, std::string>& values) const;

 private:
  std::string id_;
  std::string body_;
};

// Directory holding the shipped prompt templates.
std::filesystem::path default_prompt_dir();
// Directory holding shipped data tables (lexicon, distractor pool, keywords).
std::filesystem::path default_data_dir();

}  // namespace agentdiff
