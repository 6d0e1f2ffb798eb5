#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "agentdiff/chat.hpp"
#include "agentdiff/severity.hpp"
#include "json.hpp"

namespace agentdiff {

struct EndpointConfig {
  // e.g. "http://localhost:11434/v1"
  std::string base_url;
  std::string model;
  // Name of the environment variable holding the API key; empty for none.
  std::string api_key_env;
  std::chrono::seconds timeout{120};
};

EndpointConfig endpoint_from_json(const nlohmann::json& j);

// Chat-completion wire format: POST {base}/chat/completions with
// {"model", "messages", "temperature", "max_tokens", "seed"?, "stop"?};
// the reply is choices[0].message.content.
nlohmann::json chat_request_body(const EndpointConfig& endpoint, const ChatRequest& request);
std::string parse_chat_response(const std::string& body);

class HttpChatModel : public ChatModel {
 public:
  explicit HttpChatModel(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) {}
  std::string label() const override { return endpoint_.model + "@" + endpoint_.base_url; }
  std::string complete(const ChatRequest& request, const CallContext& context) override;

 private:
  EndpointConfig endpoint_;
};

// Embedding wire format: POST {base}/embeddings with {"model", "input"}; the
// reply is data[0].embedding. The dimension is fixed per provider.
class HttpEmbedder : public severity::EmbeddingProvider {
 public:
  HttpEmbedder(EndpointConfig endpoint, std::size_t dimension)
      : endpoint_(std::move(endpoint)), dimension_(dimension) {}
  std::string id() const override { return "http:" + endpoint_.model; }
  std::size_t dimension() const override { return dimension_; }
  std::vector<double> embed(std::string_view text) override;

 private:
  EndpointConfig endpoint_;
  std::size_t dimension_;
};

}  // namespace agentdiff
