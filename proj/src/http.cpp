#include "agentdiff/http.hpp"

#include <cstdlib>

#include "agentdiff/error.hpp"
#include "httplib.h"

namespace agentdiff {

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

Url split_url(const std::string& base) {
  const auto scheme_end = base.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint base_url needs a scheme: " + base);
  const auto path_start = base.find('/', scheme_end + 3);
  Url u;
  u.origin = base.substr(0, path_start);
  u.prefix = path_start == std::string::npos ? "" : base.substr(path_start);
  while (!u.prefix.empty() && u.prefix.back() == '/') u.prefix.pop_back();
  return u;
}

nlohmann::json post_json(const EndpointConfig& endpoint, const std::string& route,
                         const nlohmann::json& body) {
  const Url url = split_url(endpoint.base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(endpoint.timeout);
  client.set_read_timeout(endpoint.timeout);
  client.set_write_timeout(endpoint.timeout);
  httplib::Headers headers;
  if (!endpoint.api_key_env.empty()) {
    const char* key = std::getenv(endpoint.api_key_env.c_str());
    if (!key) throw ConfigError("environment variable " + endpoint.api_key_env + " is not set");
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  auto res = client.Post(url.prefix + route, headers, body.dump(), "application/json");
  if (!res) {
    throw AdapterError(endpoint.base_url + route + ": " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw AdapterError(endpoint.base_url + route + ": HTTP " + std::to_string(res->status));
  }
  auto j = nlohmann::json::parse(res->body, nullptr, false);
  if (j.is_discarded()) throw AdapterError(endpoint.base_url + route + ": response is not JSON");
  return j;
}

}  // namespace

EndpointConfig endpoint_from_json(const nlohmann::json& j) {
  for (const char* field : {"api_key", "key", "token", "authorization"}) {
    if (j.contains(field)) {
      throw ConfigError(std::string("endpoint field '") + field +
                        "' is not allowed; put the variable name in 'api_key_env'");
    }
  }
  EndpointConfig e;
  e.base_url = j.at("base_url").get<std::string>();
  e.model = j.at("model").get<std::string>();
  e.api_key_env = j.value("api_key_env", std::string());
  e.timeout = std::chrono::seconds(j.value("timeout_s", 120));
  return e;
}

nlohmann::json chat_request_body(const EndpointConfig& endpoint, const ChatRequest& request) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  nlohmann::json body{{"model", endpoint.model},
                      {"messages", messages},
                      {"temperature", request.temperature},
                      {"max_tokens", request.max_tokens}};
  if (request.seed) body["seed"] = *request.seed;
  if (!request.stop.empty()) body["stop"] = request.stop;
  return body;
}

std::string parse_chat_response(const std::string& body) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw AdapterError("chat response is not JSON");
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_null()) return "";
    return content.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw AdapterError(std::string("chat response missing choices[0].message.content: ") + e.what());
  }
}

std::string HttpChatModel::complete(const ChatRequest& request, const CallContext&) {
  const auto reply = post_json(endpoint_, "/chat/completions", chat_request_body(endpoint_, request));
  return parse_chat_response(reply.dump());
}

std::vector<double> HttpEmbedder::embed(std::string_view text) {
  const auto reply = post_json(endpoint_, "/embeddings",
                               {{"model", endpoint_.model}, {"input", std::string(text)}});
  std::vector<double> v;
  try {
    v = reply.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw AdapterError(std::string("embedding response malformed: ") + e.what());
  }
  if (v.size() != dimension_) {
    throw AdapterError("embedding dimension " + std::to_string(v.size()) + " != expected " +
                       std::to_string(dimension_));
  }
  return v;
}

}  // namespace agentdiff
