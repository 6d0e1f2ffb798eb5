#include "agentdiff/chat.hpp"

#include <fstream>
#include <sstream>

#include "agentdiff/error.hpp"

#ifndef AGENTDIFF_SOURCE_DIR
#define AGENTDIFF_SOURCE_DIR "."
#endif

namespace agentdiff {

PromptTemplate PromptTemplate::load(const std::filesystem::path& dir, const std::string& name) {
  const auto path = dir / (name + ".txt");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("prompt template not found: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return PromptTemplate(name, buf.str());
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
  std::string out;
  out.reserve(body_.size());
  std::size_t i = 0;
  while (i < body_.size()) {
    if (body_[i] == '{') {
      const auto close = body_.find('}', i + 1);
      if (close != std::string::npos) {
        auto it = values.find(body_.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(body_[i++]);
  }
  return out;
}

std::filesystem::path default_prompt_dir() {
  if (const char* env = std::getenv("AGENTDIFF_PROMPT_DIR")) return env;
  return std::filesystem::path(AGENTDIFF_SOURCE_DIR) / "prompts";
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("AGENTDIFF_DATA_DIR")) return env;
  return std::filesystem::path(AGENTDIFF_SOURCE_DIR) / "data";
}

}  // namespace agentdiff
