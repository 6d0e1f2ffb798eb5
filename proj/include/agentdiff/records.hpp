#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "agentdiff/corpus.hpp"
#include "agentdiff/error.hpp"
#include "json.hpp"

namespace agentdiff {

inline constexpr int kSchemaVersion = 1;

template <class T>
struct RecordTraits;

template <>
struct RecordTraits<Question> {
  static constexpr std::string_view kind = "question";
  static std::string key(const Question& q) { return q.id; }
};
template <>
struct RecordTraits<Variant> {
  static constexpr std::string_view kind = "variant";
  static std::string key(const Variant& v) { return v.id; }
};
template <>
struct RecordTraits<Cell> {
  static constexpr std::string_view kind = "cell";
  static std::string key(const Cell& c) { return c.key(); }
};
template <>
struct RecordTraits<Trajectory> {
  static constexpr std::string_view kind = "trajectory";
  static std::string key(const Trajectory& t) { return t.cell_key + "\x1f" + t.subject_id; }
};
template <>
struct RecordTraits<CellMetrics> {
  static constexpr std::string_view kind = "cell_metrics";
  static std::string key(const CellMetrics& m) { return m.cell.key(); }
};
template <>
struct RecordTraits<JudgeDecision> {
  static constexpr std::string_view kind = "judge_decision";
  static std::string key(const JudgeDecision& d) { return d.variant_id + "\x1f" + d.judge_id; }
};

void to_json(nlohmann::json& j, const Question& q);
void from_json(const nlohmann::json& j, Question& q);
void to_json(nlohmann::json& j, const Variant& v);
void from_json(const nlohmann::json& j, Variant& v);
void to_json(nlohmann::json& j, const Cell& c);
void from_json(const nlohmann::json& j, Cell& c);
void to_json(nlohmann::json& j, const Step& s);
void from_json(const nlohmann::json& j, Step& s);
void to_json(nlohmann::json& j, const Trajectory& t);
void from_json(const nlohmann::json& j, Trajectory& t);
void to_json(nlohmann::json& j, const CellMetrics& m);
void from_json(const nlohmann::json& j, CellMetrics& m);
void to_json(nlohmann::json& j, const JudgeDecision& d);
void from_json(const nlohmann::json& j, JudgeDecision& d);

// One record per line; serialized keys are sorted, so output bytes depend only
// on record contents.
template <class T>
std::string encode_record(const T& record) {
  nlohmann::json j = record;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = std::string(RecordTraits<T>::kind);
  return j.dump();
}

template <class T>
T decode_record(std::string_view line, const std::string& path, std::size_t line_no) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path, line_no, std::string("malformed record: ") + e.what());
  }
  if (!j.is_object()) throw FormatError(path, line_no, "record is not an object");
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
    throw SchemaVersionError(path + ":" + std::to_string(line_no) +
                             ": missing schema_version");
  }
  if (j["schema_version"].get<int>() != kSchemaVersion) {
    throw SchemaVersionError(path + ":" + std::to_string(line_no) + ": schema_version " +
                             std::to_string(j["schema_version"].get<int>()) +
                             " is incompatible with supported version " +
                             std::to_string(kSchemaVersion));
  }
  if (j.value("kind", std::string()) != RecordTraits<T>::kind) {
    throw FormatError(path, line_no,
                      "expected kind '" + std::string(RecordTraits<T>::kind) + "'");
  }
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path, line_no, std::string("invalid record: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(path, line_no, std::string("invalid record: ") + e.what());
  }
}

// Writes records sorted by key. The file is written to a sibling temp file
// and renamed so readers never observe a partial file.
template <class T>
void save_records(const std::filesystem::path& path, std::vector<T> records) {
  std::stable_sort(records.begin(), records.end(), [](const T& a, const T& b) {
    return RecordTraits<T>::key(a) < RecordTraits<T>::key(b);
  });
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    for (const auto& r : records) out << encode_record(r) << '\n';
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// Appends parsed records to `out` as it goes, so when a later line is bad the
// records before it are still available to the caller.
template <class T>
void load_records(const std::filesystem::path& path, std::vector<T>& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();
  const std::string p = path.string();
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t nl = data.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    std::string_view line(data.data() + pos, (terminated ? nl : data.size()) - pos);
    ++line_no;
    pos = terminated ? nl + 1 : data.size();
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    if (!terminated) {
      try {
        out.push_back(decode_record<T>(line, p, line_no));
      } catch (const FormatError&) {
        throw FormatError(p, line_no, "truncated final record");
      }
      continue;
    }
    out.push_back(decode_record<T>(line, p, line_no));
  }
}

template <class T>
std::vector<T> load_records(const std::filesystem::path& path) {
  std::vector<T> out;
  load_records(path, out);
  return out;
}

}  // namespace agentdiff
