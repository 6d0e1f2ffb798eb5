#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace agentdiff {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A record file line failed to parse or validate.
class FormatError : public Error {
 public:
  FormatError(const std::string& path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SchemaVersionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// The operator cannot produce a non-identity variant for this input.
class NotPerturbable : public Error {
 public:
  using Error::Error;
};

class GeneratorUnavailable : public Error {
 public:
  using Error::Error;
};

// Transport-level failure talking to a model endpoint.
class AdapterError : public Error {
 public:
  using Error::Error;
};

class ReplayMiss : public Error {
 public:
  using Error::Error;
};

class TagUnavailable : public Error {
 public:
  using Error::Error;
};

class EmptyMatch : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public Error {
 public:
  RankDeficient(const std::string& column)
      : Error("design matrix is rank deficient: column '" + column +
              "' is collinear with earlier columns"),
        column_(column) {}
  const std::string& column() const { return column_; }

 private:
  std::string column_;
};

}  // namespace agentdiff
