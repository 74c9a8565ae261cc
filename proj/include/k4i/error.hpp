#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace k4i {

enum class ErrorKind {
  validation,
  range,
  parse,
  encoding,
  protocol,
  timeout,
  transport,
  routing,
  conflict,
  capacity,
  lifecycle,
  startup,
  not_found,
};

std::string_view to_string(ErrorKind kind);

/// Base for every error the testbed raises. Callers switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// One problem found while validating a document, located by a JSON-pointer-like path.
struct Issue {
  std::string path;
  std::string message;
};

/// Carries every issue found, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Issue> issues);
  ValidationError(std::string path, std::string message)
      : ValidationError(std::vector<Issue>{{std::move(path), std::move(message)}}) {}

  [[nodiscard]] const std::vector<Issue>& issues() const noexcept { return issues_; }

 private:
  std::vector<Issue> issues_;
};

class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& message);

  [[nodiscard]] int line() const noexcept { return line_; }
  [[nodiscard]] int column() const noexcept { return column_; }
  [[nodiscard]] const std::string& reason() const noexcept { return reason_; }

 private:
  int line_;
  int column_;
  std::string reason_;
};

}  // namespace k4i
