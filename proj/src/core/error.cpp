#include "k4i/error.hpp"

namespace k4i {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::range: return "range";
    case ErrorKind::parse: return "parse";
    case ErrorKind::encoding: return "encoding";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::timeout: return "timeout";
    case ErrorKind::transport: return "transport";
    case ErrorKind::routing: return "routing";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::lifecycle: return "lifecycle";
    case ErrorKind::startup: return "startup";
    case ErrorKind::not_found: return "not_found";
  }
  return "unknown";
}

namespace {

std::string join_issues(const std::vector<Issue>& issues) {
  std::string out;
  for (const auto& issue : issues) {
    if (!out.empty()) out += "; ";
    if (!issue.path.empty()) {
      out += issue.path;
      out += ": ";
    }
    out += issue.message;
  }
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<Issue> issues)
    : Error(ErrorKind::validation, join_issues(issues)), issues_(std::move(issues)) {}

ParseError::ParseError(int line, int column, const std::string& message)
    : Error(ErrorKind::parse,
            "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column),
      reason_(message) {}

}  // namespace k4i
