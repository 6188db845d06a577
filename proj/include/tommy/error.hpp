#pragma once

#include <stdexcept>
#include <string>

namespace tommy {

// Error categories map onto CLI exit codes: usage/config problems, I/O,
// numeric failures. Everything else is a plain runtime failure.
enum class ErrorKind {
  dimension,
  temperature,
  index,
  config,
  io,
  parse,
  state,
  numeric,
  schema,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::temperature: return "temperature";
    case ErrorKind::index: return "index";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
    case ErrorKind::state: return "state";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::schema: return "schema";
  }
  return "unknown";
}

}  // namespace tommy
