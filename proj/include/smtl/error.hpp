#pragma once

#include <stdexcept>
#include <string>

namespace smtl {

enum class ErrorKind {
    dimension_mismatch,
    non_finite,
    infeasible,
    schema,
    io,
    config,
    limit_exceeded,
    singular_system,
    divergence,
};

/// All failures surface as one exception type carrying a machine-checkable
/// kind plus a human-readable message.
class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::dimension_mismatch: return "dimension_mismatch";
        case ErrorKind::non_finite: return "non_finite";
        case ErrorKind::infeasible: return "infeasible";
        case ErrorKind::schema: return "schema";
        case ErrorKind::io: return "io";
        case ErrorKind::config: return "config";
        case ErrorKind::limit_exceeded: return "limit_exceeded";
        case ErrorKind::singular_system: return "singular_system";
        case ErrorKind::divergence: return "divergence";
    }
    return "unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
    throw Error(kind, std::string(to_string(kind)) + ": " + msg);
}

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
    if (!cond) fail(kind, msg);
}

}  // namespace smtl
