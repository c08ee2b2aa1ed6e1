#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace varicurate {

/// Error taxonomy shared by every module. The CLI maps each kind onto a
/// distinct process exit code (see cli.hpp).
enum class ErrorKind {
    Data,       ///< bad values: NaN payloads, duplicate ids, degenerate embeddings, missing labels
    Parameter,  ///< bad arguments: k too large, shape mismatch, violated preconditions
    Format,     ///< malformed files
    Numeric,    ///< solver failure, non-finite intermediates
    Io,         ///< unreadable or unwritable paths
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Data: return "data";
        case ErrorKind::Parameter: return "parameter";
        case ErrorKind::Format: return "format";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) fail(kind, message);
}

}  // namespace varicurate
