#pragma once

#include <stdexcept>
#include <string>

namespace svcflow {

// Error taxonomy shared across the library. Every throwing operation
// documents which kinds it can raise.
enum class ErrorKind {
    Parse,
    Validation,
    NotFound,
    Model,
    Decomposition,
    Numerical,
    MissingData,
    UnknownClient,
    UnknownSegment,
    Internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Validation: return "validation";
        case ErrorKind::NotFound: return "not-found";
        case ErrorKind::Model: return "model";
        case ErrorKind::Decomposition: return "decomposition";
        case ErrorKind::Numerical: return "numerical";
        case ErrorKind::MissingData: return "missing-data";
        case ErrorKind::UnknownClient: return "unknown-client";
        case ErrorKind::UnknownSegment: return "unknown-segment";
        case ErrorKind::Internal: return "internal";
    }
    return "unknown";
}

}  // namespace svcflow
