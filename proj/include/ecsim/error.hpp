#pragma once

#include <stdexcept>
#include <string>

namespace ecsim {

enum class ErrorKind {
    InvalidConfig,
    Lookup,
    DegenerateEvent,
    DegenerateDirection,
    MalformedHistory,
    UndefinedVariety,
    ShapeMismatch,
    IncompatibleMomenta,
    InputError,
    ResolutionError,
    FitError,
    Instability,
    NumericError,
    IoError,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidConfig: return "invalid-config";
        case ErrorKind::Lookup: return "lookup";
        case ErrorKind::DegenerateEvent: return "degenerate-event";
        case ErrorKind::DegenerateDirection: return "degenerate-direction";
        case ErrorKind::MalformedHistory: return "malformed-history";
        case ErrorKind::UndefinedVariety: return "undefined-variety";
        case ErrorKind::ShapeMismatch: return "shape-mismatch";
        case ErrorKind::IncompatibleMomenta: return "incompatible-momenta";
        case ErrorKind::InputError: return "input";
        case ErrorKind::ResolutionError: return "resolution";
        case ErrorKind::FitError: return "fit";
        case ErrorKind::Instability: return "instability";
        case ErrorKind::NumericError: return "numeric";
        case ErrorKind::IoError: return "io";
    }
    return "unknown";
}

} // namespace ecsim
