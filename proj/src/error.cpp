#include "cornyield/error.hpp"

namespace cornyield {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Shape: return "shape";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Schema: return "schema";
        case ErrorKind::Gap: return "gap";
        case ErrorKind::Consistency: return "consistency";
        case ErrorKind::Duplicate: return "duplicate";
        case ErrorKind::Range: return "range";
        case ErrorKind::Coverage: return "coverage";
        case ErrorKind::Config: return "config";
        case ErrorKind::Domain: return "domain";
        case ErrorKind::Plan: return "plan";
        case ErrorKind::Combination: return "combination";
        case ErrorKind::Join: return "join";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::Io: return "io";
        case ErrorKind::Magic: return "magic";
        case ErrorKind::Version: return "version";
        case ErrorKind::Truncation: return "truncation";
        case ErrorKind::Usage: return "usage";
    }
    return "unknown";
}

Error::Error(ErrorKind kind, std::string_view module, const std::string& message)
    : std::runtime_error(std::string(module) + ": " + std::string(to_string(kind)) +
                         " error: " + message),
      kind_(kind),
      module_(module),
      message_(message) {}

}  // namespace cornyield
