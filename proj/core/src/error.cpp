#include "attrition/error.hpp"

namespace attrition {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Domain: return "domain";
        case ErrorKind::Truncation: return "truncation";
        case ErrorKind::Solver: return "solver";
        case ErrorKind::Assumption: return "assumption";
        case ErrorKind::Mode: return "mode";
        case ErrorKind::Inconsistency: return "inconsistency";
        case ErrorKind::Oracle: return "oracle";
        case ErrorKind::Estimation: return "estimation";
        case ErrorKind::Config: return "config";
    }
    return "unknown";
}

}  // namespace attrition
