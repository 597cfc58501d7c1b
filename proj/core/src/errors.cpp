#include "capinfer/errors.hpp"

namespace capinfer {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::Domain: return "domain";
        case ErrorCode::NotFound: return "not-found";
        case ErrorCode::Schema: return "schema";
        case ErrorCode::Degenerate: return "degenerate";
        case ErrorCode::Budget: return "budget";
        case ErrorCode::Numerical: return "numerical";
        case ErrorCode::Calibration: return "calibration";
        case ErrorCode::Validation: return "validation";
        case ErrorCode::Transport: return "transport";
        case ErrorCode::Usage: return "usage";
    }
    return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace capinfer
