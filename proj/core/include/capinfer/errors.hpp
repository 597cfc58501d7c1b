#pragma once

#include <stdexcept>
#include <string>

namespace capinfer {

enum class ErrorCode {
    Domain,       // argument outside its valid range
    NotFound,     // unknown model or item identifier
    Schema,       // dataset/file does not match the expected shape
    Degenerate,   // data cannot support the requested inference
    Budget,       // sampling budget too small for the request
    Numerical,    // non-finite intermediate value
    Calibration,  // item without response variation, or optimizer failure
    Validation,   // invalid generator spec or run configuration
    Transport,    // endpoint unreachable after retries
    Usage,        // bad command-line invocation
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message);
    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) raise(code, message);
}

}  // namespace capinfer
