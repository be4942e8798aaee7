#pragma once

#include <stdexcept>
#include <string>

namespace cathtrack {

// Error taxonomy mirrored by the C API status codes and the CLI exit codes.
enum class ErrorCode {
    invalid_argument = 1,
    config = 2,
    numeric = 3,
    io = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) fail(code, message);
}

}  // namespace cathtrack
