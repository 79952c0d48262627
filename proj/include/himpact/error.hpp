#pragma once

#include <stdexcept>
#include <string>

namespace himpact {

/// Library error with a short machine-readable code ("invalid_argument",
/// "not_stationary", "insufficient_data", "parse", "io", ...).
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    [[nodiscard]] const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
    if (!condition) fail("invalid_argument", message);
}

} // namespace himpact
