#pragma once

#include <stdexcept>
#include <string>

namespace ehcrn {

/// A parameter outside its admissible range.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Tensor / vector dimensions that do not agree.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Configuration text that could not be parsed or validated.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& message, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
          line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw InvalidParameter(message);
    }
}

} // namespace detail
} // namespace ehcrn
