#pragma once

#include <stdexcept>
#include <string>

namespace skillforge {

// Input file could not be parsed. `line` is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string message, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message
                                      : message),
          line_(line) {}

    int line() const { return line_; }

private:
    int line_;
};

// Bad or missing configuration (flags, config file, env).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& message) : std::runtime_error(message) {}
};

// Transport or protocol failure talking to a chat/embedding backend,
// including replay-mode cache misses.
class ProviderError : public std::runtime_error {
public:
    explicit ProviderError(const std::string& message) : std::runtime_error(message) {}
};

}  // namespace skillforge
