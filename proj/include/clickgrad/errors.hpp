#ifndef CLICKGRAD_ERRORS_HPP
#define CLICKGRAD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace clickgrad {

// Invalid configuration or malformed input data. CLI exit code 2.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (divergence, degenerate posterior). CLI exit code 3.
class NumericError : public std::runtime_error {
  public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace clickgrad

#endif
