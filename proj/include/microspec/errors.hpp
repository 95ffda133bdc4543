#pragma once

#include <stdexcept>
#include <string>

namespace microspec {

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct IntegrationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A model, state or family violates one of its construction invariants.
struct ConstructionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad configuration or input; `line` is 0 when not tied to a file line.
struct ConfigError : std::runtime_error {
    int line = 0;
    ConfigError(const std::string& msg, int line_no = 0)
        : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg),
          line(line_no) {}
};

}  // namespace microspec
