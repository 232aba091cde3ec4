#pragma once

#include <stdexcept>
#include <string>

namespace sissa {

// Configuration problems (bad YAML key, invalid value). The CLI maps these
// to a distinct exit code from runtime failures.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Everything that goes wrong after configuration was accepted.
class RuntimeError : public std::runtime_error {
public:
    explicit RuntimeError(const std::string& what)
        : std::runtime_error(what) {}
};

}  // namespace sissa
