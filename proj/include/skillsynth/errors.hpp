#pragma once

#include <stdexcept>
#include <string>

namespace skillsynth {

// Malformed or inconsistent input data (exit code 2 at the CLI).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A provider (LLM, embedder, judge) could not be reached or misbehaved (exit code 3).
class ProviderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration or arguments (exit code 4).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Local infrastructure failure (sandbox setup, filesystem), distinct from a
// verification failure.
class InfraError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace skillsynth
