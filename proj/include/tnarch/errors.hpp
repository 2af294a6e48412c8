#pragma once

#include <stdexcept>
#include <string>

namespace tnarch {

// Base class for all recoverable errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid argument / malformed input (CLI maps these to exit code 1).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
};

// A tensor or contraction intermediate would exceed the configured size cap.
class SizeLimitError : public Error {
public:
    explicit SizeLimitError(const std::string& what) : Error(what) {}
};

// Returns the global element-count cap for materialized tensors and
// contraction intermediates. Defaults to 1e8 entries; the environment
// variable TNARCH_SIZE_CAP overrides it.
std::size_t default_size_cap();

} // namespace tnarch
