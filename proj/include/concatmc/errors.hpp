#pragma once

#include <stdexcept>
#include <string>

namespace concatmc {

// Invalid configuration: malformed spec, bad kernel row, duplicate tag, ...
// The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A value was requested outside the domain where it is defined, e.g.
// evaluating a path on its censored region or a function off its space.
struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: singular solve, residual above tolerance, non-finite
// intermediate.  Indicates the instance is outside what the oracle can do,
// never silently degraded.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Requested operation is valid in general but not supported by this
// implementation (e.g. oracle consistency checks on diffusions).
struct UnsupportedError : std::runtime_error {
    explicit UnsupportedError(const std::string& what) : std::runtime_error(what) {}
};

// A revival was requested from a dying path that has no exit point
// (dead path, infinite lifetime, or censored before death).
struct RevivalUndefinedError : std::runtime_error {
    explicit RevivalUndefinedError(const std::string& what)
        : std::runtime_error(what) {}
};

// A censored trajectory was evaluated past its censor time: the value is
// not merely at the cemetery, it is unknown.
struct UndefinedRegionError : std::runtime_error {
    explicit UndefinedRegionError(const std::string& what)
        : std::runtime_error(what) {}
};

}  // namespace concatmc
