#pragma once

#include <stdexcept>
#include <string>

namespace qcens {

/// Base class for every error raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid grid construction (axis bounds, point counts, budget).
struct GridError : Error {
    using Error::Error;
};

/// Malformed scenario/config input. CLI maps this to exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

/// Runtime numerical failure (instability, caustic, norm drift, divergence).
/// CLI maps this to exit code 3 and writes a diagnostic report.
struct NumericalAbort : Error {
    std::string kind;     // stable identifier: "stability", "caustic", "norm-drift", ...
    double value = 0.0;   // offending quantity, when meaningful
    long step = -1;       // solver step at which the abort triggered

    NumericalAbort(std::string k, const std::string& what, double v = 0.0, long s = -1)
        : Error(what), kind(std::move(k)), value(v), step(s) {}

    NumericalAbort(std::string k, double v, long s = -1)
        : Error("numerical abort: " + k), kind(std::move(k)), value(v), step(s) {}
};

/// An operator composition failed to cancel exactly where the algebra says it must.
struct CancellationError : Error {
    using Error::Error;
};

}  // namespace qcens
