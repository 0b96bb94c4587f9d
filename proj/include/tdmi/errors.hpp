#pragma once

#include <stdexcept>
#include <string>

namespace tdmi {

// Base class for all library errors. CLI maps ConfigError to exit code 1,
// everything else to exit code 2.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shape / dimension mismatch.
struct ShapeError : Error {
    using Error::Error;
};

// Invalid user-supplied configuration (bad key, bad variant name, ...).
struct ConfigError : Error {
    using Error::Error;
};

// Non-finite value detected in checked mode, or NaN loss during training.
struct NumericError : Error {
    using Error::Error;
};

// Geometry precondition violated (e.g. crop box does not intersect image).
struct GeometryError : Error {
    using Error::Error;
};

// MI estimation requested with too few samples.
struct SampleSizeError : Error {
    using Error::Error;
};

// API contract violation (e.g. backward on a non-scalar loss).
struct ContractError : Error {
    using Error::Error;
};

// grad_check detected a non-deterministic function.
struct DeterminismError : Error {
    using Error::Error;
};

} // namespace tdmi
