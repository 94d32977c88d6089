#pragma once

#include <stdexcept>
#include <string>

namespace xxz {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A function was evaluated too close to one of its poles.
struct PoleError : Error {
  using Error::Error;
};

/// Dense finite-chain object requested beyond the configured size cap.
struct SizeError : Error {
  using Error::Error;
};

/// Series truncation or iterative solver failed to reach its tolerance.
struct ConvergenceError : Error {
  using Error::Error;
};

/// Massive regime with h <= h_c: the dressed energy has no zero inside the zone.
struct NoFermiBoundary : Error {
  using Error::Error;
};

/// Multiple integral requested with more variables than allowed.
struct DimensionCap : Error {
  using Error::Error;
};

struct BadDescriptor : Error {
  using Error::Error;
};

/// Invalid model or run configuration (e.g. ferromagnetic anisotropy).
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace xxz
