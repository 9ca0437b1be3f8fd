#pragma once

#include <stdexcept>
#include <string>

namespace qftlab {

// Base class for all domain errors raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionCapExceeded : Error {
  using Error::Error;
};
struct ModeOutOfRange : Error {
  using Error::Error;
};
struct OffLatticePosition : Error {
  using Error::Error;
};
struct GridMismatch : Error {
  using Error::Error;
};
struct BoundViolated : Error {
  using Error::Error;
};
struct NearSingularResolvent : Error {
  using Error::Error;
};
struct LowerBoundViolated : Error {
  using Error::Error;
};
struct NoConvergence : Error {
  using Error::Error;
};
struct NoSaturation : Error {
  using Error::Error;
};
struct SupportOverlap : Error {
  using Error::Error;
};
struct ShiftNotGridAligned : Error {
  using Error::Error;
};
struct SupportOutsideGrid : Error {
  using Error::Error;
};
struct BracketTooTight : Error {
  using Error::Error;
};
struct SupportsNotTimeSeparated : Error {
  using Error::Error;
};
struct InstabilityDetected : Error {
  using Error::Error;
};
struct ConfigInvalid : Error {
  using Error::Error;
};

}  // namespace qftlab
