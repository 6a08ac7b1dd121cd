#pragma once

#include <stdexcept>
#include <string>

namespace dynwalk {

// Construction-time validation failure (malformed law, bad geometry, ...).
struct ConstructionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A walker kind was asked to run on a law that lacks a required capability.
struct CapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Environment queried with a clock that moved backwards. Caller bug.
struct ClockRegressionError : std::logic_error {
  using std::logic_error::logic_error;
};

// Event-driven-only operation invoked on a memoryless-lazy environment.
struct ModeViolationError : std::logic_error {
  using std::logic_error::logic_error;
};

// A regeneration cycle blew past its configured caps.
struct CycleOverflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Estimator invoked with too few samples to be meaningful.
struct InsufficientSamplesError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operation applied to data that violates its stated assumptions.
struct AssumptionViolationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dynwalk
