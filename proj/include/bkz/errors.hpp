#pragma once

#include <stdexcept>
#include <string>

namespace bkz {

// Caller broke an API precondition: wrong dimension, invalid parameter,
// index out of range. These are bugs at the call site, not runtime
// conditions to recover from.
struct ContractViolation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Curvature estimation could not produce a value: every sampled pair was
// discarded by the denominator guard.
struct IndeterminateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The Jacobian was numerically rank-deficient at a sampled point, so the
// conditioning estimate is undefined.
struct RankDeficientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rate-bound inputs violate the admissibility conditions of the bound.
struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The rate bound evaluated outside (0, 1) and is vacuous.
struct DegenerateRateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The run trace lacks the data the audit needs (thinned trace or no
// distance-to-solution column).
struct AuditUnavailableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// const char* keeps the passing path allocation-free; evaluation routines
// call this per component inside solver loops.
inline void require(bool condition, const char* message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace bkz
