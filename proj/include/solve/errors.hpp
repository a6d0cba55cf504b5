#pragma once

#include <stdexcept>
#include <string>

namespace solve {

// Base class for all errors raised by this library.
class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The constraint map is undefined at the requested point (e.g. sigma <= 0,
// probability parameter outside the open unit cube). Solvers treat this as
// a rejected step, not a fatal condition.
class DomainError : public SolveError {
 public:
  using SolveError::SolveError;
};

class DimensionMismatch : public SolveError {
 public:
  using SolveError::SolveError;
};

class StepUnderflow : public SolveError {
 public:
  using SolveError::SolveError;
};

class NonFiniteIterate : public SolveError {
 public:
  using SolveError::SolveError;
};

class NoAcceptedPoints : public SolveError {
 public:
  using SolveError::SolveError;
};

class InsufficientTrace : public SolveError {
 public:
  using SolveError::SolveError;
};

class EmptyCloud : public SolveError {
 public:
  using SolveError::SolveError;
};

class RankDeficient : public SolveError {
 public:
  using SolveError::SolveError;
};

class NotConverged : public SolveError {
 public:
  using SolveError::SolveError;
};

class NoConvergedRuns : public SolveError {
 public:
  using SolveError::SolveError;
};

class NonPositiveBandwidth : public SolveError {
 public:
  using SolveError::SolveError;
};

class DegenerateCloud : public SolveError {
 public:
  using SolveError::SolveError;
};

class NonFiniteScore : public SolveError {
 public:
  NonFiniteScore(const std::string& msg, std::size_t index)
      : SolveError(msg), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

class InvalidParameters : public SolveError {
 public:
  using SolveError::SolveError;
};

class InvalidTargets : public SolveError {
 public:
  using SolveError::SolveError;
};

class InvalidTable : public SolveError {
 public:
  using SolveError::SolveError;
};

class InvalidSpec : public SolveError {
 public:
  using SolveError::SolveError;
};

class InvalidBandwidth : public SolveError {
 public:
  using SolveError::SolveError;
};

class EigenFailure : public SolveError {
 public:
  using SolveError::SolveError;
};

class IoError : public SolveError {
 public:
  using SolveError::SolveError;
};

}  // namespace solve
