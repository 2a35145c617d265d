#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace manilong {

enum class ErrorCode {
  InvalidInput,
  DegenerateInput,
  AllZeroWeights,
  KTooLarge,
  UnknownClass,
  NoGraspDetected,
  TruncatedCycle,
  EmptyDecomposition,
  MalformedJson,
  UnknownStageName,
  Overlap,
  Gap,
  CycleOrder,
  RangeMismatch,
  Transport,
  Timeout,
  MissingCredential,
  NoFeasibleSegment,
  DimensionMismatch,
  InsufficientMatches,
  StartInCollision,
  GoalInCollision,
  PlanningTimeout,
  ExpertPlanningFailed,
  GridMismatch,
  ConfigInvalid,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every library failure. `index()` carries the offending record or
/// phase index where one applies (-1 otherwise).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, int index = -1)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  int index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  int index_;
};

}  // namespace manilong
