#include "manilong/error.hpp"

namespace manilong {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::AllZeroWeights: return "AllZeroWeights";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::UnknownClass: return "UnknownClass";
    case ErrorCode::NoGraspDetected: return "NoGraspDetected";
    case ErrorCode::TruncatedCycle: return "TruncatedCycle";
    case ErrorCode::EmptyDecomposition: return "EmptyDecomposition";
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::UnknownStageName: return "UnknownStageName";
    case ErrorCode::Overlap: return "Overlap";
    case ErrorCode::Gap: return "Gap";
    case ErrorCode::CycleOrder: return "CycleOrder";
    case ErrorCode::RangeMismatch: return "RangeMismatch";
    case ErrorCode::Transport: return "Transport";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::MissingCredential: return "MissingCredential";
    case ErrorCode::NoFeasibleSegment: return "NoFeasibleSegment";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InsufficientMatches: return "InsufficientMatches";
    case ErrorCode::StartInCollision: return "StartInCollision";
    case ErrorCode::GoalInCollision: return "GoalInCollision";
    case ErrorCode::PlanningTimeout: return "PlanningTimeout";
    case ErrorCode::ExpertPlanningFailed: return "ExpertPlanningFailed";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace manilong
