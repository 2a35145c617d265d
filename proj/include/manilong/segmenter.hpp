#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "manilong/error.hpp"
#include "manilong/se3.hpp"

namespace manilong {

struct ProprioFrame {
  int timestep = 0;
  bool gripper_open = true;
  std::array<double, 7> joint_velocities{};
  Pose ee_pose;

  double max_abs_velocity() const;
};

enum class PhaseKind { PreContact, Grasping, PostContact };

std::string_view stage_name(PhaseKind kind);
std::optional<PhaseKind> parse_stage_name(std::string_view name);

struct InteractionPhase {
  PhaseKind kind = PhaseKind::PreContact;
  int start = 0;  // inclusive timestep
  int end = 0;    // inclusive timestep

  bool operator==(const InteractionPhase&) const = default;
};

enum class DecompositionSource { RuleBased, Vlm };

struct Decomposition {
  std::vector<InteractionPhase> phases;
  DecompositionSource source = DecompositionSource::RuleBased;

  bool operator==(const Decomposition&) const = default;
};

/// Raised when the trajectory ends with the gripper closed; carries what was segmented.
class TruncatedCycleError : public Error {
 public:
  TruncatedCycleError(Decomposition partial, const std::string& what)
      : Error(ErrorCode::TruncatedCycle, what), partial_(std::move(partial)) {}
  const Decomposition& partial() const { return partial_; }

 private:
  Decomposition partial_;
};

inline constexpr double kDefaultVZeroThreshold = 1e-3;

/// Rule-based decomposition from gripper commands and joint velocities.
///
/// For every close/open cycle: pre-contact runs up to the frame before the close
/// command; grasping runs from the close command through the last consecutive closed
/// frame whose joint velocities are all below `v_zero_threshold` (at least one frame);
/// post-contact runs to the frame where the gripper reopens, inclusive. Open frames
/// after the final release are appended to the last post-contact phase.
///
/// Throws InvalidInput (fewer than 2 frames, non-increasing timesteps, first frame
/// closed), NoGraspDetected, or TruncatedCycleError.
Decomposition segment_rule_based(std::span<const ProprioFrame> frames,
                                 double v_zero_threshold = kDefaultVZeroThreshold);

/// Macro-step timesteps of a phase: start, start+stride, ... within the range, with the
/// end frame always included.
std::vector<int> sample_macro_steps(const InteractionPhase& phase, int stride = 5);

struct Horizon {
  bool long_horizon = false;
  int level = 0;           // 1..3 for long-horizon, 0 for short-horizon
  bool canonical = true;   // false when the phase count is not 6/9/12
};

/// <=3 phases: short horizon; 6/9/12: levels 1/2/3; other counts map to the nearest
/// level and are flagged non-canonical. Throws EmptyDecomposition.
Horizon classify_horizon(const Decomposition& d);

/// Checks continuity, non-overlap and Pre->Grasp->Post order; throws InvalidInput.
void validate_phases(std::span<const InteractionPhase> phases);

}  // namespace manilong
