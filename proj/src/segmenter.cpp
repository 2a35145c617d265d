#include "manilong/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace manilong {

double ProprioFrame::max_abs_velocity() const {
  double m = 0.0;
  for (double v : joint_velocities) m = std::max(m, std::abs(v));
  return m;
}

std::string_view stage_name(PhaseKind kind) {
  switch (kind) {
    case PhaseKind::PreContact: return "pre-contact";
    case PhaseKind::Grasping: return "grasping";
    case PhaseKind::PostContact: return "post-contact";
  }
  return "?";
}

std::optional<PhaseKind> parse_stage_name(std::string_view name) {
  if (name == "pre-contact") return PhaseKind::PreContact;
  if (name == "grasping") return PhaseKind::Grasping;
  if (name == "post-contact") return PhaseKind::PostContact;
  return std::nullopt;
}

Decomposition segment_rule_based(std::span<const ProprioFrame> frames, double v_zero_threshold) {
  const std::size_t n = frames.size();
  if (n < 2) throw Error(ErrorCode::InvalidInput, "need at least 2 frames");
  for (std::size_t i = 1; i < n; ++i)
    if (frames[i].timestep <= frames[i - 1].timestep)
      throw Error(ErrorCode::InvalidInput, "timesteps must be strictly increasing",
                  static_cast<int>(i));
  if (!frames[0].gripper_open)
    throw Error(ErrorCode::InvalidInput, "trajectory must start with the gripper open");

  Decomposition out;
  out.source = DecompositionSource::RuleBased;
  auto emit = [&](PhaseKind kind, std::size_t first, std::size_t last) {
    out.phases.push_back({kind, frames[first].timestep, frames[last].timestep});
  };

  std::size_t cursor = 0;
  while (cursor < n) {
    std::size_t close = cursor;
    while (close < n && frames[close].gripper_open) ++close;
    if (close == n) {
      if (out.phases.empty())
        throw Error(ErrorCode::NoGraspDetected, "gripper never closes");
      // Trailing open frames after the last release.
      out.phases.back().end = frames[n - 1].timestep;
      break;
    }
    // A re-close on the frame right after a release leaves no room for pre-contact.
    if (close == cursor)
      throw Error(ErrorCode::InvalidInput, "expected an open frame before the close command",
                  static_cast<int>(cursor));
    emit(PhaseKind::PreContact, cursor, close - 1);

    std::size_t grasp_end = close;
    while (grasp_end + 1 < n && !frames[grasp_end + 1].gripper_open &&
           frames[grasp_end + 1].max_abs_velocity() < v_zero_threshold &&
           frames[grasp_end].max_abs_velocity() < v_zero_threshold)
      ++grasp_end;
    emit(PhaseKind::Grasping, close, grasp_end);

    std::size_t release = grasp_end + 1;
    while (release < n && !frames[release].gripper_open) ++release;
    if (release >= n) {
      if (grasp_end + 1 < n) emit(PhaseKind::PostContact, grasp_end + 1, n - 1);
      throw TruncatedCycleError(out, "trajectory ends with the gripper closed");
    }
    emit(PhaseKind::PostContact, grasp_end + 1, release);
    cursor = release + 1;
  }
  return out;
}

std::vector<int> sample_macro_steps(const InteractionPhase& phase, int stride) {
  if (stride < 1) throw Error(ErrorCode::InvalidInput, "stride must be >= 1");
  if (phase.end < phase.start) throw Error(ErrorCode::InvalidInput, "phase end precedes start");
  std::vector<int> out;
  for (int t = phase.start; t <= phase.end; t += stride) out.push_back(t);
  if (out.back() != phase.end) out.push_back(phase.end);
  return out;
}

Horizon classify_horizon(const Decomposition& d) {
  const int count = static_cast<int>(d.phases.size());
  if (count == 0) throw Error(ErrorCode::EmptyDecomposition, "no phases");
  if (count <= 3) return Horizon{false, 0, true};
  switch (count) {
    case 6: return Horizon{true, 1, true};
    case 9: return Horizon{true, 2, true};
    case 12: return Horizon{true, 3, true};
    default: break;
  }
  // Nearest canonical count; equidistant counts round down to the lower level.
  int best_level = 1;
  for (int level = 2; level <= 3; ++level)
    if (std::abs(count - 3 * (level + 1)) < std::abs(count - 3 * (best_level + 1)))
      best_level = level;
  return Horizon{true, best_level, false};
}

void validate_phases(std::span<const InteractionPhase> phases) {
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const auto& p = phases[i];
    const int idx = static_cast<int>(i);
    if (p.start > p.end) throw Error(ErrorCode::InvalidInput, "phase start after end", idx);
    if (static_cast<int>(p.kind) != static_cast<int>(i % 3))
      throw Error(ErrorCode::InvalidInput, "phase kinds must cycle pre/grasp/post", idx);
    if (i > 0 && p.start != phases[i - 1].end + 1)
      throw Error(ErrorCode::InvalidInput, "phases must be contiguous", idx);
  }
}

}  // namespace manilong
