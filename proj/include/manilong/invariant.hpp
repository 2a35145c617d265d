#pragma once

#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "manilong/segmenter.hpp"
#include "manilong/state.hpp"

namespace manilong {

inline constexpr double kDefaultEpsilon = 0.01;

/// Point indices of one instance segment in a referenced state's cloud.
struct InvariantRegion {
  int state_ref = 0;
  int instance_id = -1;
  std::vector<std::size_t> indices;  // ascending

  bool operator==(const InvariantRegion&) const = default;
};

/// Two action-equivalent states and their action poses. Non-owning.
struct StatePair {
  const TrajectoryState* state_a = nullptr;
  const TrajectoryState* state_b = nullptr;
  Pose pose_a;
  Pose pose_b;
};

/// True iff for every pair some q in state_b's cloud satisfies
/// |pose_a^-1 p - pose_b^-1 q| < epsilon.
bool check_invariant_point(const Vec3& p, std::span<const StatePair> pairs, double epsilon);

struct SegmentScore {
  int instance_id = -1;
  int class_id = -1;
  double mean_displacement = std::numeric_limits<double>::infinity();
  double max_displacement = std::numeric_limits<double>::infinity();
  bool excluded = false;
};

/// Action-frame displacement of every instance segment of state_a (ascending instance
/// id). Each point is compared with the nearest same-class point of every state_b.
/// Segments whose class is missing from some state_b get infinite cost.
std::vector<SegmentScore> score_segments(std::span<const StatePair> pairs);

/// Segment of state_a with the least mean displacement (ties to the lowest instance id).
/// For PostContact the grasped segment is excluded: `grasped_instance` when given,
/// otherwise state_a's attached instance. Throws NoFeasibleSegment or InvalidInput.
InvariantRegion gt_invariant_region(std::span<const StatePair> pairs, PhaseKind phase_kind,
                                    std::optional<int> grasped_instance = std::nullopt);

/// For each point of region_a (in order), the region_b point nearest in the action
/// frame; ties to the lowest index. Pairs hold cloud indices (a, b).
std::vector<std::pair<std::size_t, std::size_t>> gt_correspondences(
    const LabeledCloud& cloud_a, const InvariantRegion& region_a, const LabeledCloud& cloud_b,
    const InvariantRegion& region_b, const Pose& pose_a, const Pose& pose_b);

/// Region covering every point of `instance` in `cloud`.
InvariantRegion region_of_instance(const LabeledCloud& cloud, int instance, int state_ref = 0);

nlohmann::json to_json(const InvariantRegion& region);
InvariantRegion region_from_json(const nlohmann::json& j);

}  // namespace manilong
