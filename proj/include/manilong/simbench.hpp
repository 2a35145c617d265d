#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "manilong/cloud.hpp"
#include "manilong/invariant.hpp"
#include "manilong/matcher.hpp"
#include "manilong/planner.hpp"
#include "manilong/segmenter.hpp"
#include "manilong/state.hpp"

namespace manilong {

// ---------------------------------------------------------------------------
// Scene layout

namespace sim {
inline constexpr int kTableInstance = 0;
inline constexpr int kTableClass = 0;
inline constexpr int kFirstPickClass = 1;  // picks use 1..4
inline constexpr int kFirstPadClass = 5;   // pads use 5..8
inline constexpr int kDistractorClass = 9;
inline constexpr int kClassCount = 10;
inline constexpr double kTableHalfSize = 0.45;
inline constexpr double kTableThickness = 0.05;
inline constexpr double kDt = 0.1;  // seconds per frame

/// 0..kClassCount-1.
std::vector<int> class_vocabulary();
}  // namespace sim

enum class ObjectRole { Pick, Pad, Distractor };

std::string_view to_string(ObjectRole role);

struct ObjectSpec {
  int instance_id = 0;
  int class_id = 0;
  ObjectRole role = ObjectRole::Pick;
  Vec3 half_extents;
  Pose pose;  // spawn pose; the box centre
};

/// The goal target is `reference_instance`'s pose (or, for a stacked reference, that
/// object's own goal target) composed with `relative`.
struct GoalSpec {
  int instance_id = 0;
  int reference_instance = 0;
  Pose relative;
  Pose target;
  double tolerance = 0.02;
};

struct TaskSpec {
  int level = 1;
  int n_interactions = 6;
  std::vector<ObjectSpec> objects;
  std::vector<GoalSpec> goals;  // in pick order
  std::uint64_t rng_seed = 0;

  const ObjectSpec& object(int instance_id) const;
  std::size_t object_index(int instance_id) const;
};

/// Task family name per level: place-2, place-3, stack-4.
std::string task_family(int level);

/// Deterministic per (level, seed). Throws InvalidInput for a level outside 1..3.
TaskSpec generate_task(int level, std::uint64_t seed, double tolerance = 0.02);

/// Goal targets recomputed from the given object poses (indexed like task.objects).
std::vector<Pose> resolve_goal_targets(const TaskSpec& task, const std::vector<Pose>& object_poses);

std::vector<Pose> spawn_poses(const TaskSpec& task);

/// Spawn poses with every non-table object shifted by up to `translation` in x/y and
/// rotated by up to `rotation` about z (uniform).
std::vector<Pose> perturbed_spawn(const TaskSpec& task, double translation, double rotation,
                                  std::mt19937_64& rng);

nlohmann::json to_json(const TaskSpec& task);
TaskSpec task_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Simulation

struct SimConfig {
  double surface_density = 500.0;  // points per m^2 on object faces
  double table_density = 500.0;
  double noise_sigma = 0.0;
  double position_tolerance = 0.02;
  double rotation_tolerance = 0.2;
  double attach_tolerance = 0.02;
};

/// Point samples of each object in its own frame, fixed per task.
class SceneSampler {
 public:
  SceneSampler(const TaskSpec& task, const SimConfig& config);

  /// Table plus every object at `object_poses`; Gaussian noise when noise_sigma > 0.
  LabeledCloud observe(const std::vector<Pose>& object_poses, std::mt19937_64* noise = nullptr) const;

 private:
  const TaskSpec* task_;
  SimConfig config_;
  std::vector<Vec3> table_;
  std::vector<std::vector<Vec3>> local_;
};

/// Cell-centred grid samples on the six faces of a box (at least 2x2 per face).
std::vector<Vec3> sample_box_surface(const Vec3& half_extents, double density);

/// End-effector pose over an object's top face centre, gripper pointing down.
Pose grasp_pose(const Pose& object_pose, const Vec3& half_extents);
/// ee^-1 * object for a top-face grasp.
Pose grasp_offset(const Vec3& half_extents);

/// Planner world: table slab and axis-aligned bounds of every object except `skip`.
WorldModel make_world(const TaskSpec& task, const std::vector<Pose>& object_poses,
                      std::optional<int> skip_instance = std::nullopt);

/// Gripper box dimensions shared by the expert and the executor.
Vec3 gripper_half_extents();
Pose gripper_offset();

/// Transit altitude of the end effector for a task.
double transit_height(const TaskSpec& task);
Pose home_pose(const TaskSpec& task);

/// Fixed 7x6 map from end-effector twist (v, w) to joint velocities.
std::array<double, 7> joint_velocities_from_twist(const Pose& from, const Pose& to, double dt);

struct Demo {
  TaskSpec task;
  std::vector<TrajectoryState> states;
  std::vector<bool> allow_collision;
  std::vector<std::vector<Pose>> object_poses;  // per frame, like task.objects
  std::vector<InteractionPhase> scripted_phases;
  std::vector<int> grasped_per_cycle;

  std::vector<ProprioFrame> proprio() const;
  std::size_t size() const { return states.size(); }
};

struct ExpertTiming {
  int retreat = 4;
  int transit = 10;
  int descend = 5;
  int grasp = 2;
};

/// Scripted pick-and-place demonstration. Throws ExpertPlanningFailed.
Demo scripted_expert(const TaskSpec& task, const SimConfig& sim, const PlanConfig& planner,
                     const std::vector<Pose>& spawn, std::mt19937_64* noise = nullptr);
Demo scripted_expert(const TaskSpec& task, const SimConfig& sim = {}, const PlanConfig& planner = {});

/// One JSON object per frame.
void write_demo_jsonl(std::ostream& out, const Demo& demo);
/// Reads frames only (task, object poses and scripted phases stay empty).
Demo read_demo_jsonl(std::istream& in);

/// All goals within tolerance and nothing held.
bool goals_satisfied(const TaskSpec& task, const std::vector<Pose>& object_poses,
                     const std::vector<Pose>& targets, const SimConfig& sim,
                     std::optional<int> attached);

// ---------------------------------------------------------------------------
// Pipeline

enum class CorrespondenceMode { Oracle, Descriptor, Random };

std::string_view to_string(CorrespondenceMode mode);
CorrespondenceMode parse_correspondence_mode(std::string_view s);

struct PipelineConfig {
  CorrespondenceMode mode = CorrespondenceMode::Oracle;
  double temperature = kDefaultTemperature;
  double match_threshold = kDefaultMatchThreshold;
  double epsilon = kDefaultEpsilon;
  int stride = 5;
  double v_zero_threshold = kDefaultVZeroThreshold;
  bool routing = true;
  double gripper_weight = 1.0;
  std::size_t descriptor_k = 8;
  int variants = 3;
  double variant_perturbation = 0.03;
  double variant_perturbation_rot = 0.1;
};

struct MacroStep {
  int phase_index = 0;
  PhaseKind kind = PhaseKind::PreContact;
  int timestep = 0;
  int action_timestep = 0;  // frame whose ee pose and flags form the action
  bool last_in_phase = false;
  InvariantRegion region;
  RouteFeature feature;
};

struct DemoAnnotation {
  Decomposition decomposition;
  std::vector<MacroStep> steps;
  std::vector<std::pair<int, int>> phase_steps;  // [first, last] step index per phase
};

/// Decomposes the demo and computes each macro-step's invariant region from
/// `variants` perturbed expert re-runs paired by timestep.
DemoAnnotation annotate_demo(const Demo& demo, const PipelineConfig& pipeline, const SimConfig& sim,
                             const PlanConfig& planner);

nlohmann::json to_json(const DemoAnnotation& annotation);

struct TrialResult {
  std::string task_id;
  int level = 1;
  std::uint64_t seed = 0;
  int trial = 0;
  bool success = false;
  int phases_completed = 0;
  double wall_time = 0.0;
};

struct RolloutOptions {
  double perturbation = 0.03;
  double perturbation_rot = 0.1;
  std::uint64_t seed = 0;
};

/// Runs the closed-loop pipeline on a perturbed copy of the task. Never throws for
/// pipeline failures; they end the trial.
TrialResult execute_rollout(const Demo& demo, const DemoAnnotation& annotation,
                            const PipelineConfig& pipeline, const PlanConfig& planner,
                            const SimConfig& sim, const RolloutOptions& options);

}  // namespace manilong
