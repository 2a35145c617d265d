#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "manilong/se3.hpp"

namespace manilong {

struct Aabb {
  Vec3 min;
  Vec3 max;

  Vec3 center() const { return (min + max) * 0.5; }
  Vec3 half_extents() const { return (max - min) * 0.5; }
  bool contains(const Vec3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
           p.z <= max.z;
  }
};

bool overlaps(const Aabb& a, const Aabb& b);

/// Oriented box given by a pose (centre + axes) and half extents.
struct Obb {
  Pose pose;
  Vec3 half_extents;
};

/// Separating-axis test between an oriented box and an axis-aligned box.
bool overlaps(const Obb& box, const Aabb& aabb);
/// Separating-axis test between two oriented boxes.
bool overlaps(const Obb& a, const Obb& b);

struct WorldModel {
  std::vector<Aabb> obstacles;
  Aabb workspace{{-1, -1, -1}, {1, 1, 1}};
  Vec3 gripper_half_extents{0.02, 0.05, 0.02};
  /// Gripper box centre in the end-effector frame.
  Pose gripper_offset;

  /// Throws InvalidInput for non-positive half extents or an obstacle outside the workspace.
  void validate() const;
  Obb gripper_box(const Pose& ee) const;
};

/// False when `allow_collision`; otherwise true iff the gripper box at `pose` overlaps an
/// obstacle or leaves the workspace.
bool collides(const WorldModel& world, const Pose& pose, bool allow_collision = false);

struct PlanConfig {
  double step_size = 0.05;
  int max_iterations = 20000;
  double goal_bias = 0.1;
  std::uint64_t rng_seed = 0;
  double angular_step = 0.2;
  /// Metres per radian in the state distance.
  double rotation_weight = 0.1;

  void validate() const;
};

/// Translation distance + rotation_weight * geodesic angle.
double pose_distance(const Pose& a, const Pose& b, double rotation_weight);
/// Straight translation and slerped orientation.
Pose interpolate(const Pose& a, const Pose& b, double s);

/// True iff every state along the straight edge is collision-free. States are sampled
/// at spacing <= step_size/4 (and angular_step/4); between samples the gripper box at
/// the interval midpoint, grown by half the interval's largest displacement, must be
/// free, with bisection down to 0.1 mm where it is not.
bool edge_free(const WorldModel& world, const Pose& a, const Pose& b, const PlanConfig& cfg);

/// Bidirectional RRT over (translation, orientation) with connect-style extension and
/// random shortcutting. With `allow_collision` the checks are bypassed and the straight
/// [start, goal] path is returned. Throws StartInCollision, GoalInCollision,
/// PlanningTimeout.
std::vector<Pose> plan_rrt_connect(const WorldModel& world, const Pose& start, const Pose& goal,
                                   const PlanConfig& cfg, bool allow_collision = false);

/// JSON list of 18-scalar actions, flags copied to every waypoint.
nlohmann::json path_to_json(const std::vector<Pose>& path, bool gripper_open, bool allow_collision);

}  // namespace manilong
