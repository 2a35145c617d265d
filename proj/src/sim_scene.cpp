#include <algorithm>
#include <cmath>
#include <numbers>

#include "manilong/error.hpp"
#include "manilong/simbench.hpp"

namespace manilong {

std::vector<Vec3> sample_box_surface(const Vec3& h, double density) {
  if (!(density > 0.0)) throw Error(ErrorCode::InvalidInput, "density must be positive");
  const double per_metre = std::sqrt(density);
  std::vector<Vec3> out;
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3;
    const int v = (axis + 2) % 3;
    const int nu = std::max(2, static_cast<int>(std::lround(2.0 * h[u] * per_metre)));
    const int nv = std::max(2, static_cast<int>(std::lround(2.0 * h[v] * per_metre)));
    for (double sign : {1.0, -1.0})
      for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nv; ++j) {
          double c[3];
          c[axis] = sign * h[axis];
          c[u] = -h[u] + (i + 0.5) * 2.0 * h[u] / nu;
          c[v] = -h[v] + (j + 0.5) * 2.0 * h[v] / nv;
          out.push_back({c[0], c[1], c[2]});
        }
  }
  return out;
}

SceneSampler::SceneSampler(const TaskSpec& task, const SimConfig& config)
    : task_(&task), config_(config) {
  if (!(config.table_density > 0.0)) throw Error(ErrorCode::InvalidInput, "table_density must be positive");
  const double size = 2.0 * sim::kTableHalfSize;
  const int n = std::max(2, static_cast<int>(std::lround(size * std::sqrt(config.table_density))));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      table_.push_back({-sim::kTableHalfSize + (i + 0.5) * size / n,
                        -sim::kTableHalfSize + (j + 0.5) * size / n, 0.0});
  for (const ObjectSpec& o : task.objects)
    local_.push_back(sample_box_surface(o.half_extents, config.surface_density));
}

LabeledCloud SceneSampler::observe(const std::vector<Pose>& object_poses, std::mt19937_64* noise) const {
  if (object_poses.size() != task_->objects.size())
    throw Error(ErrorCode::InvalidInput, "one pose per object required");
  LabeledCloud cloud;
  std::normal_distribution<double> gauss(0.0, config_.noise_sigma);
  auto jitter = [&](Vec3 p) {
    if (noise != nullptr && config_.noise_sigma > 0.0) p += Vec3{gauss(*noise), gauss(*noise), gauss(*noise)};
    return p;
  };
  for (const Vec3& p : table_) cloud.push_back(jitter(p), sim::kTableInstance, sim::kTableClass);
  for (std::size_t i = 0; i < local_.size(); ++i) {
    const ObjectSpec& o = task_->objects[i];
    for (const Vec3& p : local_[i]) cloud.push_back(jitter(object_poses[i].apply(p)), o.instance_id, o.class_id);
  }
  return cloud;
}

Pose grasp_offset(const Vec3& half_extents) {
  return inverse(Pose(Mat3::rot_x(std::numbers::pi), Vec3{0, 0, half_extents.z}));
}

Pose grasp_pose(const Pose& object_pose, const Vec3& half_extents) {
  return compose(object_pose, inverse(grasp_offset(half_extents)));
}

Vec3 gripper_half_extents() { return {0.015, 0.045, 0.03}; }

// ee z points down, so the box sits at negative ee z.
Pose gripper_offset() { return Pose::from_translation({0, 0, -0.045}); }

WorldModel make_world(const TaskSpec& task, const std::vector<Pose>& object_poses,
                      std::optional<int> skip_instance) {
  WorldModel w;
  w.workspace = {{-0.5, -0.5, -sim::kTableThickness - 0.01}, {0.5, 0.5, 0.6}};
  w.gripper_half_extents = gripper_half_extents();
  w.gripper_offset = gripper_offset();
  w.obstacles.push_back({{-sim::kTableHalfSize, -sim::kTableHalfSize, -sim::kTableThickness},
                         {sim::kTableHalfSize, sim::kTableHalfSize, 0.0}});
  for (std::size_t i = 0; i < task.objects.size(); ++i) {
    if (skip_instance && task.objects[i].instance_id == *skip_instance) continue;
    const Mat3& r = object_poses[i].rotation();
    const Vec3& h = task.objects[i].half_extents;
    Vec3 ext;
    ext.x = std::abs(r(0, 0)) * h.x + std::abs(r(0, 1)) * h.y + std::abs(r(0, 2)) * h.z;
    ext.y = std::abs(r(1, 0)) * h.x + std::abs(r(1, 1)) * h.y + std::abs(r(1, 2)) * h.z;
    ext.z = std::abs(r(2, 0)) * h.x + std::abs(r(2, 1)) * h.y + std::abs(r(2, 2)) * h.z;
    const Vec3 c = object_poses[i].translation();
    w.obstacles.push_back({c - ext, c + ext});
  }
  return w;
}

double transit_height(const TaskSpec& task) {
  double top = 0.0;
  double carried = 0.0;
  for (const ObjectSpec& o : task.objects) {
    top = std::max(top, o.pose.translation().z + o.half_extents.z);
    if (o.role == ObjectRole::Pick) carried = std::max(carried, 2.0 * o.half_extents.z);
  }
  for (const GoalSpec& g : task.goals)
    top = std::max(top, g.target.translation().z + task.object(g.instance_id).half_extents.z);
  return top + carried + 0.06;
}

Pose home_pose(const TaskSpec& task) {
  return Pose(Mat3::rot_x(std::numbers::pi), Vec3{0.0, 0.0, transit_height(task)});
}

namespace {

Vec3 rotation_vector(const Mat3& r) {
  const double angle = rotation_angle(r);
  const Vec3 skew{r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)};
  if (angle < 1e-9) return skew * 0.5;
  const double s = std::sin(angle);
  if (s > 1e-6) return skew * (angle / (2.0 * s));
  // Near pi: axis from the diagonal.
  Vec3 axis{std::sqrt(std::max(0.0, (r(0, 0) + 1) / 2)), std::sqrt(std::max(0.0, (r(1, 1) + 1) / 2)),
            std::sqrt(std::max(0.0, (r(2, 2) + 1) / 2))};
  return axis * angle;
}

}  // namespace

std::array<double, 7> joint_velocities_from_twist(const Pose& from, const Pose& to, double dt) {
  const Vec3 v = (to.translation() - from.translation()) / dt;
  const Vec3 w = rotation_vector(to.rotation() * from.rotation().transpose()) / dt;
  const double twist[6] = {v.x, v.y, v.z, w.x, w.y, w.z};
  std::array<double, 7> out{};
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      out[static_cast<std::size_t>(i)] += (i == j ? 1.0 : 0.1 * ((i + 2 * j) % 3 - 1)) * twist[j];
  for (int j = 0; j < 6; ++j) out[6] += 0.3 * twist[j];
  return out;
}

bool goals_satisfied(const TaskSpec& task, const std::vector<Pose>& object_poses,
                     const std::vector<Pose>& targets, const SimConfig& sim,
                     std::optional<int> attached) {
  if (attached) return false;
  for (std::size_t g = 0; g < task.goals.size(); ++g) {
    const Pose& actual = object_poses[task.object_index(task.goals[g].instance_id)];
    if (translation_error(actual, targets[g]) > task.goals[g].tolerance) return false;
    if (rotation_error(actual, targets[g]) > sim.rotation_tolerance) return false;
  }
  return true;
}

}  // namespace manilong
