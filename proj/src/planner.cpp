#include "manilong/planner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "manilong/error.hpp"

namespace manilong {

bool overlaps(const Aabb& a, const Aabb& b) {
  return a.min.x <= b.max.x && b.min.x <= a.max.x && a.min.y <= b.max.y && b.min.y <= a.max.y &&
         a.min.z <= b.max.z && b.min.z <= a.max.z;
}

bool overlaps(const Obb& a, const Obb& b) {
  const Mat3& ra = a.pose.rotation();
  const Mat3& rb = b.pose.rotation();
  const Vec3 d = b.pose.translation() - a.pose.translation();
  std::array<Vec3, 15> axes;
  std::size_t n = 0;
  for (int i = 0; i < 3; ++i) axes[n++] = ra.column(i);
  for (int i = 0; i < 3; ++i) axes[n++] = rb.column(i);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const Vec3 c = ra.column(i).cross(rb.column(j));
      if (c.squared_norm() > 1e-18) axes[n++] = c;
    }
  for (std::size_t k = 0; k < n; ++k) {
    const Vec3& axis = axes[k];
    double r_a = 0.0, r_b = 0.0;
    for (int i = 0; i < 3; ++i) {
      r_a += a.half_extents[i] * std::abs(ra.column(i).dot(axis));
      r_b += b.half_extents[i] * std::abs(rb.column(i).dot(axis));
    }
    if (std::abs(d.dot(axis)) > r_a + r_b) return false;
  }
  return true;
}

bool overlaps(const Obb& box, const Aabb& aabb) {
  return overlaps(box, Obb{Pose::from_translation(aabb.center()), aabb.half_extents()});
}

void WorldModel::validate() const {
  if (!(gripper_half_extents.x > 0 && gripper_half_extents.y > 0 && gripper_half_extents.z > 0))
    throw Error(ErrorCode::InvalidInput, "gripper half extents must be positive");
  for (std::size_t i = 0; i < obstacles.size(); ++i)
    if (!overlaps(obstacles[i], workspace))
      throw Error(ErrorCode::InvalidInput, "obstacle outside the workspace", static_cast<int>(i));
}

Obb WorldModel::gripper_box(const Pose& ee) const {
  return {compose(ee, gripper_offset), gripper_half_extents};
}

namespace {

bool box_collides(const WorldModel& world, const Obb& box) {
  const Mat3& r = box.pose.rotation();
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 local{(corner & 1) ? box.half_extents.x : -box.half_extents.x,
                     (corner & 2) ? box.half_extents.y : -box.half_extents.y,
                     (corner & 4) ? box.half_extents.z : -box.half_extents.z};
    if (!world.workspace.contains(r * local + box.pose.translation())) return true;
  }
  for (const Aabb& obstacle : world.obstacles)
    if (overlaps(box, obstacle)) return true;
  return false;
}

}  // namespace

bool collides(const WorldModel& world, const Pose& pose, bool allow_collision) {
  if (allow_collision) return false;
  return box_collides(world, world.gripper_box(pose));
}

void PlanConfig::validate() const {
  if (!(step_size > 0.0)) throw Error(ErrorCode::InvalidInput, "step_size must be positive");
  if (!(goal_bias > 0.0 && goal_bias < 1.0))
    throw Error(ErrorCode::InvalidInput, "goal_bias must lie in (0, 1)");
  if (max_iterations < 1) throw Error(ErrorCode::InvalidInput, "max_iterations must be >= 1");
  if (!(angular_step > 0.0)) throw Error(ErrorCode::InvalidInput, "angular_step must be positive");
  if (!(rotation_weight >= 0.0)) throw Error(ErrorCode::InvalidInput, "rotation_weight must be >= 0");
}

double pose_distance(const Pose& a, const Pose& b, double rotation_weight) {
  return translation_error(a, b) + rotation_weight * rotation_error(a, b);
}

Pose interpolate(const Pose& a, const Pose& b, double s) {
  if (s <= 0.0) return a;
  if (s >= 1.0) return b;
  const Vec3 t = a.translation() + (b.translation() - a.translation()) * s;
  const Quat q = slerp(Quat::from_matrix(a.rotation()), Quat::from_matrix(b.rotation()), s);
  return {q.to_matrix(), t};
}

namespace {

struct EdgeSampler {
  const WorldModel& world;
  const PlanConfig& cfg;
  double reach;  // farthest gripper-box point from the ee origin

  EdgeSampler(const WorldModel& w, const PlanConfig& c)
      : world(w), cfg(c),
        reach(w.gripper_offset.translation().norm() + w.gripper_half_extents.norm()) {}

  bool free(const Pose& a, const Pose& b) const {
    const double dt = translation_error(a, b);
    const double angle = rotation_error(a, b);
    const int n = std::max({1, static_cast<int>(std::ceil(dt / (cfg.step_size / 4.0))),
                            static_cast<int>(std::ceil(angle / (cfg.angular_step / 4.0)))});
    const Quat qa = Quat::from_matrix(a.rotation());
    const Quat qb = Quat::from_matrix(b.rotation());
    const auto at = [&](double s) {
      if (s <= 0.0) return a;
      if (s >= 1.0) return b;
      return Pose(slerp(qa, qb, s).to_matrix(), a.translation() + (b.translation() - a.translation()) * s);
    };
    for (int k = 0; k <= n; ++k)
      if (collides(world, at(static_cast<double>(k) / n))) return false;
    for (int k = 0; k < n; ++k)
      if (!covered(at, dt, angle, static_cast<double>(k) / n, static_cast<double>(k + 1) / n)) return false;
    return true;
  }

 private:
  static constexpr double kResolution = 1e-4;

  // The box at the midpoint grown by half the displacement over [s0, s1] contains the
  // swept gripper; where that touches an obstacle, bisect.
  template <class At>
  bool covered(const At& at, double dt, double angle, double s0, double s1) const {
    const double span = s1 - s0;
    const double margin = 0.5 * span * (dt + angle * reach);
    const double mid = 0.5 * (s0 + s1);
    const Pose p = at(mid);
    const Vec3 grown = world.gripper_half_extents + Vec3{margin, margin, margin};
    if (!box_collides(world, Obb{compose(p, world.gripper_offset), grown})) return true;
    if (collides(world, p)) return false;
    if (margin < kResolution) return true;
    return covered(at, dt, angle, s0, mid) && covered(at, dt, angle, mid, s1);
  }
};

struct Node {
  Pose pose;
  int parent;
};

using Tree = std::vector<Node>;

enum class Extend { Trapped, Advanced, Reached };

class Rrt {
 public:
  Rrt(const WorldModel& world, const PlanConfig& cfg) : sampler_(world, cfg), cfg_(cfg) {}

  std::size_t nearest(const Tree& tree, const Pose& target) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tree.size(); ++i) {
      const double d = pose_distance(tree[i].pose, target, cfg_.rotation_weight);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }

  Extend extend(Tree& tree, const Pose& target) const {
    const std::size_t from = nearest(tree, target);
    const Pose& base = tree[from].pose;
    const double dt = translation_error(base, target);
    const double angle = rotation_error(base, target);
    double s = 1.0;
    if (dt > cfg_.step_size) s = std::min(s, cfg_.step_size / dt);
    if (angle > cfg_.angular_step) s = std::min(s, cfg_.angular_step / angle);
    const Pose next = s >= 1.0 ? target : interpolate(base, target, s);
    if (!sampler_.free(base, next)) return Extend::Trapped;
    tree.push_back({next, static_cast<int>(from)});
    return s >= 1.0 ? Extend::Reached : Extend::Advanced;
  }

  Extend connect(Tree& tree, const Pose& target) const {
    Extend e = Extend::Advanced;
    while (e == Extend::Advanced) e = extend(tree, target);
    return e;
  }

  bool free(const Pose& a, const Pose& b) const { return sampler_.free(a, b); }

 private:
  EdgeSampler sampler_;
  const PlanConfig& cfg_;
};

std::vector<Pose> trace(const Tree& tree, int index) {
  std::vector<Pose> out;
  for (int i = index; i >= 0; i = tree[static_cast<std::size_t>(i)].parent)
    out.push_back(tree[static_cast<std::size_t>(i)].pose);
  return out;
}

Pose sample_pose(std::mt19937_64& rng, const WorldModel& world, const Quat& qa, const Quat& qb) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Aabb& ws = world.workspace;
  const Vec3 t{ws.min.x + unit(rng) * (ws.max.x - ws.min.x), ws.min.y + unit(rng) * (ws.max.y - ws.min.y),
               ws.min.z + unit(rng) * (ws.max.z - ws.min.z)};
  // Orientation near the start-goal arc, jittered by up to 0.5 rad.
  const Quat base = slerp(qa, qb, unit(rng));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec3 axis{gauss(rng), gauss(rng), gauss(rng)};
  const double len = axis.norm();
  axis = len > 1e-12 ? axis / len : Vec3{0, 0, 1};
  const Mat3 jitter = Mat3::axis_angle(axis, 0.5 * unit(rng));
  return {jitter * base.to_matrix(), t};
}

}  // namespace

bool edge_free(const WorldModel& world, const Pose& a, const Pose& b, const PlanConfig& cfg) {
  return EdgeSampler(world, cfg).free(a, b);
}

std::vector<Pose> plan_rrt_connect(const WorldModel& world, const Pose& start, const Pose& goal,
                                   const PlanConfig& cfg, bool allow_collision) {
  cfg.validate();
  if (allow_collision) return {start, goal};
  if (collides(world, start)) throw Error(ErrorCode::StartInCollision, "start pose collides");
  if (collides(world, goal)) throw Error(ErrorCode::GoalInCollision, "goal pose collides");

  const Rrt rrt(world, cfg);
  if (rrt.free(start, goal)) return {start, goal};

  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Quat qs = Quat::from_matrix(start.rotation());
  const Quat qg = Quat::from_matrix(goal.rotation());
  Tree from_start{{start, -1}};
  Tree from_goal{{goal, -1}};
  Tree* a = &from_start;
  Tree* b = &from_goal;

  std::vector<Pose> path;
  for (int iter = 0; iter < cfg.max_iterations && path.empty(); ++iter) {
    const Pose target = unit(rng) < cfg.goal_bias ? (*b)[0].pose : sample_pose(rng, world, qs, qg);
    if (rrt.extend(*a, target) != Extend::Trapped) {
      const Pose reached = a->back().pose;
      if (rrt.connect(*b, reached) == Extend::Reached) {
        std::vector<Pose> head = trace(from_start, static_cast<int>(from_start.size()) - 1);
        std::vector<Pose> tail = trace(from_goal, static_cast<int>(from_goal.size()) - 1);
        std::reverse(head.begin(), head.end());
        // Both branches end on the same state; keep it once.
        path = std::move(head);
        path.insert(path.end(), tail.begin() + 1, tail.end());
      }
    }
    std::swap(a, b);
  }
  if (path.empty())
    throw Error(ErrorCode::PlanningTimeout,
                "no path after " + std::to_string(cfg.max_iterations) + " iterations");
  path.front() = start;
  path.back() = goal;

  const int attempts = cfg.max_iterations / 10;
  for (int k = 0; k < attempts && path.size() > 2; ++k) {
    std::uniform_int_distribution<std::size_t> pick(0, path.size() - 1);
    std::size_t i = pick(rng), j = pick(rng);
    if (i > j) std::swap(i, j);
    if (j < i + 2) continue;
    if (rrt.free(path[i], path[j]))
      path.erase(path.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                 path.begin() + static_cast<std::ptrdiff_t>(j));
  }
  return path;
}

nlohmann::json path_to_json(const std::vector<Pose>& path, bool gripper_open, bool allow_collision) {
  nlohmann::json out = nlohmann::json::array();
  for (const Pose& p : path) out.push_back(Action{p, gripper_open, allow_collision}.to_array());
  return out;
}

}  // namespace manilong
