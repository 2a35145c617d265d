#include <algorithm>
#include <cmath>
#include <functional>

#include "manilong/error.hpp"
#include "manilong/simbench.hpp"

namespace manilong {

std::vector<int> sim::class_vocabulary() {
  std::vector<int> v(kClassCount);
  for (int i = 0; i < kClassCount; ++i) v[static_cast<std::size_t>(i)] = i;
  return v;
}

std::string_view to_string(ObjectRole role) {
  switch (role) {
    case ObjectRole::Pick: return "pick";
    case ObjectRole::Pad: return "pad";
    case ObjectRole::Distractor: return "distractor";
  }
  return "?";
}

namespace {

ObjectRole parse_role(const std::string& s) {
  if (s == "pick") return ObjectRole::Pick;
  if (s == "pad") return ObjectRole::Pad;
  if (s == "distractor") return ObjectRole::Distractor;
  throw Error(ErrorCode::InvalidInput, "unknown object role '" + s + "'");
}

constexpr double kSpawnHalfRange = 0.33;
constexpr double kSpawnClearance = 0.05;
constexpr double kMaxYaw = 0.5;

double footprint_radius(const Vec3& h) { return std::hypot(h.x, h.y); }

}  // namespace

const ObjectSpec& TaskSpec::object(int instance_id) const { return objects[object_index(instance_id)]; }

std::size_t TaskSpec::object_index(int instance_id) const {
  for (std::size_t i = 0; i < objects.size(); ++i)
    if (objects[i].instance_id == instance_id) return i;
  throw Error(ErrorCode::InvalidInput, "no object with instance id " + std::to_string(instance_id));
}

std::string task_family(int level) {
  switch (level) {
    case 1: return "place-2";
    case 2: return "place-3";
    case 3: return "stack-4";
    default: throw Error(ErrorCode::InvalidInput, "level must be 1, 2 or 3");
  }
}

std::vector<Pose> spawn_poses(const TaskSpec& task) {
  std::vector<Pose> out;
  out.reserve(task.objects.size());
  for (const ObjectSpec& o : task.objects) out.push_back(o.pose);
  return out;
}

std::vector<Pose> resolve_goal_targets(const TaskSpec& task, const std::vector<Pose>& object_poses) {
  std::vector<Pose> out(task.goals.size());
  std::vector<int> state(task.goals.size(), 0);  // 0 new, 1 in progress, 2 done
  std::function<Pose(std::size_t)> target = [&](std::size_t g) -> Pose {
    if (state[g] == 2) return out[g];
    if (state[g] == 1) throw Error(ErrorCode::InvalidInput, "goal references form a cycle");
    state[g] = 1;
    const GoalSpec& goal = task.goals[g];
    Pose base = object_poses.at(task.object_index(goal.reference_instance));
    for (std::size_t h = 0; h < task.goals.size(); ++h)
      if (task.goals[h].instance_id == goal.reference_instance) base = target(h);
    out[g] = compose(base, goal.relative);
    state[g] = 2;
    return out[g];
  };
  for (std::size_t g = 0; g < task.goals.size(); ++g) target(g);
  return out;
}

TaskSpec generate_task(int level, std::uint64_t seed, double tolerance) {
  task_family(level);
  std::seed_seq seq{static_cast<std::uint32_t>(level), static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32)};
  std::mt19937_64 rng(seq);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  TaskSpec task;
  task.level = level;
  task.n_interactions = 3 * (level + 1);
  task.rng_seed = seed;
  const int picks = level + 1;
  const int pads = level == 3 ? 1 : picks;
  const bool distractor = uniform(0.0, 1.0) < 0.5;

  int next_id = 1;
  for (int k = 0; k < picks; ++k)
    task.objects.push_back({next_id++, sim::kFirstPickClass + k, ObjectRole::Pick,
                            Vec3{uniform(0.018, 0.026), uniform(0.028, 0.038), uniform(0.015, 0.025)},
                            Pose{}});
  for (int k = 0; k < pads; ++k) {
    const double h = 0.045 + 0.004 * k;
    task.objects.push_back({next_id++, sim::kFirstPadClass + k, ObjectRole::Pad, Vec3{h, h + 0.015, 0.005}, Pose{}});
  }
  if (distractor)
    task.objects.push_back({next_id++, sim::kDistractorClass, ObjectRole::Distractor,
                            Vec3{0.03, 0.022, 0.035}, Pose{}});

  // Rejection sampling; restart the whole layout if an object cannot be placed.
  for (bool placed_all = false; !placed_all;) {
    placed_all = true;
    for (std::size_t i = 0; i < task.objects.size() && placed_all; ++i) {
      ObjectSpec& o = task.objects[i];
      bool placed = false;
      for (int attempt = 0; attempt < 2000 && !placed; ++attempt) {
        const Vec3 c{uniform(-kSpawnHalfRange, kSpawnHalfRange), uniform(-kSpawnHalfRange, kSpawnHalfRange),
                     o.half_extents.z};
        placed = true;
        for (std::size_t j = 0; j < i && placed; ++j) {
          const Vec3 d = c - task.objects[j].pose.translation();
          const double need = footprint_radius(o.half_extents) +
                              footprint_radius(task.objects[j].half_extents) + kSpawnClearance;
          placed = std::hypot(d.x, d.y) >= need;
        }
        if (placed) o.pose = Pose(Mat3::rot_z(uniform(-kMaxYaw, kMaxYaw)), c);
      }
      placed_all = placed;
    }
  }

  const int pad_base = picks + 1;
  for (int k = 0; k < picks; ++k) {
    const ObjectSpec& obj = task.objects[static_cast<std::size_t>(k)];
    GoalSpec g;
    g.instance_id = obj.instance_id;
    g.tolerance = tolerance;
    if (level == 3 && k > 0) {
      const ObjectSpec& below = task.objects[static_cast<std::size_t>(k - 1)];
      g.reference_instance = below.instance_id;
      g.relative = Pose(Mat3::rot_z(uniform(-0.2, 0.2)),
                        Vec3{0, 0, below.half_extents.z + obj.half_extents.z});
    } else {
      const ObjectSpec& pad = task.object(pad_base + (level == 3 ? 0 : k));
      g.reference_instance = pad.instance_id;
      g.relative = Pose(Mat3::rot_z(uniform(-0.3, 0.3)),
                        Vec3{0, 0, pad.half_extents.z + obj.half_extents.z});
    }
    task.goals.push_back(g);
  }
  const auto targets = resolve_goal_targets(task, spawn_poses(task));
  for (std::size_t g = 0; g < task.goals.size(); ++g) task.goals[g].target = targets[g];
  return task;
}

std::vector<Pose> perturbed_spawn(const TaskSpec& task, double translation, double rotation,
                                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Pose> out;
  for (const ObjectSpec& o : task.objects) {
    const double dx = translation * unit(rng);
    const double dy = translation * unit(rng);
    const double yaw = rotation * unit(rng);
    out.emplace_back(Mat3::rot_z(yaw) * o.pose.rotation(), o.pose.translation() + Vec3{dx, dy, 0.0});
  }
  return out;
}

namespace {

nlohmann::json pose_json(const Pose& p) { return p.to_matrix(); }

Pose pose_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 16) throw Error(ErrorCode::InvalidInput, "pose needs 16 values");
  return Pose::from_matrix(std::span<const double, 16>(v.data(), 16));
}

nlohmann::json vec_json(const Vec3& v) { return {v.x, v.y, v.z}; }

Vec3 vec_from(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw Error(ErrorCode::InvalidInput, "vector needs 3 values");
  return {v[0], v[1], v[2]};
}

}  // namespace

nlohmann::json to_json(const TaskSpec& task) {
  nlohmann::json objects = nlohmann::json::array();
  for (const ObjectSpec& o : task.objects)
    objects.push_back({{"instance_id", o.instance_id},
                       {"class_id", o.class_id},
                       {"role", std::string(to_string(o.role))},
                       {"half_extents", vec_json(o.half_extents)},
                       {"pose", pose_json(o.pose)}});
  nlohmann::json goals = nlohmann::json::array();
  for (const GoalSpec& g : task.goals)
    goals.push_back({{"instance_id", g.instance_id},
                     {"reference_instance", g.reference_instance},
                     {"relative", pose_json(g.relative)},
                     {"target", pose_json(g.target)},
                     {"tolerance", g.tolerance}});
  return {{"level", task.level},
          {"n_interactions", task.n_interactions},
          {"rng_seed", task.rng_seed},
          {"objects", objects},
          {"goals", goals}};
}

TaskSpec task_from_json(const nlohmann::json& j) {
  try {
    TaskSpec t;
    t.level = j.at("level").get<int>();
    t.n_interactions = j.at("n_interactions").get<int>();
    t.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    for (const auto& o : j.at("objects"))
      t.objects.push_back({o.at("instance_id").get<int>(), o.at("class_id").get<int>(),
                           parse_role(o.at("role").get<std::string>()), vec_from(o.at("half_extents")),
                           pose_from(o.at("pose"))});
    for (const auto& g : j.at("goals"))
      t.goals.push_back({g.at("instance_id").get<int>(), g.at("reference_instance").get<int>(),
                         pose_from(g.at("relative")), pose_from(g.at("target")),
                         g.at("tolerance").get<double>()});
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedJson, e.what());
  }
}

}  // namespace manilong
