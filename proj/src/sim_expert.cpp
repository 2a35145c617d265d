#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "manilong/error.hpp"
#include "manilong/simbench.hpp"

namespace manilong {

std::vector<ProprioFrame> Demo::proprio() const {
  std::vector<ProprioFrame> out;
  out.reserve(states.size());
  for (const TrajectoryState& s : states) out.push_back(s.proprio);
  return out;
}

namespace {

double ease_out(double tau) { return 1.0 - (1.0 - tau) * (1.0 - tau); }

Pose at_height(const Pose& p, double z) {
  return {p.rotation(), Vec3{p.translation().x, p.translation().y, z}};
}

class ExpertRecorder {
 public:
  ExpertRecorder(const TaskSpec& task, const SimConfig& sim, const PlanConfig& planner,
                 const std::vector<Pose>& spawn, std::mt19937_64* noise)
      : task_(task), sampler_(task, sim), planner_(planner), noise_(noise), poses_(spawn) {
    demo_.task = task;
    ee_ = home_pose(task);
    emit(ee_, true, false, true);
  }

  void run() {
    const auto targets = resolve_goal_targets(task_, poses_);
    const double safe = transit_height(task_);
    const ExpertTiming timing;
    for (std::size_t g = 0; g < task_.goals.size(); ++g) {
      const int instance = task_.goals[g].instance_id;
      const std::size_t idx = task_.object_index(instance);
      const Vec3 h = task_.objects[idx].half_extents;
      const Pose grasp = grasp_pose(poses_[idx], h);
      const Pose place = grasp_pose(targets[g], h);

      const int pre_start = g == 0 ? 0 : static_cast<int>(demo_.states.size());
      leg(at_height(ee_, safe), timing.retreat, true, false);
      transit(at_height(grasp, safe), timing.transit, true, static_cast<int>(2 * g));
      leg(grasp, timing.descend, true, true);
      emit(grasp, true, true, true);
      const int grasp_start = static_cast<int>(demo_.states.size());
      attached_ = instance;
      attached_index_ = idx;
      offset_ = grasp_offset(h);
      for (int k = 0; k < timing.grasp; ++k) emit(grasp, false, true, true);
      const int post_start = static_cast<int>(demo_.states.size());
      leg(at_height(grasp, safe), timing.retreat, false, false);
      transit(at_height(place, safe), timing.transit, false, static_cast<int>(2 * g + 1));
      leg(place, timing.descend, false, true);
      emit(place, true, true, true);  // release; detaches inside emit

      demo_.scripted_phases.push_back({PhaseKind::PreContact, pre_start, grasp_start - 1});
      demo_.scripted_phases.push_back({PhaseKind::Grasping, grasp_start, post_start - 1});
      demo_.scripted_phases.push_back(
          {PhaseKind::PostContact, post_start, static_cast<int>(demo_.states.size()) - 1});
      demo_.grasped_per_cycle.push_back(instance);
    }
  }

  Demo take() { return std::move(demo_); }

 private:
  void emit(const Pose& ee, bool open, bool allow, bool stationary = false) {
    ProprioFrame f;
    f.timestep = static_cast<int>(demo_.states.size());
    f.gripper_open = open;
    f.ee_pose = ee;
    if (!stationary) f.joint_velocities = joint_velocities_from_twist(ee_, ee, sim::kDt);
    ee_ = ee;
    if (attached_) poses_[attached_index_] = compose(ee_, offset_);
    if (open) attached_.reset();

    TrajectoryState s;
    s.cloud = sampler_.observe(poses_, noise_);
    s.proprio = f;
    s.attached_instance = attached_;
    demo_.states.push_back(std::move(s));
    demo_.allow_collision.push_back(allow);
    demo_.object_poses.push_back(poses_);
  }

  void leg(const Pose& to, int frames, bool open, bool allow) {
    const Pose from = ee_;
    for (int k = 1; k <= frames; ++k) emit(interpolate(from, to, ease_out(static_cast<double>(k) / frames)), open, allow);
  }

  void transit(const Pose& to, int frames, bool open, int leg_index) {
    PlanConfig cfg = planner_;
    cfg.rng_seed = planner_.rng_seed + static_cast<std::uint64_t>(leg_index);
    std::vector<Pose> path;
    try {
      path = plan_rrt_connect(make_world(task_, poses_, attached_), ee_, to, cfg);
    } catch (const Error& e) {
      throw Error(ErrorCode::ExpertPlanningFailed, std::string("transit leg: ") + e.what(), leg_index);
    }
    std::vector<double> cumulative{0.0};
    for (std::size_t i = 1; i < path.size(); ++i)
      cumulative.push_back(cumulative.back() + pose_distance(path[i - 1], path[i], cfg.rotation_weight));
    const double total = cumulative.back();
    for (int k = 1; k <= frames; ++k) {
      if (k == frames || total <= 0.0) {
        emit(k == frames ? to : path.front(), open, false);
        continue;
      }
      const double d = ease_out(static_cast<double>(k) / frames) * total;
      std::size_t seg = 1;
      while (seg + 1 < path.size() && cumulative[seg] < d) ++seg;
      const double len = cumulative[seg] - cumulative[seg - 1];
      const double s = len > 0.0 ? (d - cumulative[seg - 1]) / len : 1.0;
      emit(interpolate(path[seg - 1], path[seg], s), open, false);
    }
  }

  const TaskSpec& task_;
  SceneSampler sampler_;
  PlanConfig planner_;
  std::mt19937_64* noise_;
  std::vector<Pose> poses_;
  Pose ee_;
  std::optional<int> attached_;
  std::size_t attached_index_ = 0;
  Pose offset_;
  Demo demo_;
};

}  // namespace

Demo scripted_expert(const TaskSpec& task, const SimConfig& sim, const PlanConfig& planner,
                     const std::vector<Pose>& spawn, std::mt19937_64* noise) {
  if (spawn.size() != task.objects.size())
    throw Error(ErrorCode::InvalidInput, "one spawn pose per object required");
  ExpertRecorder rec(task, sim, planner, spawn, noise);
  rec.run();
  return rec.take();
}

Demo scripted_expert(const TaskSpec& task, const SimConfig& sim, const PlanConfig& planner) {
  return scripted_expert(task, sim, planner, spawn_poses(task));
}

void write_demo_jsonl(std::ostream& out, const Demo& demo) {
  for (std::size_t i = 0; i < demo.states.size(); ++i) {
    const TrajectoryState& s = demo.states[i];
    nlohmann::ordered_json line;
    line["t"] = s.proprio.timestep;
    line["gripper_open"] = s.proprio.gripper_open;
    line["joint_velocities"] = s.proprio.joint_velocities;
    line["ee_pose"] = s.proprio.ee_pose.to_matrix();
    line["attached"] = s.attached_instance ? nlohmann::ordered_json(*s.attached_instance) : nlohmann::ordered_json();
    line["allow_collision"] = i < demo.allow_collision.size() && demo.allow_collision[i];
    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    for (std::size_t j = 0; j < s.cloud.size(); ++j) {
      const Vec3& p = s.cloud.points[j];
      points.push_back({p.x, p.y, p.z, s.cloud.instance_id[j], s.cloud.class_id[j]});
    }
    line["points"] = std::move(points);
    out << line.dump() << '\n';
  }
}

Demo read_demo_jsonl(std::istream& in) {
  Demo demo;
  std::string text;
  int line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(text);
      TrajectoryState s;
      s.proprio.timestep = j.at("t").get<int>();
      s.proprio.gripper_open = j.at("gripper_open").get<bool>();
      const auto jv = j.at("joint_velocities").get<std::vector<double>>();
      if (jv.size() != 7) throw Error(ErrorCode::InvalidInput, "joint_velocities needs 7 values", line_no);
      std::copy(jv.begin(), jv.end(), s.proprio.joint_velocities.begin());
      const auto m = j.at("ee_pose").get<std::vector<double>>();
      if (m.size() != 16) throw Error(ErrorCode::InvalidInput, "ee_pose needs 16 values", line_no);
      s.proprio.ee_pose = Pose::from_matrix(std::span<const double, 16>(m.data(), 16));
      if (j.contains("attached") && !j["attached"].is_null()) s.attached_instance = j["attached"].get<int>();
      for (const auto& p : j.at("points")) {
        if (p.size() != 5) throw Error(ErrorCode::InvalidInput, "point needs 5 values", line_no);
        s.cloud.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()}, p[3].get<int>(),
                          p[4].get<int>());
      }
      demo.allow_collision.push_back(j.value("allow_collision", false));
      demo.states.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::MalformedJson, "line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return demo;
}

}  // namespace manilong
