#include <chrono>
#include <cmath>
#include <numbers>

#include "manilong/error.hpp"
#include "manilong/simbench.hpp"

namespace manilong {

std::string_view to_string(CorrespondenceMode mode) {
  switch (mode) {
    case CorrespondenceMode::Oracle: return "oracle";
    case CorrespondenceMode::Descriptor: return "descriptor";
    case CorrespondenceMode::Random: return "random";
  }
  return "?";
}

CorrespondenceMode parse_correspondence_mode(std::string_view s) {
  if (s == "oracle") return CorrespondenceMode::Oracle;
  if (s == "descriptor") return CorrespondenceMode::Descriptor;
  if (s == "random") return CorrespondenceMode::Random;
  throw Error(ErrorCode::ConfigInvalid, "mode must be oracle, descriptor or random");
}

DemoAnnotation annotate_demo(const Demo& demo, const PipelineConfig& pipeline, const SimConfig& sim,
                             const PlanConfig& planner) {
  if (pipeline.variants < 1) throw Error(ErrorCode::InvalidInput, "need at least one variant demo");
  const TaskSpec& task = demo.task;
  DemoAnnotation out;
  out.decomposition = segment_rule_based(demo.proprio(), pipeline.v_zero_threshold);

  std::seed_seq seq{static_cast<std::uint32_t>(task.rng_seed), static_cast<std::uint32_t>(task.level), 0xA11u};
  std::mt19937_64 rng(seq);
  std::vector<Demo> variants;
  for (int attempt = 0; static_cast<int>(variants.size()) < pipeline.variants; ++attempt) {
    if (attempt >= 4 * pipeline.variants)
      throw Error(ErrorCode::ExpertPlanningFailed, "could not record variant demonstrations");
    const auto spawn = perturbed_spawn(task, pipeline.variant_perturbation, pipeline.variant_perturbation_rot, rng);
    try {
      Demo v = scripted_expert(task, sim, planner, spawn);
      if (v.size() != demo.size()) throw Error(ErrorCode::InvalidInput, "variant length differs from the demo");
      variants.push_back(std::move(v));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ExpertPlanningFailed) throw;
    }
  }

  const auto vocabulary = sim::class_vocabulary();
  const double last_t = static_cast<double>(std::max<std::size_t>(demo.size(), 2) - 1);
  const auto& phases = out.decomposition.phases;
  for (std::size_t p = 0; p < phases.size(); ++p) {
    const InteractionPhase& phase = phases[p];
    const Pose& pose_a = demo.states[static_cast<std::size_t>(phase.end)].proprio.ee_pose;
    std::optional<int> grasped;
    if (phase.kind == PhaseKind::PostContact)
      grasped = demo.states[static_cast<std::size_t>(phase.start)].attached_instance;
    const int first = static_cast<int>(out.steps.size());
    const auto times = sample_macro_steps(phase, pipeline.stride);
    for (std::size_t i = 0; i < times.size(); ++i) {
      const int t = times[i];
      const auto ti = static_cast<std::size_t>(t);
      std::vector<StatePair> pairs;
      for (const Demo& v : variants)
        pairs.push_back({&demo.states[ti], &v.states[ti], pose_a,
                         v.states[static_cast<std::size_t>(phase.end)].proprio.ee_pose});
      MacroStep step;
      step.phase_index = static_cast<int>(p);
      step.kind = phase.kind;
      step.timestep = t;
      step.last_in_phase = i + 1 == times.size();
      step.region = gt_invariant_region(pairs, phase.kind, grasped);
      step.region.state_ref = t;
      step.feature.scene = scene_descriptor(demo.states[ti].cloud, vocabulary);
      step.feature.gripper_open = demo.states[ti].proprio.gripper_open;
      step.feature.normalized_t = t / last_t;
      out.steps.push_back(std::move(step));
    }
    out.phase_steps.emplace_back(first, static_cast<int>(out.steps.size()) - 1);
  }
  for (std::size_t i = 0; i < out.steps.size(); ++i)
    out.steps[i].action_timestep = i + 1 < out.steps.size() ? out.steps[i + 1].timestep : out.steps[i].timestep;
  return out;
}

nlohmann::json to_json(const DemoAnnotation& annotation) {
  nlohmann::json steps = nlohmann::json::array();
  for (const MacroStep& s : annotation.steps)
    steps.push_back({{"phase", s.phase_index},
                     {"stage", std::string(stage_name(s.kind))},
                     {"t", s.timestep},
                     {"action_t", s.action_timestep},
                     {"region", to_json(s.region)}});
  return {{"steps", steps}};
}

namespace {

std::mt19937_64 make_rng(std::uint64_t seed, const TaskSpec& task) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(task.rng_seed), static_cast<std::uint32_t>(task.level)};
  return std::mt19937_64(seq);
}

class Rollout {
 public:
  Rollout(const Demo& demo, const DemoAnnotation& ann, const PipelineConfig& pipeline,
          const PlanConfig& planner, const SimConfig& sim, const RolloutOptions& options)
      : demo_(demo), task_(demo.task), ann_(ann), pipeline_(pipeline), planner_(planner), sim_(sim),
        options_(options), sampler_(task_, sim),
        rng_(make_rng(options.seed, task_)) {
    poses_ = perturbed_spawn(task_, options.perturbation, options.perturbation_rot, rng_);
    targets_ = resolve_goal_targets(task_, poses_);
    ee_ = home_pose(task_);
  }

  TrialResult run() {
    const auto started = std::chrono::steady_clock::now();
    TrialResult r;
    r.task_id = task_family(task_.level);
    r.level = task_.level;
    r.seed = task_.rng_seed;
    bool alive = true;
    for (const auto& [first, last] : ann_.phase_steps) {
      if (!(alive = run_phase(first, last))) break;
      ++r.phases_completed;
    }
    r.success = alive && goals_satisfied(task_, poses_, targets_, sim_, attached_);
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return r;
  }

 private:
  LabeledCloud observe() { return sampler_.observe(poses_, &rng_); }

  bool run_phase(int first, int last) {
    int cursor = first;
    while (cursor <= last) {
      int m = cursor;
      if (pipeline_.routing && cursor < last) {
        RouteFeature current;
        current.scene = scene_descriptor(observe(), sim::class_vocabulary());
        current.gripper_open = open_;
        current.normalized_t = ann_.steps[static_cast<std::size_t>(cursor)].feature.normalized_t;
        std::vector<RouteFeature> candidates;
        for (int i = cursor; i <= last; ++i) candidates.push_back(ann_.steps[static_cast<std::size_t>(i)].feature);
        m = cursor + static_cast<int>(route_state(current, candidates, pipeline_.gripper_weight).demo_index);
      }
      const MacroStep& step = ann_.steps[static_cast<std::size_t>(m)];
      const auto at = static_cast<std::size_t>(step.action_timestep);
      const bool want_open = demo_.states[at].proprio.gripper_open;
      const bool allow = at < demo_.allow_collision.size() && demo_.allow_collision[at];
      const bool key = step.last_in_phase || want_open != open_;
      cursor = m + 1;

      Pose target;
      std::vector<Pose> path;
      try {
        target = estimate_target(step, demo_.states[at].proprio.ee_pose);
        PlanConfig cfg = planner_;
        cfg.rng_seed = planner_.rng_seed + options_.seed * 7919u + static_cast<std::uint64_t>(m);
        path = plan_rrt_connect(make_world(task_, poses_, attached_), ee_, target, cfg, allow);
      } catch (const Error&) {
        if (key) return false;
        continue;
      }
      move_to(path.back());
      if (!want_open && open_) grasp();
      if (want_open && !open_) release();
    }
    return true;
  }

  Pose estimate_target(const MacroStep& step, const Pose& demo_action) {
    switch (pipeline_.mode) {
      case CorrespondenceMode::Random: return random_pose();
      case CorrespondenceMode::Oracle: return oracle_target(step, demo_action);
      case CorrespondenceMode::Descriptor: return descriptor_target(step, demo_action);
    }
    return demo_action;
  }

  Pose random_pose() {
    std::uniform_real_distribution<double> xy(-0.35, 0.35), z(0.0, transit_height(task_)),
        yaw(-std::numbers::pi, std::numbers::pi);
    const double x = xy(rng_), y = xy(rng_), h = z(rng_), a = yaw(rng_);
    return Pose(Mat3::rot_z(a) * Mat3::rot_x(std::numbers::pi), Vec3{x, y, h});
  }

  Pose oracle_target(const MacroStep& step, const Pose& demo_action) {
    const LabeledCloud& demo_cloud = demo_.states[static_cast<std::size_t>(step.timestep)].cloud;
    const LabeledCloud current = observe();
    const InvariantRegion now = region_of_instance(current, step.region.instance_id);
    if (now.indices.size() != step.region.indices.size())
      throw Error(ErrorCode::InsufficientMatches, "region instance not observed");
    // Sampling order is fixed per instance, so index order gives the true motion.
    WeightedPointSet a, b;
    for (std::size_t i = 0; i < now.indices.size(); ++i) {
      a.points.push_back(demo_cloud.points[step.region.indices[i]]);
      b.points.push_back(current.points[now.indices[i]]);
    }
    a.weights.assign(a.points.size(), 1.0);
    b.weights.assign(b.points.size(), 1.0);
    const Pose motion = solve_weighted_procrustes(a, b);

    CorrespondenceMatrix corr;
    corr.n_region = step.region.indices.size();
    corr.m_scene = now.indices.size();
    for (const auto& [i, j] :
         gt_correspondences(demo_cloud, step.region, current, now, demo_action, compose(motion, demo_action)))
      corr.pairs.push_back({i, j, 1.0});
    return regress_pose(corr, demo_cloud.points, current.points, demo_action, PairWeighting::Uniform);
  }

  Pose descriptor_target(const MacroStep& step, const Pose& demo_action) {
    const LabeledCloud& demo_cloud = demo_.states[static_cast<std::size_t>(step.timestep)].cloud;
    const LabeledCloud region = demo_cloud.select(step.region.indices);
    const LabeledCloud current = observe();
    const std::size_t k = pipeline_.descriptor_k;
    DescriptorSet h_region = point_descriptors(region, k);
    DescriptorSet h_scene;
    h_scene.dims = h_region.dims;
    std::vector<Vec3> scene_points;
    for (int instance : current.instances()) {
      const auto idx = current.indices_of_instance(instance);
      if (idx.size() < k) continue;
      const LabeledCloud seg = current.select(idx);
      const DescriptorSet d = point_descriptors(seg, k);
      h_scene.values.insert(h_scene.values.end(), d.values.begin(), d.values.end());
      scene_points.insert(scene_points.end(), seg.points.begin(), seg.points.end());
    }
    lift_for_distance_logits(h_region, h_scene);
    const CorrespondenceMatrix corr =
        match_descriptors(h_region, h_scene, pipeline_.temperature, pipeline_.match_threshold);
    return regress_pose(corr, region.points, scene_points, demo_action, PairWeighting::Soft);
  }

  void move_to(const Pose& target) {
    ee_ = target;
    if (attached_) poses_[attached_index_] = compose(ee_, offset_);
  }

  void grasp() {
    open_ = false;
    double best = sim_.attach_tolerance;
    for (std::size_t i = 0; i < task_.objects.size(); ++i) {
      const ObjectSpec& o = task_.objects[i];
      if (o.role == ObjectRole::Pad) continue;
      const double d = (grasp_pose(poses_[i], o.half_extents).translation() - ee_.translation()).norm();
      if (d <= best) {
        best = d;
        attached_ = o.instance_id;
        attached_index_ = i;
      }
    }
    if (attached_) offset_ = compose(inverse(ee_), poses_[attached_index_]);
  }

  void release() {
    open_ = true;
    attached_.reset();
  }

  const Demo& demo_;
  const TaskSpec& task_;
  const DemoAnnotation& ann_;
  const PipelineConfig& pipeline_;
  const PlanConfig& planner_;
  const SimConfig& sim_;
  const RolloutOptions& options_;
  SceneSampler sampler_;
  std::mt19937_64 rng_;
  std::vector<Pose> poses_;
  std::vector<Pose> targets_;
  Pose ee_;
  bool open_ = true;
  std::optional<int> attached_;
  std::size_t attached_index_ = 0;
  Pose offset_;
};

}  // namespace

TrialResult execute_rollout(const Demo& demo, const DemoAnnotation& annotation,
                            const PipelineConfig& pipeline, const PlanConfig& planner,
                            const SimConfig& sim, const RolloutOptions& options) {
  return Rollout(demo, annotation, pipeline, planner, sim, options).run();
}

}  // namespace manilong
