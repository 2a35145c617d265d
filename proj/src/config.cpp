#include "manilong/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "manilong/error.hpp"

namespace manilong {

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); }

class Section {
 public:
  Section(const toml::table& root, const char* name) : name_(name) {
    const toml::node* node = root.get(name);
    if (node == nullptr) return;
    table_ = node->as_table();
    if (table_ == nullptr) invalid(std::string("[") + name + "] must be a table");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (table_ == nullptr) return;
    const toml::node* node = table_->get(key);
    if (node == nullptr) return;
    if constexpr (std::is_same_v<T, bool>) {
      auto v = node->value<bool>();
      if (!v || !node->is_boolean()) bad(key, "a boolean");
      out = *v;
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!node->is_string()) bad(key, "a string");
      out = *node->value<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!node->is_number()) bad(key, "a number");
      out = *node->value<double>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!node->is_integer()) bad(key, "an integer");
      const auto v = *node->value<std::int64_t>();
      if (std::is_unsigned_v<T> && v < 0) bad(key, "non-negative");
      out = static_cast<T>(v);
    } else {
      const toml::array* arr = node->as_array();
      if (arr == nullptr) bad(key, "an array of integers");
      out.clear();
      for (const toml::node& e : *arr) {
        if (!e.is_integer()) bad(key, "an array of integers");
        const auto v = *e.value<std::int64_t>();
        if (v < 0) bad(key, "non-negative");
        out.push_back(static_cast<typename T::value_type>(v));
      }
    }
  }

  void finish() const {
    if (table_ == nullptr) return;
    for (const auto& [key, node] : *table_)
      if (!seen_.count(std::string(key.str())))
        invalid(std::string("unknown key '") + std::string(key.str()) + "' in [" + name_ + "]");
  }

 private:
  [[noreturn]] void bad(const char* key, const char* what) const {
    invalid(std::string("[") + name_ + "] " + key + " must be " + what);
  }

  std::string name_;
  const toml::table* table_ = nullptr;
  std::set<std::string> seen_;
};

}  // namespace

BenchmarkConfig parse_config(std::string_view toml_text) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML parse error at line " << e.source().begin.line << ": " << e.description();
    invalid(msg.str());
  }
  for (const auto& [key, node] : root) {
    const std::string k(key.str());
    if (k != "benchmark" && k != "pipeline" && k != "planner" && k != "vlm" && k != "sim")
      invalid("unknown section [" + k + "]");
  }

  BenchmarkConfig c;
  Section bench(root, "benchmark");
  bench.read("model", c.model);
  bench.read("levels", c.levels);
  bench.read("seeds", c.seeds);
  bench.read("trials", c.trials);
  bench.read("perturbation", c.perturbation);
  bench.read("perturbation_rot", c.perturbation_rot);
  bench.finish();

  Section pipe(root, "pipeline");
  std::string mode(to_string(c.pipeline.mode));
  pipe.read("mode", mode);
  c.pipeline.mode = parse_correspondence_mode(mode);
  pipe.read("temperature", c.pipeline.temperature);
  pipe.read("match_threshold", c.pipeline.match_threshold);
  pipe.read("epsilon", c.pipeline.epsilon);
  pipe.read("stride", c.pipeline.stride);
  pipe.read("v_zero_threshold", c.pipeline.v_zero_threshold);
  pipe.read("routing", c.pipeline.routing);
  pipe.read("gripper_weight", c.pipeline.gripper_weight);
  pipe.read("descriptor_k", c.pipeline.descriptor_k);
  pipe.read("variants", c.pipeline.variants);
  pipe.read("variant_perturbation", c.pipeline.variant_perturbation);
  pipe.read("variant_perturbation_rot", c.pipeline.variant_perturbation_rot);
  pipe.finish();

  Section plan(root, "planner");
  plan.read("step_size", c.planner.step_size);
  plan.read("max_iterations", c.planner.max_iterations);
  plan.read("goal_bias", c.planner.goal_bias);
  plan.read("rng_seed", c.planner.rng_seed);
  plan.read("angular_step", c.planner.angular_step);
  plan.read("rotation_weight", c.planner.rotation_weight);
  plan.finish();

  Section vlm(root, "vlm");
  vlm.read("url", c.vlm.url);
  vlm.read("model", c.vlm.model);
  vlm.read("api_key_env", c.vlm.api_key_env);
  vlm.read("timeout_s", c.vlm.timeout_s);
  vlm.read("max_retries", c.vlm.max_retries);
  vlm.read("backoff_ms", c.vlm.backoff_ms);
  vlm.read("temperature", c.vlm.temperature);
  vlm.finish();

  Section sim(root, "sim");
  sim.read("surface_density", c.sim.surface_density);
  sim.read("table_density", c.sim.table_density);
  sim.read("noise_sigma", c.sim.noise_sigma);
  sim.read("position_tolerance", c.sim.position_tolerance);
  sim.read("rotation_tolerance", c.sim.rotation_tolerance);
  sim.read("attach_tolerance", c.sim.attach_tolerance);
  sim.finish();

  validate(c);
  return c;
}

BenchmarkConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

void validate(const BenchmarkConfig& c) {
  if (c.levels.empty()) invalid("[benchmark] levels must not be empty");
  for (int l : c.levels)
    if (l < 1 || l > 3) invalid("[benchmark] levels must be 1, 2 or 3");
  if (c.seeds.empty()) invalid("[benchmark] seeds must not be empty");
  if (c.trials < 1) invalid("[benchmark] trials must be >= 1");
  if (c.perturbation < 0 || c.perturbation_rot < 0) invalid("[benchmark] perturbations must be >= 0");
  if (c.model.empty() || c.model.find(',') != std::string::npos)
    invalid("[benchmark] model must be non-empty and comma-free");
  const PipelineConfig& p = c.pipeline;
  if (!(p.temperature > 0)) invalid("[pipeline] temperature must be > 0");
  if (!(p.match_threshold > 0 && p.match_threshold < 1)) invalid("[pipeline] match_threshold must lie in (0, 1)");
  if (!(p.epsilon > 0)) invalid("[pipeline] epsilon must be > 0");
  if (p.stride < 1) invalid("[pipeline] stride must be >= 1");
  if (!(p.v_zero_threshold > 0)) invalid("[pipeline] v_zero_threshold must be > 0");
  if (p.descriptor_k < 4) invalid("[pipeline] descriptor_k must be >= 4");
  if (p.variants < 1) invalid("[pipeline] variants must be >= 1");
  if (p.gripper_weight < 0) invalid("[pipeline] gripper_weight must be >= 0");
  try {
    c.planner.validate();
  } catch (const Error& e) {
    invalid(std::string("[planner] ") + e.what());
  }
  if (c.vlm.url.empty()) invalid("[vlm] url must not be empty");
  if (!(c.vlm.timeout_s > 0)) invalid("[vlm] timeout_s must be > 0");
  if (c.vlm.max_retries < 0 || c.vlm.backoff_ms < 0) invalid("[vlm] retries and backoff must be >= 0");
  if (!(c.sim.surface_density > 0 && c.sim.table_density > 0)) invalid("[sim] densities must be > 0");
  if (c.sim.noise_sigma < 0) invalid("[sim] noise_sigma must be >= 0");
  if (!(c.sim.position_tolerance > 0 && c.sim.rotation_tolerance > 0 && c.sim.attach_tolerance > 0))
    invalid("[sim] tolerances must be > 0");
}

nlohmann::ordered_json to_json(const BenchmarkConfig& c) {
  nlohmann::ordered_json j;
  j["benchmark"] = {{"model", c.model},         {"levels", c.levels},
                    {"seeds", c.seeds},         {"trials", c.trials},
                    {"perturbation", c.perturbation}, {"perturbation_rot", c.perturbation_rot}};
  const PipelineConfig& p = c.pipeline;
  j["pipeline"] = {{"mode", std::string(to_string(p.mode))},
                   {"temperature", p.temperature},
                   {"match_threshold", p.match_threshold},
                   {"epsilon", p.epsilon},
                   {"stride", p.stride},
                   {"v_zero_threshold", p.v_zero_threshold},
                   {"routing", p.routing},
                   {"gripper_weight", p.gripper_weight},
                   {"descriptor_k", p.descriptor_k},
                   {"variants", p.variants},
                   {"variant_perturbation", p.variant_perturbation},
                   {"variant_perturbation_rot", p.variant_perturbation_rot}};
  j["planner"] = {{"step_size", c.planner.step_size},
                  {"max_iterations", c.planner.max_iterations},
                  {"goal_bias", c.planner.goal_bias},
                  {"rng_seed", c.planner.rng_seed},
                  {"angular_step", c.planner.angular_step},
                  {"rotation_weight", c.planner.rotation_weight}};
  j["vlm"] = {{"url", c.vlm.url},
              {"model", c.vlm.model},
              {"api_key_env", c.vlm.api_key_env},
              {"timeout_s", c.vlm.timeout_s},
              {"max_retries", c.vlm.max_retries},
              {"backoff_ms", c.vlm.backoff_ms},
              {"temperature", c.vlm.temperature}};
  j["sim"] = {{"surface_density", c.sim.surface_density},
              {"table_density", c.sim.table_density},
              {"noise_sigma", c.sim.noise_sigma},
              {"position_tolerance", c.sim.position_tolerance},
              {"rotation_tolerance", c.sim.rotation_tolerance},
              {"attach_tolerance", c.sim.attach_tolerance}};
  return j;
}

}  // namespace manilong
