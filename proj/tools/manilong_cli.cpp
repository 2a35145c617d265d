#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "manilong/benchmark.hpp"
#include "manilong/config.hpp"
#include "manilong/error.hpp"
#include "manilong/metrics.hpp"
#include "manilong/segmenter.hpp"
#include "manilong/simbench.hpp"
#include "manilong/vlm.hpp"

#ifndef MANILONG_VERSION
#define MANILONG_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace manilong;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kConfig = 2, kIo = 3, kVlm = 4, kGrid = 5, kDecomposition = 6, kRuntime = 7 };

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid: return kConfig;
    case ErrorCode::IoError: return kIo;
    case ErrorCode::Transport:
    case ErrorCode::Timeout:
    case ErrorCode::MissingCredential: return kVlm;
    case ErrorCode::GridMismatch: return kGrid;
    case ErrorCode::MalformedJson:
    case ErrorCode::UnknownStageName:
    case ErrorCode::Overlap:
    case ErrorCode::Gap:
    case ErrorCode::CycleOrder:
    case ErrorCode::RangeMismatch:
    case ErrorCode::NoGraspDetected:
    case ErrorCode::TruncatedCycle:
    case ErrorCode::EmptyDecomposition: return kDecomposition;
    default: return kRuntime;
  }
}

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(ErrorCode::IoError, "cannot create output directory " + dir.string());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

void write_manifest(const fs::path& out_dir, const std::string& config_path, const BenchmarkConfig& config,
                    const std::string& command) {
  nlohmann::ordered_json m;
  m["command"] = command;
  m["config_path"] = config_path;
  m["config"] = to_json(config);
  m["output_dir"] = out_dir.string();
  m["tool_version"] = MANILONG_VERSION;
  m["timestamp"] = timestamp_utc();
  const fs::path path = out_dir / "manifest.json";
  auto out = open_out(path);
  out << m.dump(2) << '\n';
  finish(out, path);
}

BenchmarkConfig load(const std::string& path) {
  return path.empty() ? BenchmarkConfig{} : load_config(path);
}

Demo load_demo(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  try {
    return read_demo_jsonl(in);
  } catch (const Error& e) {
    throw Error(ErrorCode::IoError, path.string() + ": " + e.what());
  }
}

std::string cell_name(int level, std::uint64_t seed) {
  return "L" + std::to_string(level) + "_s" + std::to_string(seed);
}

// ---------------------------------------------------------------------------

struct GenDemosArgs {
  std::string config;
  std::string out_dir;
};

int cmd_gen_demos(const GenDemosArgs& args) {
  const BenchmarkConfig config = load(args.config);
  const fs::path out_dir(args.out_dir);
  prepare_dir(out_dir);
  write_manifest(out_dir, args.config, config, "gen-demos");
  for (int level : config.levels)
    for (std::uint64_t seed : config.seeds) {
      const TaskSpec task = generate_task(level, seed, config.sim.position_tolerance);
      const Demo demo = scripted_expert(task, config.sim, config.planner);
      const fs::path demo_path = out_dir / ("demo_" + cell_name(level, seed) + ".jsonl");
      const fs::path task_path = out_dir / ("task_" + cell_name(level, seed) + ".json");
      auto demo_out = open_out(demo_path);
      write_demo_jsonl(demo_out, demo);
      finish(demo_out, demo_path);
      auto task_out = open_out(task_path);
      task_out << to_json(task).dump(2) << '\n';
      finish(task_out, task_path);
      std::cout << task_family(level) << " level " << level << " seed " << seed << ": " << demo.size()
                << " frames, " << demo.scripted_phases.size() << " phases, " << task.objects.size()
                << " objects -> " << demo_path.filename().string() << '\n';
    }
  return kOk;
}

// ---------------------------------------------------------------------------

struct DecomposeArgs {
  std::string demo;
  std::string mode = "rule";
  std::string config;
  std::optional<std::string> url, model, api_key_env;
  std::optional<double> timeout;
  std::optional<int> retries;
  std::string task_type = "A";
  bool lenient = false;
};

int cmd_decompose(const DecomposeArgs& args) {
  const BenchmarkConfig config = load(args.config);
  const Demo demo = load_demo(args.demo);
  const std::vector<ProprioFrame> frames = demo.proprio();
  nlohmann::ordered_json out;
  if (args.mode == "rule") {
    out = decomposition_to_json(segment_rule_based(frames, config.pipeline.v_zero_threshold), "rule-based");
  } else {
    EndpointConfig endpoint = config.vlm;
    if (args.url) endpoint.url = *args.url;
    if (args.model) endpoint.model = *args.model;
    if (args.api_key_env) endpoint.api_key_env = *args.api_key_env;
    if (args.timeout) endpoint.timeout_s = *args.timeout;
    if (args.retries) endpoint.max_retries = *args.retries;
    const PromptDocument prompt = render_prompt(frames, parse_task_type(args.task_type));
    const std::string reply = call_chat_endpoint(prompt, endpoint);
    const Decomposition d = parse_response(reply, static_cast<int>(frames.size()), {args.lenient});
    out = decomposition_to_json(d, "vlm");
  }
  std::cout << out.dump(2) << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string config;
  std::string out_dir = "results";
  int jobs = 0;
  std::optional<std::string> mode, model;
  std::optional<int> trials;
  std::optional<double> perturbation;
  std::vector<int> levels;
  std::vector<std::uint64_t> seeds;
};

int cmd_evaluate(const EvaluateArgs& args) {
  BenchmarkConfig config = load(args.config);
  try {
    if (args.mode) config.pipeline.mode = parse_correspondence_mode(*args.mode);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigInvalid, e.what());
  }
  if (args.model) config.model = *args.model;
  if (args.trials) config.trials = *args.trials;
  if (args.perturbation) config.perturbation = *args.perturbation;
  if (!args.levels.empty()) config.levels = args.levels;
  if (!args.seeds.empty()) config.seeds = args.seeds;
  validate(config);

  const fs::path out_dir(args.out_dir);
  prepare_dir(out_dir);
  write_manifest(out_dir, args.config, config, "evaluate");
  const int jobs = args.jobs > 0 ? args.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  const auto started = std::chrono::steady_clock::now();
  const std::vector<TrialRecord> rows = run_benchmark(config, jobs);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const fs::path csv_path = out_dir / "results.csv";
  auto csv = open_out(csv_path);
  write_results_csv(csv, rows);
  finish(csv, csv_path);

  const std::vector<ModelScores> scores = aggregate_trials(rows);
  const MetricsReport report = compute_metrics(scores);
  const fs::path json_path = out_dir / "metrics.json";
  auto json = open_out(json_path);
  json << to_json(report).dump(2) << '\n';
  finish(json, json_path);

  std::map<int, std::pair<int, int>> per_level;
  for (const TrialRecord& r : rows) {
    per_level[r.level].first += r.success ? 1 : 0;
    per_level[r.level].second += 1;
  }
  std::cout << "| level | task | successes | rate |\n|---|---|---|---|\n";
  for (const auto& [level, c] : per_level) {
    char rate[32];
    std::snprintf(rate, sizeof rate, "%.1f%%", 100.0 * c.first / c.second);
    std::cout << "| " << level << " | " << task_family(level) << " | " << c.first << "/" << c.second << " | " << rate
              << " |\n";
  }
  std::cout << '\n' << format_report(report, TableFormat::Markdown);
  std::cout << "mode " << to_string(config.pipeline.mode) << ", " << rows.size() << " trials, " << jobs << " jobs, "
            << elapsed << " s\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> files;
  std::string format = "markdown";
  std::string json_out;
};

int cmd_report(const ReportArgs& args) {
  std::vector<ModelScores> models;
  for (const std::string& file : args.files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + file);
    std::vector<ModelScores> part;
    try {
      part = read_any_results(in);
    } catch (const Error& e) {
      throw Error(ErrorCode::IoError, file + ": " + e.what());
    }
    for (ModelScores& m : part) {
      auto it = std::find_if(models.begin(), models.end(), [&](const ModelScores& x) { return x.model == m.model; });
      if (it == models.end())
        models.push_back(std::move(m));
      else
        it->scores.insert(it->scores.end(), m.scores.begin(), m.scores.end());
    }
  }
  const MetricsReport report = compute_metrics(models);
  std::cout << format_report(report, args.format == "csv" ? TableFormat::Csv : TableFormat::Markdown);
  if (!args.json_out.empty()) {
    auto out = open_out(args.json_out);
    out << to_json(report).dump(2) << '\n';
    finish(out, args.json_out);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-shot long-horizon manipulation pipeline and tabletop benchmark"};
  app.set_version_flag("--version", MANILONG_VERSION);
  app.require_subcommand(1);

  GenDemosArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-demos", "Generate expert demonstrations and task specs");
  gen_cmd->add_option("-c,--config", gen.config, "TOML config");
  gen_cmd->add_option("-o,--out", gen.out_dir, "Output directory")->required();

  DecomposeArgs dec;
  auto* dec_cmd = app.add_subcommand("decompose", "Decompose a demonstration into interaction phases");
  dec_cmd->add_option("demo", dec.demo, "Demo JSONL file")->required();
  dec_cmd->add_option("--mode", dec.mode, "rule or vlm")->check(CLI::IsMember({"rule", "vlm"}));
  dec_cmd->add_option("-c,--config", dec.config, "TOML config ([vlm] endpoint settings)");
  dec_cmd->add_option("--endpoint", dec.url, "Chat-completion URL");
  dec_cmd->add_option("--model", dec.model, "Model name sent to the endpoint");
  dec_cmd->add_option("--api-key-env", dec.api_key_env, "Environment variable holding the API key");
  dec_cmd->add_option("--timeout", dec.timeout, "Request timeout in seconds");
  dec_cmd->add_option("--retries", dec.retries, "Retry count for transport errors");
  dec_cmd->add_option("--task-type", dec.task_type, "Prompt task type A-D")->check(CLI::IsMember({"A", "B", "C", "D"}));
  dec_cmd->add_flag("--lenient", dec.lenient, "Repair single-frame gaps in the response");

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Run the trial grid and write results");
  ev_cmd->add_option("-c,--config", ev.config, "TOML config");
  ev_cmd->add_option("-o,--out", ev.out_dir, "Output directory");
  ev_cmd->add_option("-j,--jobs", ev.jobs, "Worker threads (default: hardware concurrency)")->check(CLI::NonNegativeNumber);
  ev_cmd->add_option("--mode", ev.mode, "oracle, descriptor or random");
  ev_cmd->add_option("--model", ev.model, "Model name in the results");
  ev_cmd->add_option("--trials", ev.trials, "Trials per (level, seed)");
  ev_cmd->add_option("--perturbation", ev.perturbation, "Spawn translation perturbation (m)");
  ev_cmd->add_option("--levels", ev.levels, "Levels to run")->delimiter(',');
  ev_cmd->add_option("--seeds", ev.seeds, "Seeds to run")->delimiter(',');

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "Rank table from one or more results files");
  rep_cmd->add_option("results", rep.files, "results.csv or scores CSV files")->required();
  rep_cmd->add_option("--format", rep.format, "markdown or csv")->check(CLI::IsMember({"markdown", "csv"}));
  rep_cmd->add_option("--json", rep.json_out, "Also write the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen_demos(gen);
    if (*dec_cmd) return cmd_decompose(dec);
    if (*ev_cmd) return cmd_evaluate(ev);
    if (*rep_cmd) return cmd_report(rep);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what();
    if (e.index() >= 0) std::cerr << " (at index " << e.index() << ")";
    std::cerr << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
