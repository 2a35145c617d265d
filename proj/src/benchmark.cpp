#include "manilong/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace manilong {

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n;
        }
      }
    });
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

BenchmarkCell prepare_cell(const BenchmarkConfig& config, int level, std::uint64_t seed) {
  BenchmarkCell cell;
  cell.level = level;
  cell.seed = seed;
  cell.demo = scripted_expert(generate_task(level, seed, config.sim.position_tolerance), config.sim, config.planner);
  cell.annotation = annotate_demo(cell.demo, config.pipeline, config.sim, config.planner);
  return cell;
}

std::vector<TrialRecord> run_benchmark(const BenchmarkConfig& config, int jobs) {
  validate(config);
  std::vector<BenchmarkCell> cells(config.levels.size() * config.seeds.size());
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    cells[i] = prepare_cell(config, config.levels[i / config.seeds.size()], config.seeds[i % config.seeds.size()]);
  });

  const auto trials = static_cast<std::size_t>(config.trials);
  std::vector<TrialRecord> rows(cells.size() * trials);
  parallel_for(rows.size(), jobs, [&](std::size_t i) {
    const BenchmarkCell& cell = cells[i / trials];
    const int trial = static_cast<int>(i % trials);
    RolloutOptions options;
    options.perturbation = config.perturbation;
    options.perturbation_rot = config.perturbation_rot;
    options.seed = static_cast<std::uint64_t>(trial);
    const TrialResult r = execute_rollout(cell.demo, cell.annotation, config.pipeline, config.planner, config.sim, options);
    rows[i] = {config.model, r.task_id, cell.level, cell.seed, trial, r.success, r.phases_completed};
  });
  std::sort(rows.begin(), rows.end(), [](const TrialRecord& a, const TrialRecord& b) {
    return std::tie(a.level, a.seed, a.trial) < std::tie(b.level, b.seed, b.trial);
  });
  return rows;
}

}  // namespace manilong
