#pragma once

#include <functional>
#include <string>
#include <vector>

#include "manilong/config.hpp"
#include "manilong/metrics.hpp"

namespace manilong {

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads; rethrows the first exception.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

/// Task, demonstration and annotation for one (level, seed) cell.
struct BenchmarkCell {
  int level = 1;
  std::uint64_t seed = 0;
  Demo demo;
  DemoAnnotation annotation;
};

BenchmarkCell prepare_cell(const BenchmarkConfig& config, int level, std::uint64_t seed);

/// Every (level, seed, trial) rollout of the config, sorted by (level, seed, trial).
/// Results do not depend on `jobs`.
std::vector<TrialRecord> run_benchmark(const BenchmarkConfig& config, int jobs = 1);

}  // namespace manilong
