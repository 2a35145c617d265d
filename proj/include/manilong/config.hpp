#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "manilong/planner.hpp"
#include "manilong/simbench.hpp"
#include "manilong/vlm.hpp"

namespace manilong {

struct BenchmarkConfig {
  std::string model = "manilong-shot";
  std::vector<int> levels{1, 2, 3};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  int trials = 25;
  double perturbation = 0.03;
  double perturbation_rot = 0.1;
  PipelineConfig pipeline;
  PlanConfig planner;
  EndpointConfig vlm;
  SimConfig sim;
};

/// Parses the TOML sections [benchmark], [pipeline], [planner], [vlm] and [sim]. Missing
/// keys keep their defaults; unknown keys, wrong types and out-of-range values throw
/// ConfigInvalid.
BenchmarkConfig parse_config(std::string_view toml_text);
/// Throws IoError when the file cannot be read.
BenchmarkConfig load_config(const std::filesystem::path& path);

void validate(const BenchmarkConfig& config);

nlohmann::ordered_json to_json(const BenchmarkConfig& config);

}  // namespace manilong
