#include <doctest.h>

#include "manilong/config.hpp"
#include "manilong/error.hpp"

using namespace manilong;

namespace {

ErrorCode config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidInput;
}

}  // namespace

TEST_CASE("defaults") {
  const BenchmarkConfig c = parse_config("");
  CHECK(c.levels == std::vector<int>{1, 2, 3});
  CHECK(c.seeds.size() == 5);
  CHECK(c.trials == 25);
  CHECK(c.pipeline.mode == CorrespondenceMode::Oracle);
  CHECK(c.vlm.api_key_env == "OPENAI_API_KEY");
}

TEST_CASE("overrides") {
  const BenchmarkConfig c = parse_config(R"(
[benchmark]
model = "mine"
levels = [2]
seeds = [7, 8]
trials = 3
perturbation = 0.01

[pipeline]
mode = "descriptor"
temperature = 0.2
stride = 4
routing = false

[planner]
step_size = 0.03
rng_seed = 11

[vlm]
url = "http://localhost:9/v1/chat"
max_retries = 5

[sim]
noise_sigma = 0.001
)");
  CHECK(c.model == "mine");
  CHECK(c.levels == std::vector<int>{2});
  CHECK(c.seeds == std::vector<std::uint64_t>{7, 8});
  CHECK(c.trials == 3);
  CHECK(c.perturbation == 0.01);
  CHECK(c.pipeline.mode == CorrespondenceMode::Descriptor);
  CHECK(c.pipeline.temperature == 0.2);
  CHECK(c.pipeline.stride == 4);
  CHECK_FALSE(c.pipeline.routing);
  CHECK(c.planner.step_size == 0.03);
  CHECK(c.planner.rng_seed == 11);
  CHECK(c.vlm.url == "http://localhost:9/v1/chat");
  CHECK(c.vlm.max_retries == 5);
  CHECK(c.sim.noise_sigma == 0.001);
  CHECK(to_json(c)["benchmark"]["model"] == "mine");
}

TEST_CASE("invalid configs") {
  CHECK(config_error("[benchmark]\nunknown = 1\n") == ErrorCode::ConfigInvalid);
  CHECK(config_error("[nowhere]\n") == ErrorCode::ConfigInvalid);
  CHECK(config_error("[benchmark]\ntrials = \"many\"\n") == ErrorCode::ConfigInvalid);
  CHECK(config_error("[benchmark]\nlevels = [4]\n") == ErrorCode::ConfigInvalid);
  CHECK(config_error("[benchmark]\ntrials = 0\n") == ErrorCode::ConfigInvalid);
  CHECK(config_error("[planner]\ngoal_bias = 1.5\n") == ErrorCode::ConfigInvalid);
  CHECK(config_error("[pipeline]\nmode = \"magic\"\n") == ErrorCode::ConfigInvalid);
  CHECK(config_error("not toml [") == ErrorCode::ConfigInvalid);
  try {
    load_config("/nonexistent/dir/config.toml");
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}
