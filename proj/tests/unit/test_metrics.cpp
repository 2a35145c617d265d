#include <doctest.h>

#include <sstream>

#include "manilong/error.hpp"
#include "manilong/metrics.hpp"

using namespace manilong;

namespace {

ModelScores model(const std::string& name, const std::vector<double>& per_task) {
  ModelScores m{name, {}};
  for (std::size_t i = 0; i < per_task.size(); ++i) m.scores.push_back({"task" + std::to_string(i), 0, per_task[i]});
  return m;
}

}  // namespace

TEST_CASE("fractional ranks by hand") {
  CHECK(fractional_ranks_descending(std::vector<double>{3, 1, 2}) == std::vector<double>{1, 3, 2});
  CHECK(fractional_ranks_descending(std::vector<double>{5, 5, 1}) == std::vector<double>{1.5, 1.5, 3});
  CHECK(fractional_ranks_descending(std::vector<double>{0, 0, 0, 0}) == std::vector<double>{2.5, 2.5, 2.5, 2.5});
  CHECK(fractional_ranks_descending(std::vector<double>{1, 2, 2, 2}) == std::vector<double>{4, 2, 2, 2});
}

TEST_CASE("mean and population std over seeds") {
  ModelScores m{"m", {{"a", 0, 100}, {"a", 1, 50}, {"a", 2, 0}, {"b", 0, 40}, {"b", 1, 40}, {"b", 2, 40}}};
  const MetricsReport r = compute_metrics(std::vector<ModelScores>{m});
  REQUIRE(r.tasks == std::vector<std::string>{"a", "b"});
  CHECK(r.models[0].tasks[0].mean == doctest::Approx(50.0));
  CHECK(r.models[0].tasks[0].std == doctest::Approx(std::sqrt(5000.0 / 3.0)));
  CHECK(r.models[0].tasks[1].std == 0.0);
  CHECK(r.models[0].average_success == doctest::Approx(45.0));
  for (const TaskStat& t : r.models[0].tasks) CHECK(t.rank == 1.0);
  CHECK(r.models[0].average_rank == 1.0);
}

TEST_CASE("ties share ranks") {
  const std::vector<ModelScores> ms{model("x", {10, 5}), model("y", {10, 7})};
  const MetricsReport r = compute_metrics(ms);
  CHECK(r.models[0].tasks[0].rank == 1.5);
  CHECK(r.models[1].tasks[0].rank == 1.5);
  CHECK(r.models[0].tasks[1].rank == 2.0);
  CHECK(r.models[1].average_rank == doctest::Approx(1.25));
}

TEST_CASE("two published result sets") {
  const std::vector<double> imop{4.0, 1.3, 2.7, 5.3, 1.3, 2.7, 4.0, 4.0, 5.3, 40.0,
                                 38.7, 4.0, 1.3, 9.3, 1.3, 1.3, 1.3, 2.7, 1.3, 1.3};
  const std::vector<double> ours{28.0, 42.7, 37.3, 48.0, 18.7, 14.7, 24.0, 30.7, 26.7, 65.3,
                                 76.0, 28.0, 18.7, 42.7, 29.3, 12.0, 9.3, 17.3, 8.0, 8.0};
  const MetricsReport r = compute_metrics(std::vector<ModelScores>{model("IMOP", imop), model("ManiLong-Shot", ours)});
  CHECK(r.models[1].average_rank == 1.0);
  CHECK(r.models[0].average_rank == 2.0);
}

TEST_CASE("grid mismatch") {
  auto code = [](const std::vector<ModelScores>& ms) {
    try {
      compute_metrics(ms);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidInput;
  };
  CHECK(code({model("x", {1, 2}), model("y", {1, 2, 3})}) == ErrorCode::GridMismatch);
  ModelScores shifted = model("y", {1, 2});
  shifted.scores[1].seed = 9;
  CHECK(code({model("x", {1, 2}), shifted}) == ErrorCode::GridMismatch);
  ModelScores dup{"z", {{"a", 0, 1}, {"a", 0, 2}}};
  CHECK(code({dup}) == ErrorCode::GridMismatch);
  CHECK_THROWS_AS(compute_metrics(std::vector<ModelScores>{}), Error);
}

TEST_CASE("trial csv round trip and aggregation") {
  std::vector<TrialRecord> rows;
  for (int seed = 0; seed < 2; ++seed)
    for (int trial = 0; trial < 4; ++trial) rows.push_back({"m", "place-2", 1, static_cast<std::uint64_t>(seed), trial, trial < seed + 2, 3});
  std::stringstream ss;
  write_results_csv(ss, rows);
  CHECK(ss.str().rfind("model,task,level,seed,trial,success,phases_completed\n", 0) == 0);
  CHECK(read_results_csv(ss) == rows);
  const auto agg = aggregate_trials(rows);
  REQUIRE(agg.size() == 1);
  REQUIRE(agg[0].scores.size() == 2);
  CHECK(agg[0].scores[0].success == 50.0);
  CHECK(agg[0].scores[1].success == 75.0);

  std::stringstream bad("model,task\nx,y\n");
  CHECK_THROWS_AS(read_results_csv(bad), Error);
  std::stringstream bad_row("model,task,level,seed,trial,success,phases_completed\nm,t,1,0,0,2,0\n");
  CHECK_THROWS_AS(read_results_csv(bad_row), Error);
}

TEST_CASE("score csv and autodetection") {
  const std::vector<ModelScores> ms{model("a", {12.5, 1.0 / 3.0}), model("b", {3, 4})};
  std::stringstream ss;
  write_scores_csv(ss, ms);
  std::stringstream copy(ss.str());
  const auto back = read_scores_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].scores[1].success == ms[0].scores[1].success);
  CHECK(read_any_results(copy)[1].scores[0].success == 3.0);

  std::vector<TrialRecord> rows{{"m", "t", 1, 0, 0, true, 6}};
  std::stringstream trials;
  write_results_csv(trials, rows);
  CHECK(read_any_results(trials)[0].scores[0].success == 100.0);
}

TEST_CASE("report formatting") {
  const MetricsReport r = compute_metrics(std::vector<ModelScores>{model("x", {50, 20}), model("y", {40, 30})});
  const std::string md = format_report(r, TableFormat::Markdown);
  CHECK(md.find("| Model |") != std::string::npos);
  CHECK(md.find("50.0 ± 0.0 (1.0)") != std::string::npos);
  CHECK(md.find("Avg. Rank") != std::string::npos);
  const std::string csv = format_report(r, TableFormat::Csv);
  CHECK(csv.find("model,task0_mean") == 0);
  const auto j = to_json(r);
  CHECK(j["models"].size() == 2);
}
