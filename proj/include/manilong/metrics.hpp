#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "manilong/simbench.hpp"

namespace manilong {

/// Success rate (percent) of one model on one (task, seed) cell.
struct SeedScore {
  std::string task;
  std::uint64_t seed = 0;
  double success = 0.0;
};

struct ModelScores {
  std::string model;
  std::vector<SeedScore> scores;
};

struct TaskStat {
  std::string task;
  double mean = 0.0;
  double std = 0.0;  // population std across seeds
  double rank = 1.0;
};

struct ModelReport {
  std::string model;
  std::vector<TaskStat> tasks;  // same order as MetricsReport::tasks
  double average_success = 0.0;
  double average_rank = 0.0;
};

struct MetricsReport {
  std::vector<std::string> tasks;  // first-appearance order of the first model
  std::vector<ModelReport> models;
};

/// Per-task mean/std over seeds, unweighted task average, per-task descending ranks with
/// average ranks for ties, and mean rank. Throws GridMismatch when models disagree on
/// the (task, seed) grid or a cell repeats; InvalidInput for no models.
MetricsReport compute_metrics(std::span<const ModelScores> models);

/// Ranks of `values` in descending order, ties sharing the average of their positions.
std::vector<double> fractional_ranks_descending(std::span<const double> values);

nlohmann::json to_json(const MetricsReport& report);

struct TrialRecord {
  std::string model;
  std::string task;
  int level = 1;
  std::uint64_t seed = 0;
  int trial = 0;
  bool success = false;
  int phases_completed = 0;

  auto operator<=>(const TrialRecord&) const = default;
};

void write_results_csv(std::ostream& out, std::span<const TrialRecord> rows);
/// Throws InvalidInput on a bad header or row.
std::vector<TrialRecord> read_results_csv(std::istream& in);

/// Groups trial rows into per-model (task, seed) success rates, models in
/// first-appearance order.
std::vector<ModelScores> aggregate_trials(std::span<const TrialRecord> rows);

/// Per-cell success rates, header `model,task,seed,success` (percent).
void write_scores_csv(std::ostream& out, std::span<const ModelScores> models);
/// Throws InvalidInput on a bad header or row.
std::vector<ModelScores> read_scores_csv(std::istream& in);

/// Reads either CSV layout, chosen by its header.
std::vector<ModelScores> read_any_results(std::istream& in);

enum class TableFormat { Markdown, Csv };

/// "mean ± std (rank)" per task, average success and average rank.
std::string format_report(const MetricsReport& report, TableFormat format);

}  // namespace manilong
