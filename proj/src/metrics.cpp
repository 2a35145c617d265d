#include "manilong/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "manilong/error.hpp"

namespace manilong {

std::vector<double> fractional_ranks_descending(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

MetricsReport compute_metrics(std::span<const ModelScores> models) {
  if (models.empty()) throw Error(ErrorCode::InvalidInput, "no models to compare");
  using Cell = std::pair<std::string, std::uint64_t>;
  auto grid_of = [](const ModelScores& m) {
    std::set<Cell> cells;
    for (const SeedScore& s : m.scores)
      if (!cells.emplace(s.task, s.seed).second)
        throw Error(ErrorCode::GridMismatch, m.model + " repeats task " + s.task + " seed " + std::to_string(s.seed));
    return cells;
  };
  const auto reference = grid_of(models[0]);
  if (reference.empty()) throw Error(ErrorCode::InvalidInput, "model has no scores");
  for (std::size_t i = 1; i < models.size(); ++i)
    if (grid_of(models[i]) != reference)
      throw Error(ErrorCode::GridMismatch, models[i].model + " was evaluated on a different task/seed grid",
                  static_cast<int>(i));

  MetricsReport report;
  for (const SeedScore& s : models[0].scores)
    if (std::find(report.tasks.begin(), report.tasks.end(), s.task) == report.tasks.end())
      report.tasks.push_back(s.task);

  for (const ModelScores& m : models) {
    ModelReport mr;
    mr.model = m.model;
    for (const std::string& task : report.tasks) {
      std::vector<double> v;
      for (const SeedScore& s : m.scores)
        if (s.task == task) v.push_back(s.success);
      TaskStat ts;
      ts.task = task;
      ts.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double sq = 0.0;
      for (double x : v) sq += (x - ts.mean) * (x - ts.mean);
      ts.std = std::sqrt(sq / static_cast<double>(v.size()));
      mr.tasks.push_back(ts);
    }
    double total = 0.0;
    for (const TaskStat& ts : mr.tasks) total += ts.mean;
    mr.average_success = total / static_cast<double>(mr.tasks.size());
    report.models.push_back(std::move(mr));
  }

  for (std::size_t t = 0; t < report.tasks.size(); ++t) {
    std::vector<double> means;
    for (const ModelReport& mr : report.models) means.push_back(mr.tasks[t].mean);
    const auto ranks = fractional_ranks_descending(means);
    for (std::size_t i = 0; i < report.models.size(); ++i) report.models[i].tasks[t].rank = ranks[i];
  }
  for (ModelReport& mr : report.models) {
    double sum = 0.0;
    for (const TaskStat& ts : mr.tasks) sum += ts.rank;
    mr.average_rank = sum / static_cast<double>(mr.tasks.size());
  }
  return report;
}

nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::ordered_json models = nlohmann::ordered_json::array();
  for (const ModelReport& mr : report.models) {
    nlohmann::ordered_json tasks = nlohmann::ordered_json::array();
    for (const TaskStat& ts : mr.tasks)
      tasks.push_back({{"task", ts.task}, {"mean", ts.mean}, {"std", ts.std}, {"rank", ts.rank}});
    models.push_back({{"model", mr.model},
                      {"tasks", tasks},
                      {"average_success", mr.average_success},
                      {"average_rank", mr.average_rank}});
  }
  return nlohmann::json::parse(nlohmann::ordered_json{{"tasks", report.tasks}, {"models", models}}.dump());
}

namespace {

constexpr const char* kCsvHeader = "model,task,level,seed,trial,success,phases_completed";

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
T parse_number(const std::string& s, int line) {
  std::istringstream in(s);
  T v{};
  if (!(in >> v) || !in.eof()) throw Error(ErrorCode::InvalidInput, "bad number '" + s + "'", line);
  return v;
}

}  // namespace

void write_results_csv(std::ostream& out, std::span<const TrialRecord> rows) {
  out << kCsvHeader << '\n';
  for (const TrialRecord& r : rows)
    out << r.model << ',' << r.task << ',' << r.level << ',' << r.seed << ',' << r.trial << ','
        << (r.success ? 1 : 0) << ',' << r.phases_completed << '\n';
}

std::vector<TrialRecord> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidInput, "empty results file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw Error(ErrorCode::InvalidInput, "unexpected results header: " + line, 1);
  std::vector<TrialRecord> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 7) throw Error(ErrorCode::InvalidInput, "expected 7 fields", line_no);
    TrialRecord r;
    r.model = f[0];
    r.task = f[1];
    r.level = parse_number<int>(f[2], line_no);
    r.seed = parse_number<std::uint64_t>(f[3], line_no);
    r.trial = parse_number<int>(f[4], line_no);
    const int success = parse_number<int>(f[5], line_no);
    if (success != 0 && success != 1) throw Error(ErrorCode::InvalidInput, "success must be 0 or 1", line_no);
    r.success = success == 1;
    r.phases_completed = parse_number<int>(f[6], line_no);
    rows.push_back(r);
  }
  return rows;
}

std::vector<ModelScores> aggregate_trials(std::span<const TrialRecord> rows) {
  std::vector<ModelScores> out;
  std::map<std::pair<std::string, std::pair<std::string, std::uint64_t>>, std::pair<int, int>> counts;
  std::map<std::string, std::vector<std::pair<std::string, std::uint64_t>>> order;
  for (const TrialRecord& r : rows) {
    if (std::none_of(out.begin(), out.end(), [&](const ModelScores& m) { return m.model == r.model; }))
      out.push_back({r.model, {}});
    auto& c = counts[{r.model, {r.task, r.seed}}];
    if (c.second == 0) order[r.model].emplace_back(r.task, r.seed);
    c.first += r.success ? 1 : 0;
    c.second += 1;
  }
  for (ModelScores& m : out)
    for (const auto& cell : order[m.model]) {
      const auto& c = counts[{m.model, cell}];
      m.scores.push_back({cell.first, cell.second, 100.0 * c.first / c.second});
    }
  return out;
}

namespace {

constexpr std::string_view kScoresHeader = "model,task,seed,success";

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

void write_scores_csv(std::ostream& out, std::span<const ModelScores> models) {
  out << kScoresHeader << '\n';
  for (const ModelScores& m : models)
    for (const SeedScore& s : m.scores) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", s.success);
      out << m.model << ',' << s.task << ',' << s.seed << ',' << buf << '\n';
    }
}

std::vector<ModelScores> read_scores_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidInput, "empty scores file");
  if (strip_cr(line) != kScoresHeader) throw Error(ErrorCode::InvalidInput, "unexpected scores header: " + line, 1);
  std::vector<ModelScores> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 4) throw Error(ErrorCode::InvalidInput, "expected 4 fields", line_no);
    auto it = std::find_if(out.begin(), out.end(), [&](const ModelScores& m) { return m.model == f[0]; });
    if (it == out.end()) it = out.insert(out.end(), ModelScores{f[0], {}});
    it->scores.push_back({f[1], parse_number<std::uint64_t>(f[2], line_no), parse_number<double>(f[3], line_no)});
  }
  return out;
}

std::vector<ModelScores> read_any_results(std::istream& in) {
  std::string header;
  std::getline(in, header);
  std::stringstream rest;
  rest << strip_cr(header) << '\n' << in.rdbuf();
  if (strip_cr(header) == kScoresHeader) return read_scores_csv(rest);
  const auto rows = read_results_csv(rest);
  return aggregate_trials(rows);
}

namespace {

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string format_report(const MetricsReport& report, TableFormat format) {
  std::ostringstream out;
  if (format == TableFormat::Csv) {
    out << "model";
    for (const std::string& t : report.tasks) out << ',' << t << "_mean," << t << "_std," << t << "_rank";
    out << ",avg_success,avg_rank\n";
    for (const ModelReport& m : report.models) {
      out << m.model;
      for (const TaskStat& ts : m.tasks) out << ',' << fmt(ts.mean, 2) << ',' << fmt(ts.std, 2) << ',' << fmt(ts.rank, 2);
      out << ',' << fmt(m.average_success, 2) << ',' << fmt(m.average_rank, 3) << '\n';
    }
    return out.str();
  }
  out << "| Model |";
  for (const std::string& t : report.tasks) out << ' ' << t << " |";
  out << " Avg. Success | Avg. Rank |\n";
  out << "|---|";
  for (std::size_t i = 0; i < report.tasks.size(); ++i) out << "---|";
  out << "---|---|\n";
  for (const ModelReport& m : report.models) {
    out << "| " << m.model << " |";
    for (const TaskStat& ts : m.tasks) {
      out << ' ' << fmt(ts.mean, 1) << " ± " << fmt(ts.std, 1);
      out << " (" << fmt(ts.rank, 1) << ')';
      out << " |";
    }
    out << ' ' << fmt(m.average_success, 1) << " |";
    out << ' ' << fmt(m.average_rank, 2) << " |";
    out << '\n';
  }
  return out.str();
}

}  // namespace manilong
