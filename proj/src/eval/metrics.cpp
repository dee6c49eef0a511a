#include "agentdistill/eval/metrics.hpp"

#include "agentdistill/core/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

namespace agentdistill::eval {

namespace {

double round1(double v) {
  const double r = std::round(v * 10.0) / 10.0;
  return r == 0.0 ? 0.0 : r;  // no negative zero
}

std::string cell(const Metrics& m) { return fmt::format("{:.1f} ± {:.1f}", m.accuracy_pct, m.accuracy_std); }

// Display width, counting each UTF-8 code point once.
std::size_t width(const std::string& s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

std::string pad(const std::string& s, std::size_t w) { return s + std::string(w > width(s) ? w - width(s) : 0, ' '); }

json summary_json(const Metrics& m) {
  return {{"accuracy_pct", m.accuracy_pct},
          {"accuracy_std", m.accuracy_std},
          {"calling_rate_pct", m.calling_rate_pct},
          {"n_episodes", m.n_episodes}};
}

}  // namespace

json to_json(const Metrics& m) {
  json per_task = json::array();
  for (const auto& t : m.per_task) {
    per_task.push_back({{"task_id", t.task_id},
                        {"episodes", t.episodes},
                        {"correct", t.correct},
                        {"calling_episodes", t.calling_episodes}});
  }
  json out = summary_json(m);
  out["per_task"] = std::move(per_task);
  return out;
}

Metrics metrics_from_json(const json& j) {
  Metrics m;
  try {
    m.accuracy_pct = j.at("accuracy_pct").get<double>();
    m.accuracy_std = j.value("accuracy_std", 0.0);
    m.calling_rate_pct = j.value("calling_rate_pct", 0.0);
    m.n_episodes = j.value("n_episodes", 0);
    for (const auto& t : j.value("per_task", json::array())) {
      m.per_task.push_back({t.at("task_id").get<std::string>(), t.value("episodes", 0), t.value("correct", 0),
                            t.value("calling_episodes", 0)});
    }
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("metrics: ") + e.what());
  }
  return m;
}

double compute_accuracy(const std::vector<agents::EpisodeResult>& results) {
  if (results.empty()) throw EmptyResults();
  const auto correct = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.correct; });
  return 100.0 * static_cast<double>(correct) / static_cast<double>(results.size());
}

double compute_calling_rate(const std::vector<agents::EpisodeResult>& results) {
  if (results.empty()) throw EmptyResults();
  const auto calling =
      std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.tool_calls.empty(); });
  return 100.0 * static_cast<double>(calling) / static_cast<double>(results.size());
}

Metrics aggregate(const std::vector<std::vector<agents::EpisodeResult>>& repeats) {
  std::vector<agents::EpisodeResult> all;
  std::vector<double> means;
  for (const auto& pass : repeats) {
    if (pass.empty()) continue;
    means.push_back(compute_accuracy(pass));
    all.insert(all.end(), pass.begin(), pass.end());
  }
  if (all.empty()) throw EmptyResults();

  Metrics m;
  double mean = 0.0;
  for (double v : means) mean += v;
  mean /= static_cast<double>(means.size());
  double var = 0.0;
  for (double v : means) var += (v - mean) * (v - mean);
  m.accuracy_pct = mean;
  m.accuracy_std = std::sqrt(var / static_cast<double>(means.size()));
  m.calling_rate_pct = compute_calling_rate(all);
  m.n_episodes = static_cast<int>(all.size());

  std::map<std::string, TaskSummary> by_task;
  for (const auto& r : all) {
    auto& t = by_task[r.task_id];
    t.task_id = r.task_id;
    ++t.episodes;
    t.correct += r.correct ? 1 : 0;
    t.calling_episodes += r.tool_calls.empty() ? 0 : 1;
  }
  for (auto& [id, t] : by_task) m.per_task.push_back(std::move(t));
  return m;
}

std::string format_improvement(double before_pct, double after_pct) {
  const double delta = round1(after_pct - before_pct);
  if (delta > 0) return fmt::format("+{:.1f} ↑", delta);
  if (delta < 0) return fmt::format("-{:.1f} ↓", -delta);
  return "+0.0";
}

Report emit_report(const Metrics& before, const Metrics& after, const std::string& label) {
  const std::vector<std::string> header{"label", "before", "after", "improvement"};
  const std::vector<std::string> row{label, cell(before), cell(after),
                                     format_improvement(before.accuracy_pct, after.accuracy_pct)};
  std::vector<std::size_t> widths;
  for (std::size_t i = 0; i < header.size(); ++i) widths.push_back(std::max(width(header[i]), width(row[i])));
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += " | ";
      out += i + 1 == cells.size() ? cells[i] : pad(cells[i], widths[i]);
    }
    return out + "\n";
  };

  Report report;
  report.text = line(header) + line(row);
  const double delta = round1(after.accuracy_pct - before.accuracy_pct);
  report.data = {{"label", label},
                 {"before", summary_json(before)},
                 {"after", summary_json(after)},
                 {"improvement", delta},
                 {"direction", delta > 0 ? "up" : delta < 0 ? "down" : "none"}};
  return report;
}

}  // namespace agentdistill::eval
