#pragma once

#include "agentdistill/agents/agents.hpp"
#include "agentdistill/core/types.hpp"

#include <string>
#include <vector>

namespace agentdistill::eval {

struct TaskSummary {
  std::string task_id;
  int episodes = 0;
  int correct = 0;
  int calling_episodes = 0;  // episodes with at least one tool call
};

struct Metrics {
  double accuracy_pct = 0.0;
  double accuracy_std = 0.0;  // population std of per-repeat accuracy
  double calling_rate_pct = 0.0;
  int n_episodes = 0;
  std::vector<TaskSummary> per_task;  // sorted by task id
};

json to_json(const Metrics& m);
Metrics metrics_from_json(const json& j);

// Both throw EmptyResults on an empty input.
double compute_accuracy(const std::vector<agents::EpisodeResult>& results);
double compute_calling_rate(const std::vector<agents::EpisodeResult>& results);

// `repeats[r]` holds the episodes of pass r.
Metrics aggregate(const std::vector<std::vector<agents::EpisodeResult>>& repeats);

struct Report {
  std::string text;  // header line plus one aligned row
  json data;
};

// improvement = after mean - before mean, shown with one decimal and a
// direction marker.
Report emit_report(const Metrics& before, const Metrics& after, const std::string& label);

// "+48.4 ↑", "-5.0 ↓", "+0.0"
std::string format_improvement(double before_pct, double after_pct);

}  // namespace agentdistill::eval
