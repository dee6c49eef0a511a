#pragma once

#include "agentdistill/agents/agents.hpp"
#include "agentdistill/eval/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace agentdistill::eval {

struct BenchmarkSpec {
  std::filesystem::path dataset_path;
  TaskKind task_kind = TaskKind::game24;
  std::optional<std::size_t> sample_size;
  std::uint64_t seed = 0;
  int repeats = 3;
  agents::AgentConfig agent;
  std::optional<std::filesystem::path> box_root;
  int max_parallel = 4;
};

struct BenchmarkRun {
  Metrics metrics;
  std::vector<agents::EpisodeResult> results;  // sorted by task id, then repeat
  std::vector<int> repeat_of;                  // parallel to results
};

// Deterministic sample of `count` distinct indices from [0, n): indices are
// ranked by a counter-based hash of (seed, index), so the choice depends on
// nothing but these three numbers.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, std::uint64_t seed);

BenchmarkRun run_benchmark(const BenchmarkSpec& spec, const agents::EpisodeContext& ctx);

}  // namespace agentdistill::eval
