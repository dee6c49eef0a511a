#include "agentdistill/eval/benchmark.hpp"

#include "agentdistill/boxer/boxer.hpp"
#include "agentdistill/core/log.hpp"
#include "agentdistill/core/parallel.hpp"
#include "agentdistill/eval/dataset.hpp"

#include <algorithm>
#include <numeric>

namespace agentdistill::eval {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, std::uint64_t seed) {
  if (count > n) throw ConfigError("sample_size " + std::to_string(count) + " exceeds dataset size " + std::to_string(n));
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
  keyed.reserve(n);
  for (std::size_t i = 0; i < n; ++i) keyed.emplace_back(splitmix64(splitmix64(seed) ^ splitmix64(i)), i);
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(keyed[i].second);
  return out;
}

BenchmarkRun run_benchmark(const BenchmarkSpec& spec, const agents::EpisodeContext& ctx) {
  if (spec.repeats < 1) throw ConfigError("repeats must be at least 1");
  const auto dataset = load_dataset(spec.dataset_path, spec.task_kind);
  std::vector<std::size_t> chosen;
  if (spec.sample_size) {
    chosen = sample_indices(dataset.size(), *spec.sample_size, spec.seed);
  } else {
    chosen.resize(dataset.size());
    std::iota(chosen.begin(), chosen.end(), 0);
  }
  if (chosen.empty()) throw EmptyResults();

  McpBox box;
  std::filesystem::path box_root;
  if (spec.box_root) {
    box = boxer::load_box(*spec.box_root);
    box_root = *spec.box_root;
  }

  const std::size_t per_pass = chosen.size();
  const std::size_t total = per_pass * static_cast<std::size_t>(spec.repeats);
  auto results = parallel_map(total, spec.max_parallel, [&](std::size_t k) {
    if (ctx.cancel && ctx.cancel->load()) throw Interrupted();
    const auto& task = dataset[chosen[k % per_pass]];
    return spec.agent.role == AgentRole::teacher ? agents::run_teacher_episode(task, spec.agent, ctx)
                                                 : agents::run_student_episode(task, box, box_root, spec.agent, ctx);
  });

  std::vector<std::vector<agents::EpisodeResult>> passes(static_cast<std::size_t>(spec.repeats));
  std::vector<std::pair<std::size_t, int>> order;  // (result index, repeat)
  for (std::size_t k = 0; k < total; ++k) {
    passes[k / per_pass].push_back(results[k]);
    order.emplace_back(k, static_cast<int>(k / per_pass));
  }
  std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    if (results[a.first].task_id != results[b.first].task_id) return results[a.first].task_id < results[b.first].task_id;
    return a.second < b.second;
  });

  BenchmarkRun run;
  run.metrics = aggregate(passes);
  for (const auto& [k, r] : order) {
    run.results.push_back(results[k]);
    run.repeat_of.push_back(r);
  }
  return run;
}

}  // namespace agentdistill::eval
