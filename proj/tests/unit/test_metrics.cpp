#include "doctest.h"

#include "agentdistill/core/temp_dir.hpp"
#include "agentdistill/eval/benchmark.hpp"
#include "agentdistill/eval/metrics.hpp"
#include "model_stub.hpp"
#include "paths.hpp"
#include "scripted_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace agentdistill;
using namespace agentdistill::eval;
using agents::EpisodeResult;

namespace {

EpisodeResult episode(const std::string& id, bool correct, bool called) {
  EpisodeResult r;
  r.task_id = id;
  r.correct = correct;
  if (called) r.tool_calls.push_back({"c", "t", "d", false, 0});
  return r;
}

std::vector<EpisodeResult> mixed(int correct, int calling, int n) {
  std::vector<EpisodeResult> out;
  for (int i = 0; i < n; ++i) out.push_back(episode("t" + std::to_string(i), i < correct, i < calling));
  return out;
}

Metrics summary(double mean, double sd) {
  Metrics m;
  m.accuracy_pct = mean;
  m.accuracy_std = sd;
  return m;
}

// Reference version of the documented sampler: rank every index by
// splitmix64(splitmix64(seed) ^ splitmix64(index)) and keep the lowest.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<std::size_t> reference_sample(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::make_pair(mix(mix(seed) ^ mix(a)), a) < std::make_pair(mix(mix(seed) ^ mix(b)), b);
  });
  idx.resize(k);
  return idx;
}

agents::AgentConfig scripted_student() {
  agents::AgentConfig c;
  c.role = AgentRole::student;
  c.model_id = "scripted-student";
  c.system_prompt_id = "agents/student";
  return c;
}

}  // namespace

TEST_CASE("accuracy and calling rate are plain percentages") {
  CHECK(compute_accuracy(mixed(2, 0, 4)) == doctest::Approx(50.0));
  CHECK(compute_accuracy(mixed(4, 0, 4)) == doctest::Approx(100.0));
  CHECK(compute_accuracy(mixed(0, 0, 3)) == doctest::Approx(0.0));
  CHECK_THROWS_AS(compute_accuracy({}), EmptyResults);

  CHECK(compute_calling_rate(mixed(0, 3, 4)) == doctest::Approx(75.0));
  CHECK(compute_calling_rate(mixed(0, 4, 4)) == doctest::Approx(100.0));
  CHECK(compute_calling_rate(mixed(0, 0, 4)) == doctest::Approx(0.0));
  CHECK_THROWS_AS(compute_calling_rate({}), EmptyResults);
}

TEST_CASE("metrics do not depend on result order") {
  std::mt19937 rng(1234);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 40);
    std::vector<EpisodeResult> results;
    for (int i = 0; i < n; ++i) results.push_back(episode("t" + std::to_string(i % 7), rng() % 2, rng() % 3 == 0));
    const double acc = compute_accuracy(results);
    const double rate = compute_calling_rate(results);
    CHECK(acc >= 0.0);
    CHECK(acc <= 100.0);
    CHECK(rate >= 0.0);
    CHECK(rate <= 100.0);
    const auto agg = aggregate({results});
    std::shuffle(results.begin(), results.end(), rng);
    CHECK(compute_accuracy(results) == acc);
    CHECK(compute_calling_rate(results) == rate);
    const auto shuffled = aggregate({results});
    CHECK(to_json(shuffled) == to_json(agg));
  }
}

TEST_CASE("aggregation takes the population std over repeat means") {
  const auto m = aggregate({mixed(2, 1, 4), mixed(4, 4, 4), mixed(3, 0, 4)});
  const std::vector<double> means{50.0, 100.0, 75.0};
  double mean = 0.0;
  for (double v : means) mean += v / 3.0;
  double var = 0.0;
  for (double v : means) var += (v - mean) * (v - mean) / 3.0;
  CHECK(m.accuracy_pct == doctest::Approx(mean));
  CHECK(m.accuracy_std == doctest::Approx(std::sqrt(var)));
  CHECK(m.calling_rate_pct == doctest::Approx(100.0 * 5 / 12));
  CHECK(m.n_episodes == 12);
  REQUIRE(m.per_task.size() == 4);
  CHECK(m.per_task[0].task_id == "t0");
  CHECK(m.per_task[0].episodes == 3);
  CHECK(m.per_task[0].correct == 3);
  CHECK(m.per_task[0].calling_episodes == 2);

  const auto single = aggregate({mixed(1, 0, 4)});
  CHECK(single.accuracy_std == 0.0);
  CHECK_THROWS_AS(aggregate({}), EmptyResults);
  CHECK_THROWS_AS(aggregate({{}, {}}), EmptyResults);

  const auto back = metrics_from_json(to_json(m));
  CHECK(to_json(back) == to_json(m));
  CHECK_THROWS_AS(metrics_from_json(json{{"calling_rate_pct", 1}}), ParseError);
}

TEST_CASE("report rows show signed improvements") {
  const auto gpt35 = emit_report(summary(34.3, 3.2), summary(82.7, 0.6), "GPT-3.5-turbo");
  CHECK(gpt35.text.find("34.3 ± 3.2") != std::string::npos);
  CHECK(gpt35.text.find("82.7 ± 0.6") != std::string::npos);
  CHECK(gpt35.text.find("+48.4 ↑") != std::string::npos);
  CHECK(gpt35.data["improvement"].get<double>() == doctest::Approx(48.4));
  CHECK(gpt35.data["direction"] == "up");
  CHECK(gpt35.data["before"]["accuracy_pct"].get<double>() == doctest::Approx(34.3));

  CHECK(format_improvement(49.3, 59.3) == "+10.0 ↑");
  CHECK(format_improvement(50.0, 50.0) == "+0.0");
  CHECK(format_improvement(60.0, 55.0) == "-5.0 ↓");
  CHECK(format_improvement(10.0, 10.04) == "+0.0");

  const auto flat = emit_report(summary(50, 0), summary(50, 0), "x");
  CHECK(flat.data["improvement"].get<double>() == 0.0);
  CHECK(flat.data["direction"] == "none");

  // Header and row line up column by column.
  const auto newline = gpt35.text.find('\n');
  const std::string header = gpt35.text.substr(0, newline);
  const std::string row = gpt35.text.substr(newline + 1);
  CHECK(header.find(" | before") == row.find(" | 34.3"));
}

TEST_CASE("seeded sampling is deterministic and matches the reference ranking") {
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xdeadbeefULL}) {
    const auto a = sample_indices(100, 10, seed);
    CHECK(a == sample_indices(100, 10, seed));
    CHECK(a == reference_sample(100, 10, seed));
    CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 10);
    for (auto i : a) CHECK(i < 100);
  }
  CHECK(sample_indices(100, 10, 1) != sample_indices(100, 10, 2));
  CHECK(sample_indices(5, 5, 3).size() == 5);
  CHECK(sample_indices(5, 0, 3).empty());
  CHECK_THROWS_AS(sample_indices(5, 6, 3), ConfigError);
}

TEST_CASE("benchmarks over the fixture dataset") {
  PromptLibrary prompts;
  ModelStub model([](const llm::ChatRequest& r, int) { return scripted::reply(r).content; });
  const agents::EpisodeContext ctx{*model.gateway, prompts, {}, nullptr};
  BenchmarkSpec spec;
  spec.dataset_path = testing_paths::source_dir() / "fixtures" / "game24.jsonl";
  spec.agent = scripted_student();

  SUBCASE("one repeat has zero spread") {
    spec.repeats = 1;
    const auto run = run_benchmark(spec, ctx);
    CHECK(run.metrics.n_episodes == 8);
    CHECK(run.metrics.accuracy_std == 0.0);
    CHECK(run.metrics.accuracy_pct == doctest::Approx(12.5));
    CHECK(run.metrics.calling_rate_pct == 0.0);
  }
  SUBCASE("samples and repeats") {
    spec.sample_size = 3;
    spec.seed = 9;
    spec.repeats = 2;
    const auto first = run_benchmark(spec, ctx);
    const auto second = run_benchmark(spec, ctx);
    CHECK(first.metrics.n_episodes == 6);
    CHECK(to_json(first.metrics) == to_json(second.metrics));
    REQUIRE(first.results.size() == 6);
    CHECK(first.repeat_of == std::vector<int>{0, 1, 0, 1, 0, 1});
    for (std::size_t i = 0; i + 1 < first.results.size(); ++i)
      CHECK(first.results[i].task_id <= first.results[i + 1].task_id);
    CHECK(first.metrics.per_task.size() == 3);
  }
  SUBCASE("with the fixture box every episode calls the solver") {
    spec.repeats = 1;
    spec.box_root = testing_paths::source_dir() / "fixtures" / "box";
    const auto run = run_benchmark(spec, ctx);
    CHECK(run.metrics.accuracy_pct == doctest::Approx(100.0));
    CHECK(run.metrics.calling_rate_pct == doctest::Approx(100.0));
  }
  SUBCASE("an oversized sample is a configuration error") {
    spec.sample_size = 9;
    CHECK_THROWS_AS(run_benchmark(spec, ctx), ConfigError);
  }
}
