#include "agentdistill/cli/cli.hpp"

#include "agentdistill/agents/agents.hpp"
#include "agentdistill/boxer/boxer.hpp"
#include "agentdistill/cli/config.hpp"
#include "agentdistill/core/digest.hpp"
#include "agentdistill/core/errors.hpp"
#include "agentdistill/core/log.hpp"
#include "agentdistill/core/parallel.hpp"
#include "agentdistill/core/prompts.hpp"
#include "agentdistill/core/trajectory_log.hpp"
#include "agentdistill/eval/benchmark.hpp"
#include "agentdistill/eval/dataset.hpp"
#include "agentdistill/eval/metrics.hpp"
#include "agentdistill/llm/gateway.hpp"
#include "agentdistill/mcp/host.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <poll.h>
#include <unistd.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <regex>
#include <sstream>

namespace agentdistill::cli {

namespace {

namespace fs = std::filesystem;

// Bad invocation: missing inputs, conflicting flags.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct Globals {
  std::string config_path;
  std::string replay;
  std::string record;
  std::optional<std::uint64_t> seed;
  std::string timestamp;
  std::string kind;
  int verbosity = 0;
};

struct Setup {
  PipelineConfig config;
  std::unique_ptr<PromptLibrary> prompts;
  std::string config_digest;
};

void require_file(const std::string& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw UsageError(what + " not found: " + path);
}

void require_box(const std::string& path) {
  if (!fs::is_regular_file(fs::path(path) / "box.json")) throw UsageError("no box.json under " + path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

Setup make_setup(const Globals& g) {
  Setup s;
  if (!g.config_path.empty()) {
    require_file(g.config_path, "config file");
    s.config = load_config(g.config_path);
  } else {
    s.config = default_config();
  }
  auto& c = s.config;
  if (!g.replay.empty() && !g.record.empty()) throw UsageError("--replay and --record are mutually exclusive");
  if (!g.replay.empty()) {
    require_file(g.replay, "replay cache");
    c.transport.mode = llm::Mode::replay_strict;
    c.transport.cache_path = g.replay;
  }
  if (!g.record.empty()) {
    c.transport.mode = llm::Mode::record;
    c.transport.cache_path = g.record;
  }
  if (g.seed) c.eval.seed = *g.seed;
  if (!g.kind.empty()) {
    try {
      c.task_kind = task_kind_from_string(g.kind);
    } catch (const Error& e) {
      throw ConfigError(std::string("--kind: ") + e.what());
    }
  }
  if (!g.timestamp.empty()) {
    static const std::regex rfc3339(R"(\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?(Z|[+-]\d{2}:\d{2}))");
    if (!std::regex_match(g.timestamp, rfc3339)) throw ConfigError("--timestamp must be RFC 3339: " + g.timestamp);
  }
  s.prompts = std::make_unique<PromptLibrary>(c.prompts_dir.empty() ? PromptLibrary::default_dir() : c.prompts_dir);
  try {
    s.config_digest = pipeline_config_digest(c, *s.prompts);
  } catch (const IoError& e) {
    throw ConfigError(std::string("prompt assets: ") + e.what());
  }
  return s;
}

fs::path output_path(const PipelineConfig& c, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : c.output_root / path;
}

std::unique_ptr<llm::LlmGateway> make_gateway(const PipelineConfig& c) {
  return std::make_unique<llm::LlmGateway>(c.transport);
}

int cmd_teach(const Globals& g, const std::string& dataset_path, const std::string& out_path,
              const std::string& results_path, std::ostream& out, const std::atomic<bool>* cancel) {
  require_file(dataset_path, "dataset");
  auto s = make_setup(g);
  const auto dataset = eval::load_dataset(dataset_path, s.config.task_kind);
  auto gateway = make_gateway(s.config);
  const agents::EpisodeContext ctx{*gateway, *s.prompts, s.config.sandbox, cancel};
  const auto results = parallel_map(dataset.size(), s.config.max_parallel, [&](std::size_t i) {
    if (cancel && cancel->load()) throw Interrupted();
    return agents::run_teacher_episode(dataset[i], s.config.teacher, ctx);
  });

  std::vector<Trajectory> trajectories;
  int correct = 0;
  for (const auto& r : results) {
    trajectories.push_back(r.trajectory);
    correct += r.correct ? 1 : 0;
  }
  std::ostringstream log;
  write_trajectory_log(trajectories, log);
  const auto dest = output_path(s.config, out_path);
  write_file(dest, log.str());
  if (!results_path.empty()) {
    std::string lines;
    for (const auto& r : results) lines += compact(agents::to_json(r)) + "\n";
    write_file(output_path(s.config, results_path), lines);
  }
  out << fmt::format("teach: {} trajectories, {} correct -> {}\n", trajectories.size(), correct, dest.string());
  return kExitOk;
}

int cmd_distill(const Globals& g, const std::string& traj_path, const std::string& dataset_path,
                const std::string& out_dir, std::ostream& out) {
  require_file(traj_path, "trajectory log");
  require_file(dataset_path, "dataset");
  auto s = make_setup(g);
  std::ifstream in(traj_path);
  const auto trajectories = parse_trajectory_log(in);
  const auto dataset = eval::load_dataset(dataset_path, s.config.task_kind);
  auto gateway = make_gateway(s.config);
  const std::string model = s.config.boxer_model_id.empty() ? s.config.teacher.model_id : s.config.boxer_model_id;
  const boxer::BoxerContext ctx{*gateway, model, *s.prompts, s.config.sandbox, s.config.retry_budget};
  const auto dest = output_path(s.config, out_dir);
  const auto result = boxer::run_distill(trajectories, dataset, ctx, {dest, g.timestamp, s.config_digest});
  const auto& counts = result.report.at("counts");
  out << fmt::format("distill: {} box entries from a pool of {} ({} rejected, {} duplicates) -> {}\n",
                     result.box.entries.size(), counts.at("pool").get<int>(), counts.at("rejected").get<int>(),
                     counts.at("duplicates").get<int>(), dest.string());
  return kExitOk;
}

int cmd_inspect(const std::string& box_dir, bool as_json, std::ostream& out) {
  require_box(box_dir);
  const auto box = boxer::load_box(box_dir);
  if (as_json) {
    json j;
    to_json(j, box);
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  out << "schema_version: " << box.schema_version << "\n";
  out << "source_log_digest: " << box.provenance.source_log_digest << "\n";
  out << "created_at: " << box.provenance.created_at << "\n";
  out << "pipeline_config_digest: " << box.provenance.pipeline_config_digest << "\n";
  out << "entries: " << box.entries.size() << "\n";
  for (const auto& e : box.entries) {
    out << "\n[" << e.cluster_name << "] " << e.tool_script_path << "\n";
    for (const auto& t : e.tool_schemas) {
      out << "  " << t.name << ": " << t.description << "\n";
      for (const auto& p : t.parameters) {
        out << "    - " << p.name << " (" << p.type << (p.required ? ", required" : "") << ")";
        if (!p.description.empty()) out << ": " << p.description;
        out << "\n";
      }
    }
  }
  return kExitOk;
}

int cmd_serve(const Globals& g, const std::string& box_dir, const std::string& call, const std::string& args_text,
              std::ostream& out, std::ostream& err, const std::atomic<bool>* cancel) {
  require_box(box_dir);
  json arguments;
  try {
    arguments = json::parse(args_text);
  } catch (const json::parse_error&) {
    throw UsageError("--args must be a JSON object");
  }
  if (!arguments.is_object()) throw UsageError("--args must be a JSON object");
  auto s = make_setup(g);
  const auto box = boxer::load_box(box_dir);
  auto mounted = mcp::mount_box(box, box_dir, s.config.sandbox);
  for (const auto& f : mounted.failures) {
    err << "warning: " << f.cluster_name << " (" << f.tool_script_path << ") failed to start: " << f.detail << "\n";
  }

  int status = kExitOk;
  if (call.empty()) {
    json listing = json::array();
    for (const auto& h : mounted.handles) {
      for (const auto& t : h.tools()) {
        listing.push_back({{"cluster", h.cluster_name()}, {"name", t.name}, {"description", t.description}});
      }
    }
    out << listing.dump() << "\n" << std::flush;
    // Stay up until stdin closes or the user interrupts.
    pollfd pfd{STDIN_FILENO, POLLIN, 0};
    char buf[256];
    while (!(cancel && cancel->load())) {
      const int rc = ::poll(&pfd, 1, 200);
      if (rc > 0) {
        if (::read(STDIN_FILENO, buf, sizeof buf) <= 0) break;
      } else if (rc < 0 && errno != EINTR) {
        break;
      }
    }
  } else {
    mcp::ToolServerHandle* target = nullptr;
    for (auto& h : mounted.handles) {
      for (const auto& t : h.tools()) {
        if (t.name == call && !target) target = &h;
      }
    }
    if (!target) {
      for (auto& h : mounted.handles) h.shutdown();
      throw UsageError("no mounted tool named '" + call + "'");
    }
    const auto result = target->call_tool(call, arguments);
    out << result.content << "\n";
    if (result.is_error) status = kExitFailure;
  }
  for (auto& h : mounted.handles) h.shutdown();
  if (cancel && cancel->load()) throw Interrupted();
  return status;
}

int cmd_eval(const Globals& g, const std::string& dataset_path, const std::string& box_dir,
             const std::string& out_path, const std::string& results_path, std::optional<std::size_t> sample,
             std::optional<int> repeats, const std::string& agent, std::ostream& out,
             const std::atomic<bool>* cancel) {
  require_file(dataset_path, "dataset");
  if (!box_dir.empty()) require_box(box_dir);
  auto s = make_setup(g);
  eval::BenchmarkSpec spec;
  spec.dataset_path = dataset_path;
  spec.task_kind = s.config.task_kind;
  spec.sample_size = sample ? sample : s.config.eval.sample_size;
  spec.seed = s.config.eval.seed;
  spec.repeats = repeats.value_or(s.config.eval.repeats);
  if (spec.repeats < 1) throw UsageError("--repeats must be at least 1");
  spec.agent = agent == "teacher" ? s.config.teacher : s.config.student;
  if (!box_dir.empty()) spec.box_root = fs::path(box_dir);
  spec.max_parallel = s.config.max_parallel;

  auto gateway = make_gateway(s.config);
  const agents::EpisodeContext ctx{*gateway, *s.prompts, s.config.sandbox, cancel};
  const auto run = eval::run_benchmark(spec, ctx);

  json j = eval::to_json(run.metrics);
  j["run"] = {{"agent", agent},
              {"model_id", spec.agent.model_id},
              {"policy_digest", agents::policy_digest(spec.agent, *s.prompts)},
              {"dataset_digest", sha256_hex(read_file(dataset_path))},
              {"box_digest", box_dir.empty() ? json() : json(sha256_hex(read_file(fs::path(box_dir) / "box.json")))},
              {"sample_size", spec.sample_size ? json(*spec.sample_size) : json()},
              {"repeats", spec.repeats},
              {"seed", spec.seed}};
  const auto dest = output_path(s.config, out_path);
  write_file(dest, j.dump(2) + "\n");
  if (!results_path.empty()) {
    std::string lines;
    for (std::size_t i = 0; i < run.results.size(); ++i) {
      json r = agents::to_json(run.results[i]);
      r["repeat"] = run.repeat_of[i];
      lines += compact(r) + "\n";
    }
    write_file(output_path(s.config, results_path), lines);
  }
  out << fmt::format("eval: accuracy {:.1f} ± {:.1f}, calling rate {:.1f}% over {} episodes -> {}\n",
                     run.metrics.accuracy_pct, run.metrics.accuracy_std, run.metrics.calling_rate_pct,
                     run.metrics.n_episodes, dest.string());
  return kExitOk;
}

eval::Metrics read_metrics(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(0, path + ": " + e.what());
  }
  return eval::metrics_from_json(j);
}

int cmd_report(const Globals& g, const std::string& before, const std::string& after, const std::string& label,
               const std::string& out_text, std::ostream& out) {
  require_file(before, "before metrics");
  require_file(after, "after metrics");
  const auto report = eval::emit_report(read_metrics(before), read_metrics(after), label);
  if (!out_text.empty()) {
    PipelineConfig c = default_config();
    if (!g.config_path.empty()) {
      require_file(g.config_path, "config file");
      c = load_config(g.config_path);
    }
    const auto text_path = output_path(c, out_text);
    auto json_path = text_path;
    json_path.replace_extension(".json");
    if (json_path == text_path) throw UsageError("--out names the text report; it must not end in .json");
    write_file(text_path, report.text);
    write_file(json_path, report.data.dump(2) + "\n");
  }
  out << report.text;
  return kExitOk;
}

void set_verbosity(int v) {
  logger().set_level(v >= 2 ? spdlog::level::debug : v == 1 ? spdlog::level::info : spdlog::level::warn);
}

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::atomic<bool>* cancel) {
  CLI::App app{"Distill reusable MCP tool boxes from teacher trajectories and evaluate them.", "agentdistill"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "Pipeline config file (JSON)");
  app.add_option("--replay", g.replay, "Serve model calls only from this cache; misses are errors");
  app.add_option("--record", g.record, "Call the endpoint on cache misses and append to this cache");
  auto* seed_opt = app.add_option("--seed", seed, "Sampling seed for eval");
  app.add_option("--timestamp", g.timestamp, "Pin the box provenance timestamp (RFC 3339)");
  app.add_option("--kind", g.kind, "Task kind of the dataset: game24, vqa or freeform");
  app.add_flag("-v,--verbose", g.verbosity, "More log output on stderr (repeatable)");

  std::string dataset, out_path, traj, box, results, call, args_text = "{}", before, after, label = "agent",
                                                         agent = "student";
  std::optional<std::size_t> sample;
  std::optional<int> repeats;
  bool as_json = false;

  auto* teach = app.add_subcommand("teach", "Run the teacher over a dataset and write its trajectories");
  teach->add_option("--dataset", dataset, "Dataset (JSONL)")->required();
  teach->add_option("--out", out_path, "Trajectory log to write")->required();
  teach->add_option("--results", results, "Also write per-episode results (JSONL)");

  auto* distill = app.add_subcommand("distill", "Distill a tool box from a trajectory log");
  distill->add_option("--traj", traj, "Trajectory log (JSONL)")->required();
  distill->add_option("--dataset", dataset, "Dataset the trajectories were run on")->required();
  distill->add_option("--out", out_path, "Box directory to write")->required();

  auto* inspect = app.add_subcommand("inspect", "Print a box's manifest, tool schemas and provenance");
  inspect->add_option("--box", box, "Box directory")->required();
  inspect->add_flag("--json", as_json, "Print the manifest as JSON");

  auto* serve = app.add_subcommand("serve", "Mount a box and keep its tool servers running");
  serve->add_option("--box", box, "Box directory")->required();
  serve->add_option("--call", call, "Call one tool, print its result and exit");
  serve->add_option("--args", args_text, "Arguments for --call as a JSON object");

  auto* evalc = app.add_subcommand("eval", "Benchmark an agent, optionally with a box mounted");
  evalc->add_option("--dataset", dataset, "Dataset (JSONL)")->required();
  evalc->add_option("--box", box, "Box directory to mount");
  evalc->add_option("--out", out_path, "Metrics file to write")->required();
  evalc->add_option("--results", results, "Also write per-episode results (JSONL)");
  evalc->add_option("--sample", sample, "Evaluate a seeded sample of this many tasks");
  evalc->add_option("--repeats", repeats, "Passes over the chosen tasks");
  evalc->add_option("--agent", agent, "Which configured agent to run")->check(CLI::IsMember({"student", "teacher"}));

  auto* report = app.add_subcommand("report", "Compare two metrics files");
  report->add_option("--before", before, "Metrics without the box")->required();
  report->add_option("--after", after, "Metrics with the box")->required();
  report->add_option("--label", label, "Row label");
  report->add_option("--out", out_path, "Also write the text report here, plus its data as a sibling .json");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed;
  set_verbosity(g.verbosity);

  try {
    if (*teach) return cmd_teach(g, dataset, out_path, results, out, cancel);
    if (*distill) return cmd_distill(g, traj, dataset, out_path, out);
    if (*inspect) return cmd_inspect(box, as_json, out);
    if (*serve) return cmd_serve(g, box, call, args_text, out, err, cancel);
    if (*evalc) return cmd_eval(g, dataset, box, out_path, results, sample, repeats, agent, out, cancel);
    if (*report) return cmd_report(g, before, after, label, out_path, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

int main(int argc, char** argv) {
  struct sigaction sa {};
  sa.sa_handler = on_sigint;
  sigemptyset(&sa.sa_mask);
  ::sigaction(SIGINT, &sa, nullptr);
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr, &g_interrupted);
}

}  // namespace agentdistill::cli
