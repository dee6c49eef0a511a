#include "agentdistill/extraction/extraction.hpp"

#include "agentdistill/core/digest.hpp"
#include "agentdistill/core/log.hpp"
#include "agentdistill/core/parallel.hpp"
#include "agentdistill/core/temp_dir.hpp"
#include "agentdistill/core/text_blocks.hpp"
#include "agentdistill/core/trajectory_log.hpp"
#include "agentdistill/eval/answers.hpp"
#include "agentdistill/mcp/host.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace agentdistill::extraction {

namespace {

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
  if (from.empty()) return text;
  for (std::size_t pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size()))
    text.replace(pos, from.size(), to);
  return text;
}

bool looks_like_syntax_error(const std::string& stderr_text) {
  return stderr_text.find("SyntaxError") != std::string::npos ||
         stderr_text.find("IndentationError") != std::string::npos ||
         stderr_text.find("TabError") != std::string::npos;
}

}  // namespace

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::valid: return "valid";
    case Outcome::syntax_error: return "syntax_error";
    case Outcome::launch_failure: return "launch_failure";
    case Outcome::timeout: return "timeout";
    case Outcome::protocol_violation: return "protocol_violation";
  }
  return "launch_failure";
}

std::vector<Trajectory> filter_successful(const std::vector<Trajectory>& trajectories,
                                          const std::vector<TaskExample>& dataset) {
  std::unordered_map<std::string, const TaskExample*> by_id;
  for (const auto& task : dataset) by_id.emplace(task.id, &task);
  std::vector<Trajectory> kept;
  for (const auto& t : trajectories) {
    const auto it = by_id.find(t.task_id);
    if (it == by_id.end()) throw UnknownTask(t.task_id);
    if (eval::is_correct(*it->second, t.final_answer)) kept.push_back(t);
  }
  return kept;
}

std::vector<TextBlock> find_tool_scripts(std::string_view text) {
  std::vector<TextBlock> out;
  for (auto& block : scan_blocks(text)) {
    if (!block.tagged_mcp && block.body.find("@mcp.tool(") == std::string::npos) continue;
    if (trim(block.body).empty()) continue;
    out.push_back(std::move(block));
  }
  return out;
}

std::vector<McpCandidate> extract_candidates(const Trajectory& trajectory) {
  std::vector<McpCandidate> out;
  for (const auto& step : trajectory.steps) {
    for (const auto& block : find_tool_scripts(step.action)) {
      out.push_back(McpCandidate{trajectory.task_id, step.index, block.body, content_digest(block.body)});
    }
  }
  return out;
}

ValidationReport validate_candidate(const McpCandidate& candidate, const mcp::SandboxConfig& sandbox) {
  ValidationReport report;
  report.candidate_digest = candidate.content_digest.empty() ? content_digest(candidate.script_text)
                                                             : candidate.content_digest;
  report.source_task_id = candidate.source_task_id;
  report.step_index = candidate.step_index;
  const auto started = std::chrono::steady_clock::now();
  std::string scratch;
  try {
    TempDir dir("agentdistill-validate");
    scratch = dir.path().string();
    const auto script = dir.path() / "candidate.py";
    {
      std::ofstream out(script, std::ios::binary);
      out << candidate.script_text;
      if (!out) throw IoError("cannot write candidate script");
    }
    mcp::SandboxConfig local = sandbox;
    local.log_dir.clear();
    try {
      auto handle = mcp::spawn_server(script, local);
      try {
        handle.initialize();
        std::string names;
        for (const auto& tool : handle.tools()) names += (names.empty() ? "" : ", ") + tool.name;
        report.outcome = Outcome::valid;
        report.tools = handle.tools();
        report.detail = std::to_string(handle.tools().size()) + " tool(s): " + names;
      } catch (const mcp::ServerExited& e) {
        report.outcome = looks_like_syntax_error(e.stderr_tail()) ? Outcome::syntax_error : Outcome::launch_failure;
        report.detail = e.stderr_tail().empty() ? std::string(e.what()) : e.stderr_tail();
      } catch (const mcp::Timeout& e) {
        report.outcome = Outcome::timeout;
        report.detail = e.what();
      } catch (const mcp::ProtocolViolation& e) {
        report.outcome = Outcome::protocol_violation;
        report.detail = e.what();
      }
      handle.shutdown();
    } catch (const mcp::LaunchFailure& e) {
      report.outcome = Outcome::launch_failure;
      report.detail = e.what();
    }
  } catch (const std::exception& e) {
    report.outcome = Outcome::launch_failure;
    report.detail = e.what();
  }
  report.detail = trim(replace_all(report.detail, scratch, "<sandbox>"));
  report.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started)
                          .count();
  return report;
}

std::string summarize(const ValidationReport& report) {
  if (report.outcome == Outcome::valid) {
    std::string names;
    for (const auto& tool : report.tools) names += (names.empty() ? "" : ", ") + tool.name;
    return "valid; tools: " + names;
  }
  std::string last;
  std::istringstream lines(report.detail);
  for (std::string line; std::getline(lines, line);) {
    if (!trim(line).empty()) last = trim(line);
  }
  const auto colon = last.find(':');
  if (colon != std::string::npos) last = trim(last.substr(0, colon));
  return std::string(to_string(report.outcome)) + (last.empty() ? "" : " (" + last + ")");
}

std::string trajectory_log_digest(const std::vector<Trajectory>& trajectories) {
  std::ostringstream out;
  write_trajectory_log(trajectories, out);
  return sha256_hex(out.str());
}

McpPool build_pool(const std::vector<Trajectory>& trajectories, const std::vector<TaskExample>& dataset,
                   const mcp::SandboxConfig& sandbox) {
  McpPool pool;
  pool.source_log_digest = trajectory_log_digest(trajectories);

  std::vector<McpCandidate> extracted;
  for (const auto& t : filter_successful(trajectories, dataset)) {
    auto found = extract_candidates(t);
    extracted.insert(extracted.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
  }
  pool.extracted = extracted.size();

  // One validation per distinct script; the fold below runs in input order.
  std::vector<std::size_t> first_index;
  std::map<std::string, std::size_t> slot_of;
  for (std::size_t i = 0; i < extracted.size(); ++i) {
    if (slot_of.emplace(extracted[i].content_digest, first_index.size()).second) first_index.push_back(i);
  }
  const auto reports = parallel_map(first_index.size(), sandbox.max_parallel, [&](std::size_t k) {
    return validate_candidate(extracted[first_index[k]], sandbox);
  });

  std::map<std::string, std::size_t> kept_at;
  for (const auto& c : extracted) {
    const auto& report = reports[slot_of.at(c.content_digest)];
    if (report.outcome != Outcome::valid) {
      ValidationReport r = report;
      r.source_task_id = c.source_task_id;
      r.step_index = c.step_index;
      pool.rejected.push_back(std::move(r));
      continue;
    }
    if (const auto it = kept_at.find(c.content_digest); it != kept_at.end()) {
      const auto& kept = pool.candidates[it->second];
      pool.duplicates.push_back({c.content_digest, c.source_task_id, c.step_index, kept.source_task_id,
                                 kept.step_index});
      continue;
    }
    kept_at.emplace(c.content_digest, pool.candidates.size());
    pool.candidates.push_back(c);
  }
  logger().info("pool: {} extracted, {} kept, {} rejected, {} duplicates", pool.extracted, pool.candidates.size(),
                pool.rejected.size(), pool.duplicates.size());
  return pool;
}

json to_json(const ValidationReport& report, bool include_timing) {
  json out = {{"candidate_digest", report.candidate_digest},
              {"outcome", to_string(report.outcome)},
              {"detail", report.detail},
              {"source_task_id", report.source_task_id},
              {"step_index", report.step_index}};
  if (include_timing) out["elapsed_ms"] = report.elapsed_ms;
  return out;
}

json to_json(const DuplicateOccurrence& d) {
  return {{"content_digest", d.content_digest},
          {"source_task_id", d.source_task_id},
          {"step_index", d.step_index},
          {"kept_task_id", d.kept_task_id},
          {"kept_step_index", d.kept_step_index}};
}

}  // namespace agentdistill::extraction
