#pragma once

#include "agentdistill/core/text_blocks.hpp"
#include "agentdistill/core/types.hpp"
#include "agentdistill/mcp/sandbox.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace agentdistill::extraction {

enum class Outcome { valid, syntax_error, launch_failure, timeout, protocol_violation };
std::string_view to_string(Outcome outcome);

struct ValidationReport {
  std::string candidate_digest;
  Outcome outcome = Outcome::launch_failure;
  std::string detail;  // sandbox paths replaced by "<sandbox>"
  std::int64_t elapsed_ms = 0;
  std::string source_task_id;
  std::int64_t step_index = 0;
  std::vector<ToolSchema> tools;  // as listed by the live server when valid
};

// A later occurrence of a script already in the pool.
struct DuplicateOccurrence {
  std::string content_digest;
  std::string source_task_id;
  std::int64_t step_index = 0;
  std::string kept_task_id;
  std::int64_t kept_step_index = 0;
};

struct McpPool {
  std::vector<McpCandidate> candidates;
  std::vector<ValidationReport> rejected;
  std::vector<DuplicateOccurrence> duplicates;
  std::string source_log_digest;
  std::size_t extracted = 0;  // == candidates + rejected + duplicates
};

// Trajectories whose final answer is correct for their task, in input order.
// Throws UnknownTask for a task id missing from the dataset.
std::vector<Trajectory> filter_successful(const std::vector<Trajectory>& trajectories,
                                          const std::vector<TaskExample>& dataset);

// The blocks of `text` that count as tool scripts, in document order.
std::vector<TextBlock> find_tool_scripts(std::string_view text);

// Tool-script blocks in step order, then in-step order. A block is either an
// <mcp>...</mcp> region or a fenced block whose body contains "@mcp.tool(".
std::vector<McpCandidate> extract_candidates(const Trajectory& trajectory);

// Writes the script to a scratch file and performs a live initialize +
// tools/list handshake. Never throws; every failure lands in `outcome`.
ValidationReport validate_candidate(const McpCandidate& candidate, const mcp::SandboxConfig& sandbox);

// One line suitable for feeding back to a model: the outcome plus the error
// class (or the tool names when valid). Stable across interpreter versions,
// unlike full tracebacks.
std::string summarize(const ValidationReport& report);

McpPool build_pool(const std::vector<Trajectory>& trajectories, const std::vector<TaskExample>& dataset,
                   const mcp::SandboxConfig& sandbox);

json to_json(const ValidationReport& report, bool include_timing = false);
json to_json(const DuplicateOccurrence& duplicate);

// Digest of the canonical serialization of a trajectory list.
std::string trajectory_log_digest(const std::vector<Trajectory>& trajectories);

}  // namespace agentdistill::extraction
