#pragma once

#include "agentdistill/agents/tool_call.hpp"
#include "agentdistill/core/errors.hpp"
#include "agentdistill/core/prompts.hpp"
#include "agentdistill/core/types.hpp"
#include "agentdistill/llm/gateway.hpp"
#include "agentdistill/mcp/host.hpp"

#include <atomic>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace agentdistill::agents {

struct AgentConfig {
  AgentRole role = AgentRole::student;
  std::string model_id;
  std::optional<std::string> captioner_model_id;
  int max_steps = 8;
  std::string system_prompt_id;  // prompt asset name, e.g. "agents/student"
  // Command run as `cmd... <query>` for open-source search; empty disables it.
  std::vector<std::string> search_command;
};

AgentConfig agent_config_from_json(const json& j, AgentRole role, const AgentConfig& defaults = {});
json to_json(const AgentConfig& config);

class CaptionUnavailable : public Error {
 public:
  using Error::Error;
};

struct ToolCallRecord {
  std::string cluster_name;
  std::string tool_name;
  std::string arguments_digest;
  bool is_error = false;
  std::int64_t elapsed_ms = 0;
};

struct EpisodeResult {
  std::string task_id;
  std::string final_answer;
  bool correct = false;
  int steps_used = 0;
  std::vector<ToolCallRecord> tool_calls;
  Trajectory trajectory;
};

// elapsed_ms is left out unless asked for, so result files are reproducible.
json to_json(const EpisodeResult& result, bool include_timing = false);

// Everything an episode borrows from its caller.
struct EpisodeContext {
  llm::LlmGateway& gateway;
  const PromptLibrary& prompts;
  mcp::SandboxConfig sandbox;
  const std::atomic<bool>* cancel = nullptr;  // checked between steps
};

// A sidecar `<image>.caption.txt` (or `<stem>.caption.txt`) wins; otherwise
// the configured captioner model describes the image.
std::string caption_image(const std::string& image_ref, const AgentConfig& config, llm::LlmGateway& gateway);

// The user turn that opens an episode.
std::string task_message(const TaskExample& task, const std::optional<std::string>& caption);

// Tool listing rendered into the system prompt, one block per tool.
std::string render_tool_catalog(const std::vector<std::pair<std::string, ToolSchema>>& tools);

// Mounts the whole box, offers every ready tool, and loops until the model
// answers without a tool call or max_steps turns are used.
EpisodeResult run_student_episode(const TaskExample& task, const McpBox& box, const std::filesystem::path& box_root,
                                  const AgentConfig& config, const EpisodeContext& ctx);

// Like the student loop, but every <mcp> script the model writes is validated
// on the spot, reported back as an observation, and mounted for later calls
// when valid.
EpisodeResult run_teacher_episode(const TaskExample& task, const AgentConfig& config, const EpisodeContext& ctx);

struct SearchHit {
  std::string title;
  std::string url;
  std::string snippet;
};

// Disabled unless a provider command is configured; its stdout must be a JSON
// array of {title, url, snippet}. Anything else yields [] and a warning.
std::vector<SearchHit> open_source_search(const std::string& query, const std::vector<std::string>& provider_command,
                                          std::int64_t timeout_ms = 30000);

// Digest of everything that defines an agent's policy: the model id and the
// prompt assets. Episodes never change it.
std::string policy_digest(const AgentConfig& config, const PromptLibrary& prompts);

// The answer a final turn commits to: text after the last "answer:" marker,
// else the whole trimmed turn.
std::string extract_final_answer(const std::string& content);

}  // namespace agentdistill::agents
