#pragma once

#include "agentdistill/agents/agents.hpp"
#include "agentdistill/core/types.hpp"
#include "agentdistill/llm/gateway.hpp"
#include "agentdistill/mcp/sandbox.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace agentdistill::cli {

struct EvalSettings {
  std::optional<std::size_t> sample_size;
  int repeats = 3;
  std::uint64_t seed = 0;
};

struct PipelineConfig {
  llm::TransportMode transport;
  mcp::SandboxConfig sandbox;
  agents::AgentConfig teacher;
  agents::AgentConfig student;
  std::string boxer_model_id;  // empty: the teacher's model
  int retry_budget = 2;
  std::filesystem::path output_root = ".";
  std::filesystem::path prompts_dir;  // empty: built-in assets
  int max_parallel = 4;               // concurrent episodes
  TaskKind task_kind = TaskKind::game24;
  EvalSettings eval;
};

PipelineConfig default_config();

// Relative paths inside the file resolve against the file's directory.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig config_from_json(const json& j, const std::filesystem::path& base_dir);
json to_json(const PipelineConfig& config);

// Covers everything that shapes pipeline outputs: agents, sandbox, budgets,
// and the digest of every prompt asset. Transport settings are left out so
// record and replay runs of one pipeline agree.
std::string pipeline_config_digest(const PipelineConfig& config, const PromptLibrary& prompts);

}  // namespace agentdistill::cli
