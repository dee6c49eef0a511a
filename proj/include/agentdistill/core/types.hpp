#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace agentdistill {

using json = nlohmann::json;

enum class TaskKind { game24, vqa, freeform };
enum class AgentRole { teacher, student };

std::string_view to_string(TaskKind kind);
std::string_view to_string(AgentRole role);
TaskKind task_kind_from_string(std::string_view text);
AgentRole agent_role_from_string(std::string_view text);

struct TaskExample {
  std::string id;
  std::string input_text;
  std::optional<std::string> image_ref;
  std::string label;
  TaskKind task_kind = TaskKind::freeform;

  bool operator==(const TaskExample&) const = default;
};

struct TrajectoryStep {
  std::int64_t index = 0;
  std::string reasoning;
  std::string action;
  std::string observation;

  bool operator==(const TrajectoryStep&) const = default;
};

struct Trajectory {
  std::string task_id;
  std::vector<TrajectoryStep> steps;
  std::string final_answer;
  AgentRole agent_role = AgentRole::teacher;

  bool operator==(const Trajectory&) const = default;
};

struct McpCandidate {
  std::string source_task_id;
  std::int64_t step_index = 0;
  std::string script_text;
  std::string content_digest;

  bool operator==(const McpCandidate&) const = default;
};

struct ToolParameter {
  std::string name;
  std::string type;  // JSON-Schema type tag, e.g. "string", "array"
  bool required = false;
  std::string description;

  bool operator==(const ToolParameter&) const = default;
};

struct ToolSchema {
  std::string name;
  std::string description;
  std::vector<ToolParameter> parameters;

  bool operator==(const ToolSchema&) const = default;
};

struct BoxEntry {
  std::string tool_script_path;  // relative to the box root
  std::string cluster_name;
  std::vector<ToolSchema> tool_schemas;

  bool operator==(const BoxEntry&) const = default;
};

struct BoxProvenance {
  std::string source_log_digest;
  std::string created_at;  // RFC 3339, UTC
  std::string pipeline_config_digest;

  bool operator==(const BoxProvenance&) const = default;
};

inline constexpr std::string_view kBoxSchemaVersion = "1";

struct McpBox {
  std::vector<BoxEntry> entries;
  std::string schema_version{kBoxSchemaVersion};
  BoxProvenance provenance;

  bool operator==(const McpBox&) const = default;
};

void to_json(json& j, const TrajectoryStep& step);
void to_json(json& j, const Trajectory& trajectory);
void to_json(json& j, const ToolParameter& param);
void to_json(json& j, const ToolSchema& schema);
void from_json(const json& j, ToolParameter& param);
void from_json(const json& j, ToolSchema& schema);
void to_json(json& j, const McpCandidate& candidate);
void to_json(json& j, const McpBox& box);

// The tool schema as an MCP `inputSchema` object and back. Parameters come
// back sorted by name since JSON objects carry no order.
json to_input_schema(const ToolSchema& schema);
ToolSchema tool_schema_from_listing(const json& tool);

// Single-line JSON text; invalid UTF-8 is replaced rather than thrown on.
std::string compact(const json& j);

// Current UTC time formatted as RFC 3339 with second precision.
std::string utc_timestamp_now();

}  // namespace agentdistill
