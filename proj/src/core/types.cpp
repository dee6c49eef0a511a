#include "agentdistill/core/types.hpp"

#include "agentdistill/core/errors.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>

namespace agentdistill {

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::game24: return "game24";
    case TaskKind::vqa: return "vqa";
    case TaskKind::freeform: return "freeform";
  }
  return "freeform";
}

std::string_view to_string(AgentRole role) {
  return role == AgentRole::teacher ? "teacher" : "student";
}

TaskKind task_kind_from_string(std::string_view text) {
  if (text == "game24") return TaskKind::game24;
  if (text == "vqa") return TaskKind::vqa;
  if (text == "freeform") return TaskKind::freeform;
  throw ConfigError("unknown task kind '" + std::string(text) + "'");
}

AgentRole agent_role_from_string(std::string_view text) {
  if (text == "teacher") return AgentRole::teacher;
  if (text == "student") return AgentRole::student;
  throw ConfigError("unknown agent role '" + std::string(text) + "'");
}

void to_json(json& j, const TrajectoryStep& step) {
  j = json{{"index", step.index},
           {"reasoning", step.reasoning},
           {"action", step.action},
           {"observation", step.observation}};
}

void to_json(json& j, const Trajectory& trajectory) {
  j = json{{"task_id", trajectory.task_id},
           {"agent_role", to_string(trajectory.agent_role)},
           {"final_answer", trajectory.final_answer},
           {"steps", trajectory.steps}};
}

void to_json(json& j, const ToolParameter& param) {
  j = json{{"name", param.name},
           {"type", param.type},
           {"required", param.required},
           {"description", param.description}};
}

void from_json(const json& j, ToolParameter& param) {
  param.name = j.at("name").get<std::string>();
  param.type = j.value("type", "");
  param.required = j.value("required", false);
  param.description = j.value("description", "");
}

void to_json(json& j, const ToolSchema& schema) {
  j = json{{"name", schema.name},
           {"description", schema.description},
           {"parameters", schema.parameters}};
}

void from_json(const json& j, ToolSchema& schema) {
  schema.name = j.at("name").get<std::string>();
  schema.description = j.value("description", "");
  schema.parameters = j.value("parameters", std::vector<ToolParameter>{});
}

void to_json(json& j, const McpCandidate& candidate) {
  j = json{{"source_task_id", candidate.source_task_id},
           {"step_index", candidate.step_index},
           {"content_digest", candidate.content_digest},
           {"script_text", candidate.script_text}};
}

void to_json(json& j, const McpBox& box) {
  json entries = json::array();
  for (const auto& entry : box.entries) {
    entries.push_back({{"tool_script_path", entry.tool_script_path},
                       {"cluster_name", entry.cluster_name},
                       {"tool_schemas", entry.tool_schemas}});
  }
  j = json{{"schema_version", box.schema_version},
           {"entries", entries},
           {"provenance",
            {{"source_log_digest", box.provenance.source_log_digest},
             {"created_at", box.provenance.created_at},
             {"pipeline_config_digest", box.provenance.pipeline_config_digest}}}};
}

json to_input_schema(const ToolSchema& schema) {
  json properties = json::object();
  json required = json::array();
  for (const auto& param : schema.parameters) {
    json prop = json::object();
    if (!param.type.empty()) prop["type"] = param.type;
    if (!param.description.empty()) prop["description"] = param.description;
    properties[param.name] = prop;
    if (param.required) required.push_back(param.name);
  }
  return json{{"type", "object"}, {"properties", properties}, {"required", required}};
}

ToolSchema tool_schema_from_listing(const json& tool) {
  if (!tool.is_object() || !tool.contains("name") || !tool["name"].is_string()) {
    throw Error("tool listing entry without a string name");
  }
  ToolSchema schema;
  schema.name = tool["name"].get<std::string>();
  if (tool.contains("description") && tool["description"].is_string()) {
    schema.description = tool["description"].get<std::string>();
  }
  const json input = tool.value("inputSchema", json::object());
  std::vector<std::string> required;
  if (input.contains("required") && input["required"].is_array()) {
    for (const auto& name : input["required"]) {
      if (name.is_string()) required.push_back(name.get<std::string>());
    }
  }
  if (input.contains("properties") && input["properties"].is_object()) {
    for (const auto& [name, prop] : input["properties"].items()) {
      ToolParameter param;
      param.name = name;
      if (prop.is_object()) {
        if (prop.contains("type") && prop["type"].is_string()) param.type = prop["type"].get<std::string>();
        if (prop.contains("description") && prop["description"].is_string()) {
          param.description = prop["description"].get<std::string>();
        }
      }
      param.required = std::find(required.begin(), required.end(), name) != required.end();
      schema.parameters.push_back(std::move(param));
    }
  }
  return schema;
}

std::string compact(const json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string utc_timestamp_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace agentdistill
