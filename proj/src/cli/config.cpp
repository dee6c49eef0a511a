#include "agentdistill/cli/config.hpp"

#include "agentdistill/core/digest.hpp"

#include <fstream>
#include <set>

namespace agentdistill::cli {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

PipelineConfig default_config() {
  PipelineConfig c;
  c.transport.mode = llm::Mode::live;
  c.teacher.role = AgentRole::teacher;
  c.teacher.system_prompt_id = "agents/teacher";
  c.student.role = AgentRole::student;
  c.student.system_prompt_id = "agents/student";
  return c;
}

PipelineConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  PipelineConfig c = default_config();
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{"transport", "sandbox", "teacher", "student", "boxer_model_id",
                                           "retry_budget", "output_root", "prompts_dir", "max_parallel",
                                           "task_kind", "eval"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  try {
    if (j.contains("transport")) {
      const auto& t = j["transport"];
      if (!t.is_object()) throw ConfigError("transport must be an object");
      if (t.contains("mode")) c.transport.mode = llm::mode_from_string(t["mode"].get<std::string>());
      if (t.contains("cache_path") && !t["cache_path"].is_null())
        c.transport.cache_path = resolve(base_dir, t["cache_path"].get<std::string>());
      if (t.contains("endpoint") && !t["endpoint"].is_null()) c.transport.endpoint = t["endpoint"].get<std::string>();
      if (t.contains("api_key_env") && !t["api_key_env"].is_null())
        c.transport.api_key_env = t["api_key_env"].get<std::string>();
      c.transport.http_timeout_ms = t.value("http_timeout_ms", c.transport.http_timeout_ms);
    }
    if (j.contains("sandbox")) {
      c.sandbox = mcp::sandbox_from_json(j["sandbox"], c.sandbox);
      if (!c.sandbox.log_dir.empty()) c.sandbox.log_dir = resolve(base_dir, c.sandbox.log_dir.string());
    }
    if (j.contains("teacher")) c.teacher = agents::agent_config_from_json(j["teacher"], AgentRole::teacher, c.teacher);
    if (j.contains("student")) c.student = agents::agent_config_from_json(j["student"], AgentRole::student, c.student);
    if (j.contains("boxer_model_id") && !j["boxer_model_id"].is_null())
      c.boxer_model_id = j["boxer_model_id"].get<std::string>();
    c.retry_budget = j.value("retry_budget", c.retry_budget);
    if (j.contains("output_root")) c.output_root = resolve(base_dir, j["output_root"].get<std::string>());
    if (j.contains("prompts_dir") && !j["prompts_dir"].is_null())
      c.prompts_dir = resolve(base_dir, j["prompts_dir"].get<std::string>());
    c.max_parallel = j.value("max_parallel", c.max_parallel);
    if (j.contains("task_kind")) c.task_kind = task_kind_from_string(j["task_kind"].get<std::string>());
    if (j.contains("eval")) {
      const auto& e = j["eval"];
      if (e.contains("sample_size") && !e["sample_size"].is_null())
        c.eval.sample_size = e["sample_size"].get<std::size_t>();
      c.eval.repeats = e.value("repeats", c.eval.repeats);
      c.eval.seed = e.value("seed", c.eval.seed);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.retry_budget < 0) throw ConfigError("retry_budget must be >= 0");
  if (c.max_parallel < 1) throw ConfigError("max_parallel must be >= 1");
  if (c.eval.repeats < 1) throw ConfigError("eval.repeats must be >= 1");
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

json to_json(const PipelineConfig& c) {
  json transport = {{"mode", llm::to_string(c.transport.mode)},
                    {"cache_path", c.transport.cache_path ? json(c.transport.cache_path->string()) : json()},
                    {"endpoint", c.transport.endpoint ? json(*c.transport.endpoint) : json()},
                    {"api_key_env", c.transport.api_key_env ? json(*c.transport.api_key_env) : json()},
                    {"http_timeout_ms", c.transport.http_timeout_ms}};
  json teacher = agents::to_json(c.teacher);
  json student = agents::to_json(c.student);
  teacher.erase("role");
  student.erase("role");
  return {{"transport", transport},
          {"sandbox", mcp::to_json(c.sandbox)},
          {"teacher", teacher},
          {"student", student},
          {"boxer_model_id", c.boxer_model_id.empty() ? json() : json(c.boxer_model_id)},
          {"retry_budget", c.retry_budget},
          {"output_root", c.output_root.string()},
          {"prompts_dir", c.prompts_dir.empty() ? json() : json(c.prompts_dir.string())},
          {"max_parallel", c.max_parallel},
          {"task_kind", to_string(c.task_kind)},
          {"eval",
           {{"sample_size", c.eval.sample_size ? json(*c.eval.sample_size) : json()},
            {"repeats", c.eval.repeats},
            {"seed", c.eval.seed}}}};
}

std::string pipeline_config_digest(const PipelineConfig& config, const PromptLibrary& prompts) {
  json shaped = to_json(config);
  shaped.erase("transport");
  shaped.erase("output_root");
  shaped.erase("prompts_dir");
  shaped["sandbox"].erase("max_parallel");
  shaped.erase("max_parallel");
  shaped["prompt_assets"] = prompts.digests();
  return sha256_hex(shaped.dump());
}

}  // namespace agentdistill::cli
