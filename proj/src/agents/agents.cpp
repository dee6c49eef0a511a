#include "agentdistill/agents/agents.hpp"

#include "agentdistill/core/digest.hpp"
#include "agentdistill/core/log.hpp"
#include "agentdistill/core/temp_dir.hpp"
#include "agentdistill/core/text_blocks.hpp"
#include "agentdistill/eval/answers.hpp"
#include "agentdistill/extraction/extraction.hpp"
#include "agentdistill/mcp/subprocess.hpp"

#include <fstream>
#include <map>
#include <sstream>

extern char** environ;

namespace agentdistill::agents {

namespace {

std::optional<std::string> read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string image_mime(const std::filesystem::path& path) {
  const std::string ext = to_lower(path.extension().string());
  if (ext == ".png") return "image/png";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  return "image/jpeg";
}

// The tools an episode can call, keyed by tool name. The first server to
// offer a name wins.
struct Toolbelt {
  std::vector<mcp::ToolServerHandle> handles;
  std::vector<std::pair<std::string, ToolSchema>> catalog;  // (cluster, schema)
  std::map<std::string, std::size_t> owner;                 // tool name -> handle index

  void add(mcp::ToolServerHandle handle) {
    const std::size_t index = handles.size();
    for (const auto& tool : handle.tools()) {
      if (owner.emplace(tool.name, index).second) catalog.emplace_back(handle.cluster_name(), tool);
    }
    handles.push_back(std::move(handle));
  }

  std::vector<ToolSchema> schemas() const {
    std::vector<ToolSchema> out;
    for (const auto& [cluster, schema] : catalog) out.push_back(schema);
    return out;
  }

  void shutdown() {
    for (auto& h : handles) h.shutdown();
  }
};

std::string dispatch(Toolbelt& belt, const ToolInvocation& call, std::vector<ToolCallRecord>& records) {
  const auto it = belt.owner.find(call.tool_name);
  if (it == belt.owner.end()) {
    std::string names;
    for (const auto& [cluster, schema] : belt.catalog) names += (names.empty() ? "" : ", ") + schema.name;
    return "Unknown tool '" + call.tool_name + "'. Available tools: " + (names.empty() ? "none" : names) + ".";
  }
  auto& handle = belt.handles[it->second];
  ToolCallRecord record{handle.cluster_name(), call.tool_name, sha256_hex(call.arguments.dump()), false, 0};
  std::string observation;
  if (handle.state() != mcp::ServerState::ready) {
    record.is_error = true;
    observation = "Tool '" + call.tool_name + "' is unavailable.";
  } else {
    try {
      const auto result = handle.call_tool(call.tool_name, call.arguments);
      record.is_error = result.is_error;
      record.elapsed_ms = result.elapsed_ms;
      observation = (result.is_error ? "Error from " : "Result of ") + call.tool_name + ":\n" + result.content;
    } catch (const Error& e) {
      record.is_error = true;
      observation = "Tool '" + call.tool_name + "' failed: " + e.what();
    }
  }
  records.push_back(std::move(record));
  return observation;
}

std::string remove_span(std::string text, const std::string& span) {
  if (span.empty()) return text;
  const auto pos = text.find(span);
  if (pos != std::string::npos) text.erase(pos, span.size());
  return text;
}

llm::ChatRequest make_request(const AgentConfig& config, const std::vector<llm::ChatMessage>& messages,
                              const Toolbelt& belt) {
  llm::ChatRequest request;
  request.model_id = config.model_id;
  request.messages = messages;
  request.tool_schemas = belt.schemas();
  return request;
}

void check_config(const AgentConfig& config, AgentRole expected) {
  if (config.role != expected)
    throw ConfigError("agent config has role " + std::string(to_string(config.role)) + ", expected " +
                      std::string(to_string(expected)));
  if (config.max_steps < 1) throw ConfigError("max_steps must be at least 1");
  if (config.model_id.empty()) throw ConfigError("agent config has no model_id");
}

std::optional<std::string> caption_for(const TaskExample& task, const AgentConfig& config, llm::LlmGateway& gateway) {
  if (!task.image_ref) return std::nullopt;
  return caption_image(*task.image_ref, config, gateway);
}

EpisodeResult finish(const TaskExample& task, EpisodeResult result) {
  result.task_id = task.id;
  result.trajectory.task_id = task.id;
  result.trajectory.final_answer = result.final_answer;
  result.correct = eval::is_correct(task, result.final_answer);
  return result;
}

}  // namespace

AgentConfig agent_config_from_json(const json& j, AgentRole role, const AgentConfig& defaults) {
  AgentConfig c = defaults;
  c.role = role;
  if (c.system_prompt_id.empty()) c.system_prompt_id = role == AgentRole::teacher ? "agents/teacher" : "agents/student";
  if (!j.is_object()) throw ConfigError(std::string(to_string(role)) + " config must be an object");
  try {
    if (j.contains("model_id")) c.model_id = j["model_id"].get<std::string>();
    if (j.contains("captioner_model_id") && !j["captioner_model_id"].is_null())
      c.captioner_model_id = j["captioner_model_id"].get<std::string>();
    if (j.contains("max_steps")) c.max_steps = j["max_steps"].get<int>();
    if (j.contains("system_prompt_id")) c.system_prompt_id = j["system_prompt_id"].get<std::string>();
    if (j.contains("search_command")) c.search_command = j["search_command"].get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(to_string(role)) + " config: " + e.what());
  }
  if (c.max_steps < 1) throw ConfigError(std::string(to_string(role)) + ".max_steps must be at least 1");
  return c;
}

json to_json(const AgentConfig& c) {
  json out = {{"role", to_string(c.role)},
              {"model_id", c.model_id},
              {"captioner_model_id", nullptr},
              {"max_steps", c.max_steps},
              {"system_prompt_id", c.system_prompt_id},
              {"search_command", c.search_command}};
  if (c.captioner_model_id) out["captioner_model_id"] = *c.captioner_model_id;
  return out;
}

json to_json(const EpisodeResult& r, bool include_timing) {
  json calls = json::array();
  for (const auto& c : r.tool_calls) {
    json item = {{"cluster_name", c.cluster_name},
                 {"tool_name", c.tool_name},
                 {"arguments_digest", c.arguments_digest},
                 {"is_error", c.is_error}};
    if (include_timing) item["elapsed_ms"] = c.elapsed_ms;
    calls.push_back(std::move(item));
  }
  return {{"task_id", r.task_id},
          {"final_answer", r.final_answer},
          {"correct", r.correct},
          {"steps_used", r.steps_used},
          {"tool_calls", calls},
          {"trajectory", r.trajectory}};
}

std::string caption_image(const std::string& image_ref, const AgentConfig& config, llm::LlmGateway& gateway) {
  const std::filesystem::path image(image_ref);
  for (const auto& sidecar : {std::filesystem::path(image_ref + ".caption.txt"),
                              std::filesystem::path(image).replace_extension(".caption.txt")}) {
    if (auto text = read_text(sidecar)) return *text;
  }
  if (!config.captioner_model_id) {
    throw CaptionUnavailable("no caption sidecar for " + image_ref + " and no captioner model configured");
  }
  std::string url = image_ref;
  if (image_ref.rfind("http://", 0) != 0 && image_ref.rfind("https://", 0) != 0 && image_ref.rfind("data:", 0) != 0) {
    const auto bytes = read_text(image);
    if (!bytes) throw CaptionUnavailable("cannot read image " + image_ref);
    url = "data:" + image_mime(image) + ";base64," + base64_encode(*bytes);
  }
  llm::ChatRequest request;
  request.model_id = *config.captioner_model_id;
  request.messages = {{llm::Role::user,
                       "Describe this image in detail for someone who cannot see it. Mention visible structures, "
                       "their positions, and anything unusual.",
                       url}};
  return trim(gateway.complete(request).content);
}

std::string task_message(const TaskExample& task, const std::optional<std::string>& caption) {
  std::string text;
  switch (task.task_kind) {
    case TaskKind::game24:
      text = "Task (game24): Use the numbers " + task.input_text +
             " and basic arithmetic (+ - * /) to make 24. Use each number exactly once.";
      break;
    case TaskKind::vqa:
      text = "Task (vqa): " + task.input_text;
      break;
    case TaskKind::freeform:
      text = "Task (freeform): " + task.input_text;
      break;
  }
  if (caption) text += "\nImage description: " + trim(*caption);
  text += "\nWhen you are done, give the final answer on its own line as `answer: <your answer>`.";
  return text;
}

std::string render_tool_catalog(const std::vector<std::pair<std::string, ToolSchema>>& tools) {
  if (tools.empty()) return "(no tools are available)\n";
  std::string out;
  for (const auto& [cluster, schema] : tools) {
    out += "- " + schema.name + (cluster.empty() ? "" : " [" + cluster + "]") + ": " + trim(schema.description) +
           "\n  input schema: " + compact(to_input_schema(schema)) + "\n";
  }
  return out;
}

std::string extract_final_answer(const std::string& content) {
  const std::string lower = to_lower(content);
  const auto pos = lower.rfind("answer:");
  if (pos == std::string::npos) return trim(content);
  const auto start = pos + 7;
  const auto end = content.find('\n', start);
  return trim(content.substr(start, end == std::string::npos ? std::string::npos : end - start));
}

EpisodeResult run_student_episode(const TaskExample& task, const McpBox& box, const std::filesystem::path& box_root,
                                  const AgentConfig& config, const EpisodeContext& ctx) {
  check_config(config, AgentRole::student);
  const auto caption = caption_for(task, config, ctx.gateway);

  Toolbelt belt;
  auto mounted = mcp::mount_box(box, box_root, ctx.sandbox);
  for (const auto& f : mounted.failures)
    logger().warn("box entry '{}' ({}) failed to mount: {}", f.cluster_name, f.tool_script_path, f.detail);
  for (auto& h : mounted.handles) belt.add(std::move(h));

  const std::string system = render_template(ctx.prompts.load(config.system_prompt_id),
                                             {{"tools", render_tool_catalog(belt.catalog)}});
  std::vector<llm::ChatMessage> messages{{llm::Role::system, system, std::nullopt},
                                         {llm::Role::user, task_message(task, caption), std::nullopt}};
  EpisodeResult result;
  result.trajectory.agent_role = AgentRole::student;
  try {
    for (int step = 1; step <= config.max_steps; ++step) {
      if (ctx.cancel && ctx.cancel->load()) throw Interrupted();
      const auto response = ctx.gateway.complete(make_request(config, messages, belt));
      result.steps_used = step;
      const auto call = parse_tool_invocation(response.content);
      if (!response.tool_invocation || !call) {
        result.final_answer = extract_final_answer(response.content);
        result.trajectory.steps.push_back({step, trim(response.content), "", ""});
        break;
      }
      const std::string observation = dispatch(belt, *call, result.tool_calls);
      result.trajectory.steps.push_back({step, trim(remove_span(response.content, call->raw_span)), call->raw_span,
                                         observation});
      messages.push_back({llm::Role::assistant, response.content, std::nullopt});
      messages.push_back({llm::Role::user, "Observation:\n" + observation, std::nullopt});
    }
  } catch (...) {
    belt.shutdown();
    throw;
  }
  belt.shutdown();
  return finish(task, std::move(result));
}

EpisodeResult run_teacher_episode(const TaskExample& task, const AgentConfig& config, const EpisodeContext& ctx) {
  check_config(config, AgentRole::teacher);
  const auto caption = caption_for(task, config, ctx.gateway);

  std::string system = ctx.prompts.load(config.system_prompt_id);
  if (system.find("{{") != std::string::npos) system = render_template(system, {{"tools", render_tool_catalog({})}});
  std::vector<llm::ChatMessage> messages{{llm::Role::system, system, std::nullopt},
                                         {llm::Role::user, task_message(task, caption), std::nullopt}};
  Toolbelt belt;
  EpisodeResult result;
  result.trajectory.agent_role = AgentRole::teacher;
  int scripts_seen = 0;
  try {
    for (int step = 1; step <= config.max_steps; ++step) {
      if (ctx.cancel && ctx.cancel->load()) throw Interrupted();
      const auto response = ctx.gateway.complete(make_request(config, messages, belt));
      result.steps_used = step;
      const auto scripts = extraction::find_tool_scripts(response.content);
      const auto call = parse_tool_invocation(response.content);
      if (scripts.empty() && !call) {
        result.final_answer = extract_final_answer(response.content);
        result.trajectory.steps.push_back({step, trim(response.content), "", ""});
        break;
      }

      std::string action;
      std::string observation;
      for (const auto& block : scripts) {
        ++scripts_seen;
        action += response.content.substr(block.begin, block.end - block.begin);
        if (action.back() != '\n') action += '\n';
        const auto report = extraction::validate_candidate(
            {task.id, step, block.body, content_digest(block.body)}, ctx.sandbox);
        observation += "Tool script " + std::to_string(scripts_seen) + ": " + extraction::summarize(report) + "\n";
        if (report.outcome != extraction::Outcome::valid) continue;
        TempDir dir("agentdistill-teacher");
        const auto path = dir.path() / "tool.py";
        std::ofstream(path, std::ios::binary) << block.body;
        try {
          auto handle = mcp::spawn_server(path, ctx.sandbox, "teacher");
          handle.initialize();
          belt.add(std::move(handle));
        } catch (const Error& e) {
          logger().warn("validated teacher script failed to mount: {}", e.what());
        }
      }
      if (call) {
        action += call->raw_span + "\n";
        observation += dispatch(belt, *call, result.tool_calls) + "\n";
      }
      const std::string reasoning = trim(remove_span(strip_blocks(response.content, scripts), call ? call->raw_span : ""));
      result.trajectory.steps.push_back({step, reasoning, action, trim(observation)});
      messages.push_back({llm::Role::assistant, response.content, std::nullopt});
      messages.push_back({llm::Role::user, "Observation:\n" + trim(observation), std::nullopt});
    }
  } catch (...) {
    belt.shutdown();
    throw;
  }
  belt.shutdown();
  return finish(task, std::move(result));
}

std::vector<SearchHit> open_source_search(const std::string& query, const std::vector<std::string>& provider_command,
                                          std::int64_t timeout_ms) {
  if (provider_command.empty()) {
    logger().info("open-source search is disabled (no provider configured)");
    return {};
  }
  mcp::SpawnOptions options;
  options.argv = provider_command;
  options.argv.push_back(query);
  for (char** e = environ; e && *e; ++e) options.env.emplace_back(*e);
  std::string output;
  try {
    auto proc = mcp::Subprocess::spawn(options);
    proc->close_stdin();
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (true) {
      auto read = proc->read_line(deadline);
      if (read.status == mcp::Subprocess::ReadStatus::line) {
        output += read.line + "\n";
        continue;
      }
      if (read.status == mcp::Subprocess::ReadStatus::timeout) {
        logger().warn("search provider timed out");
        proc->kill_and_reap();
        return {};
      }
      break;
    }
    if (!proc->wait_exit(std::chrono::milliseconds(1000))) proc->kill_and_reap();
  } catch (const Error& e) {
    logger().warn("search provider failed: {}", e.what());
    return {};
  }
  std::vector<SearchHit> hits;
  try {
    const json parsed = json::parse(output);
    if (!parsed.is_array()) throw json::type_error::create(302, "search output is not an array", nullptr);
    for (const auto& item : parsed) {
      hits.push_back({item.value("title", std::string()), item.value("url", std::string()),
                      item.value("snippet", std::string())});
    }
  } catch (const json::exception& e) {
    logger().warn("search provider returned unusable output: {}", e.what());
    return {};
  }
  return hits;
}

std::string policy_digest(const AgentConfig& config, const PromptLibrary& prompts) {
  const json state = {{"model_id", config.model_id},
                      {"captioner_model_id", config.captioner_model_id.value_or("")},
                      {"system_prompt_id", config.system_prompt_id},
                      {"prompt_assets", prompts.digests()}};
  return sha256_hex(state.dump());
}

}  // namespace agentdistill::agents
