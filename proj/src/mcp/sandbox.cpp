#include "agentdistill/mcp/sandbox.hpp"

#include "agentdistill/core/errors.hpp"

namespace agentdistill::mcp {

SandboxConfig sandbox_from_json(const json& j, const SandboxConfig& defaults) {
  SandboxConfig c = defaults;
  if (j.is_null()) return c;
  if (!j.is_object()) throw ConfigError("sandbox must be an object");
  try {
    if (j.contains("interpreter")) c.interpreter = j["interpreter"].get<std::vector<std::string>>();
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    c.call_timeout_ms = j.value("call_timeout_ms", c.call_timeout_ms);
    c.shutdown_grace_ms = j.value("shutdown_grace_ms", c.shutdown_grace_ms);
    if (j.contains("env_allowlist")) c.env_allowlist = j["env_allowlist"].get<std::vector<std::string>>();
    c.max_parallel = j.value("max_parallel", c.max_parallel);
    c.isolate_network = j.value("isolate_network", c.isolate_network);
    c.protocol_version = j.value("protocol_version", c.protocol_version);
    if (j.contains("log_dir") && j["log_dir"].is_string()) c.log_dir = j["log_dir"].get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("sandbox: ") + e.what());
  }
  if (c.interpreter.empty()) throw ConfigError("sandbox.interpreter must be a non-empty argv list");
  if (c.timeout_ms <= 0 || c.call_timeout_ms <= 0 || c.shutdown_grace_ms < 0) {
    throw ConfigError("sandbox timeouts must be positive");
  }
  if (c.max_parallel < 1) throw ConfigError("sandbox.max_parallel must be >= 1");
  return c;
}

json to_json(const SandboxConfig& c) {
  return json{{"interpreter", c.interpreter},
              {"timeout_ms", c.timeout_ms},
              {"call_timeout_ms", c.call_timeout_ms},
              {"shutdown_grace_ms", c.shutdown_grace_ms},
              {"env_allowlist", c.env_allowlist},
              {"max_parallel", c.max_parallel},
              {"isolate_network", c.isolate_network},
              {"protocol_version", c.protocol_version}};
}

}  // namespace agentdistill::mcp
