#pragma once

#include "agentdistill/core/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace agentdistill::mcp {

struct SandboxConfig {
  std::vector<std::string> interpreter{"python3", "-u"};
  std::int64_t timeout_ms = 10000;  // handshake / validation bound
  std::int64_t call_timeout_ms = 30000;
  std::int64_t shutdown_grace_ms = 2000;
  std::vector<std::string> env_allowlist{"PATH", "HOME", "LANG", "LC_ALL", "TMPDIR"};
  int max_parallel = 4;
  bool isolate_network = true;
  std::string protocol_version = "2024-11-05";
  // Per-handle stderr logs go here when set; otherwise into the handle's
  // scratch directory, which is removed with the handle.
  std::filesystem::path log_dir;
};

SandboxConfig sandbox_from_json(const json& j, const SandboxConfig& defaults = {});
json to_json(const SandboxConfig& config);

}  // namespace agentdistill::mcp
