#pragma once

#include "agentdistill/core/temp_dir.hpp"
#include "agentdistill/core/types.hpp"
#include "agentdistill/mcp/sandbox.hpp"
#include "agentdistill/mcp/subprocess.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace agentdistill::mcp {

class Timeout : public Error {
 public:
  using Error::Error;
};

class ProtocolViolation : public Error {
 public:
  using Error::Error;
};

// The server closed stdout (usually by exiting) while a response was pending.
class ServerExited : public ProtocolViolation {
 public:
  ServerExited(std::optional<int> exit_status, std::string stderr_tail);
  std::optional<int> exit_status() const { return exit_status_; }
  const std::string& stderr_tail() const { return stderr_tail_; }

 private:
  std::optional<int> exit_status_;
  std::string stderr_tail_;
};

enum class ServerState { starting, ready, failed, stopped };
std::string_view to_string(ServerState state);

struct ServerInfo {
  std::string name;
  std::string version;
};

struct ToolResult {
  bool is_error = false;
  std::string content;
  std::int64_t elapsed_ms = 0;
};

// One MCP tool server speaking newline-delimited JSON-RPC 2.0 over stdio.
// Calls on a handle are serialized; distinct handles are independent.
class ToolServerHandle {
 public:
  ToolServerHandle(ToolServerHandle&&) noexcept;
  ToolServerHandle& operator=(ToolServerHandle&&) noexcept;
  ~ToolServerHandle();

  // initialize request, notifications/initialized, then tools/list.
  // Throws Timeout or ProtocolViolation (ServerExited when the process dies
  // first); the handle is failed afterwards.
  ServerInfo initialize();

  // Tool-side failures (isError results, JSON-RPC error objects) come back as
  // is_error=true. Throws Timeout (handle killed and failed) or
  // ProtocolViolation.
  ToolResult call_tool(const std::string& tool_name, const json& arguments);

  // Close stdin, wait out the grace period, then kill. Idempotent.
  void shutdown();

  ServerState state() const;
  const std::string& cluster_name() const;
  const std::vector<ToolSchema>& tools() const;
  std::optional<pid_t> pid() const;
  const std::filesystem::path& stderr_log() const;
  std::string stderr_tail(std::size_t max_bytes = 2000) const;

 private:
  struct Impl;
  explicit ToolServerHandle(std::unique_ptr<Impl> impl);
  friend ToolServerHandle spawn_server(const std::filesystem::path&, const SandboxConfig&, std::string);

  std::unique_ptr<Impl> impl_;
};

// Starts `interpreter... script_path` in a fresh scratch directory. Throws
// LaunchFailure for a missing script or an unlaunchable interpreter.
ToolServerHandle spawn_server(const std::filesystem::path& script_path, const SandboxConfig& sandbox,
                              std::string cluster_name = {});

struct MountFailure {
  std::string cluster_name;
  std::string tool_script_path;
  std::string detail;
};

struct MountedBox {
  std::vector<ToolServerHandle> handles;  // ready, in box entry order
  std::vector<MountFailure> failures;
};

// Spawns and initializes every entry of the box. Entries that fail are
// reported, never silently dropped: handles + failures == entries.
MountedBox mount_box(const McpBox& box, const std::filesystem::path& box_root, const SandboxConfig& sandbox);

}  // namespace agentdistill::mcp
