#include "agentdistill/mcp/host.hpp"

#include "agentdistill/core/log.hpp"
#include "agentdistill/core/parallel.hpp"

#include <atomic>
#include <chrono>
#include <fstream>

namespace agentdistill::mcp {
namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ms_since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

std::string tail_of_file(const std::filesystem::path& path, std::size_t max_bytes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(std::max<std::streamoff>(0, in.tellg()));
  const std::size_t start = size > max_bytes ? size - max_bytes : 0;
  in.seekg(static_cast<std::streamoff>(start));
  std::string out(size - start, '\0');
  in.read(out.data(), static_cast<std::streamsize>(out.size()));
  return out;
}

std::string content_text(const json& result) {
  std::string out;
  if (!result.contains("content") || !result["content"].is_array()) return out;
  for (const auto& item : result["content"]) {
    if (!out.empty()) out.push_back('\n');
    if (item.is_object() && item.value("type", "") == "text" && item.contains("text") && item["text"].is_string()) {
      out += item["text"].get<std::string>();
    } else {
      out += compact(item);
    }
  }
  return out;
}

std::atomic<std::uint64_t> g_log_counter{0};

}  // namespace

ServerExited::ServerExited(std::optional<int> exit_status, std::string stderr_tail)
    : ProtocolViolation("server exited before responding" +
                        (exit_status ? " (status " + std::to_string(*exit_status) + ")" : std::string()) +
                        (stderr_tail.empty() ? std::string() : ": " + stderr_tail)),
      exit_status_(exit_status),
      stderr_tail_(std::move(stderr_tail)) {}

std::string_view to_string(ServerState state) {
  switch (state) {
    case ServerState::starting: return "starting";
    case ServerState::ready: return "ready";
    case ServerState::failed: return "failed";
    case ServerState::stopped: return "stopped";
  }
  return "failed";
}

struct ToolServerHandle::Impl {
  std::unique_ptr<Subprocess> proc;
  std::optional<TempDir> scratch;
  SandboxConfig sandbox;
  std::filesystem::path stderr_path;
  std::string cluster_name;
  ServerState state = ServerState::starting;
  std::vector<ToolSchema> tools;
  std::int64_t next_id = 1;
  mutable std::mutex mu;

  void fail() {
    state = ServerState::failed;
    if (proc) proc->kill_and_reap();
  }

  json request(const std::string& method, json params, Clock::time_point deadline) {
    const std::int64_t id = next_id++;
    json msg = {{"jsonrpc", "2.0"}, {"id", id}, {"method", method}, {"params", std::move(params)}};
    if (!proc->write_line(compact(msg))) {
      proc->wait_exit(std::chrono::milliseconds(200));
      throw ServerExited(proc->exit_status(), tail_of_file(stderr_path, 2000));
    }
    for (;;) {
      auto read = proc->read_line(deadline);
      if (read.status == Subprocess::ReadStatus::timeout) {
        throw Timeout(method + " timed out");
      }
      if (read.status == Subprocess::ReadStatus::eof) {
        proc->wait_exit(std::chrono::milliseconds(500));
        throw ServerExited(proc->exit_status(), tail_of_file(stderr_path, 2000));
      }
      if (read.line.find_first_not_of(" \t") == std::string::npos) continue;
      json reply;
      try {
        reply = json::parse(read.line);
      } catch (const json::parse_error&) {
        throw ProtocolViolation("malformed JSON from server: " + read.line.substr(0, 200));
      }
      if (!reply.is_object()) throw ProtocolViolation("server message is not a JSON object");
      const bool has_id = reply.contains("id") && !reply["id"].is_null();
      if (!has_id) {
        logger().debug("[{}] notification ignored: {}", cluster_name, read.line.substr(0, 200));
        continue;
      }
      if (reply.contains("method")) {
        logger().debug("[{}] server request ignored: {}", cluster_name, read.line.substr(0, 200));
        continue;
      }
      if (!reply["id"].is_number_integer() || reply["id"].get<std::int64_t>() != id) {
        throw ProtocolViolation("response id " + compact(reply["id"]) + " does not match pending request " +
                                std::to_string(id));
      }
      if (!reply.contains("result") && !reply.contains("error")) {
        throw ProtocolViolation("response has neither result nor error");
      }
      return reply;
    }
  }

  void notify(const std::string& method) {
    json msg = {{"jsonrpc", "2.0"}, {"method", method}};
    if (!proc->write_line(compact(msg))) {
      proc->wait_exit(std::chrono::milliseconds(200));
      throw ServerExited(proc->exit_status(), tail_of_file(stderr_path, 2000));
    }
  }
};

ToolServerHandle::ToolServerHandle(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
ToolServerHandle::ToolServerHandle(ToolServerHandle&&) noexcept = default;
ToolServerHandle& ToolServerHandle::operator=(ToolServerHandle&& other) noexcept {
  if (this != &other) {
    if (impl_) shutdown();
    impl_ = std::move(other.impl_);
  }
  return *this;
}

ToolServerHandle::~ToolServerHandle() {
  if (impl_) shutdown();
}

ServerInfo ToolServerHandle::initialize() {
  std::lock_guard<std::mutex> lock(impl_->mu);
  if (impl_->state != ServerState::starting) {
    throw Error("initialize requires a starting server (state " + std::string(to_string(impl_->state)) + ")");
  }
  const auto deadline = Clock::now() + std::chrono::milliseconds(impl_->sandbox.timeout_ms);
  try {
    json params = {{"protocolVersion", impl_->sandbox.protocol_version},
                   {"capabilities", json::object()},
                   {"clientInfo", {{"name", "agentdistill"}, {"version", "0.1.0"}}}};
    const json init = impl_->request("initialize", std::move(params), deadline);
    if (init.contains("error")) throw ProtocolViolation("initialize rejected: " + compact(init["error"]));
    if (!init["result"].is_object()) throw ProtocolViolation("initialize result is not an object");
    ServerInfo info;
    if (init["result"].contains("serverInfo") && init["result"]["serverInfo"].is_object()) {
      const auto& si = init["result"]["serverInfo"];
      info.name = si.value("name", "");
      info.version = si.value("version", "");
    }
    impl_->notify("notifications/initialized");

    const json listing = impl_->request("tools/list", json::object(), deadline);
    if (listing.contains("error")) throw ProtocolViolation("tools/list rejected: " + compact(listing["error"]));
    const json& result = listing["result"];
    if (!result.is_object() || !result.contains("tools") || !result["tools"].is_array()) {
      throw ProtocolViolation("tools/list result lacks a tools array");
    }
    std::vector<ToolSchema> tools;
    for (const auto& tool : result["tools"]) {
      try {
        tools.push_back(tool_schema_from_listing(tool));
      } catch (const Error& e) {
        throw ProtocolViolation(std::string("tools/list: ") + e.what());
      }
    }
    if (tools.empty()) throw ProtocolViolation("server lists no tools");
    impl_->tools = std::move(tools);
    impl_->state = ServerState::ready;
    return info;
  } catch (...) {
    impl_->fail();
    throw;
  }
}

ToolResult ToolServerHandle::call_tool(const std::string& tool_name, const json& arguments) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  if (impl_->state != ServerState::ready) {
    throw Error("call_tool requires a ready server (state " + std::string(to_string(impl_->state)) + ")");
  }
  const auto start = Clock::now();
  json reply;
  try {
    reply = impl_->request("tools/call", {{"name", tool_name}, {"arguments", arguments}},
                           start + std::chrono::milliseconds(impl_->sandbox.call_timeout_ms));
  } catch (...) {
    impl_->fail();
    throw;
  }
  ToolResult out;
  out.elapsed_ms = elapsed_ms_since(start);
  if (reply.contains("error")) {
    const json& err = reply["error"];
    out.is_error = true;
    if (err.is_object()) {
      out.content = err.value("message", std::string("error"));
      if (err.contains("code")) out.content += " (code " + compact(err["code"]) + ")";
    } else {
      out.content = compact(err);
    }
    return out;
  }
  const json& result = reply["result"];
  if (!result.is_object()) {
    impl_->fail();
    throw ProtocolViolation("tools/call result is not an object");
  }
  out.content = content_text(result);
  out.is_error = result.value("isError", false);
  return out;
}

void ToolServerHandle::shutdown() {
  std::lock_guard<std::mutex> lock(impl_->mu);
  if (impl_->state == ServerState::stopped) return;
  if (impl_->proc) {
    impl_->proc->close_stdin();
    if (!impl_->proc->wait_exit(std::chrono::milliseconds(impl_->sandbox.shutdown_grace_ms))) {
      logger().info("[{}] server did not exit within grace period; killing", impl_->cluster_name);
    }
    impl_->proc.reset();
  }
  impl_->scratch.reset();
  impl_->state = ServerState::stopped;
}

ServerState ToolServerHandle::state() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->state;
}

const std::string& ToolServerHandle::cluster_name() const { return impl_->cluster_name; }
const std::vector<ToolSchema>& ToolServerHandle::tools() const { return impl_->tools; }

std::optional<pid_t> ToolServerHandle::pid() const {
  if (!impl_->proc) return std::nullopt;
  return impl_->proc->pid();
}

const std::filesystem::path& ToolServerHandle::stderr_log() const { return impl_->stderr_path; }

std::string ToolServerHandle::stderr_tail(std::size_t max_bytes) const {
  return tail_of_file(impl_->stderr_path, max_bytes);
}

ToolServerHandle spawn_server(const std::filesystem::path& script_path, const SandboxConfig& sandbox,
                              std::string cluster_name) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(script_path, ec)) {
    throw LaunchFailure("tool script not found: " + script_path.string());
  }
  auto impl = std::make_unique<ToolServerHandle::Impl>();
  impl->sandbox = sandbox;
  impl->cluster_name = std::move(cluster_name);
  impl->scratch.emplace("agentdistill-server");
  if (!sandbox.log_dir.empty()) {
    std::filesystem::create_directories(sandbox.log_dir, ec);
    impl->stderr_path = sandbox.log_dir / ("server-" + std::to_string(g_log_counter++) + ".stderr.log");
  } else {
    impl->stderr_path = impl->scratch->path() / "server.stderr.log";
  }
  SpawnOptions options;
  options.argv = sandbox.interpreter;
  options.argv.push_back(std::filesystem::absolute(script_path).string());
  options.cwd = impl->scratch->path();
  options.env = filtered_environment(sandbox.env_allowlist);
  options.stderr_path = impl->stderr_path;
  options.isolate_network = sandbox.isolate_network;
  impl->proc = Subprocess::spawn(options);
  return ToolServerHandle(std::move(impl));
}

MountedBox mount_box(const McpBox& box, const std::filesystem::path& box_root, const SandboxConfig& sandbox) {
  struct Slot {
    std::optional<ToolServerHandle> handle;
    std::string failure;
  };
  auto slots = parallel_map(box.entries.size(), sandbox.max_parallel, [&](std::size_t i) {
    const auto& entry = box.entries[i];
    Slot slot;
    try {
      auto handle = spawn_server(box_root / entry.tool_script_path, sandbox, entry.cluster_name);
      handle.initialize();
      slot.handle.emplace(std::move(handle));
    } catch (const Error& e) {
      slot.failure = e.what();
    }
    return slot;
  });
  MountedBox mounted;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].handle) {
      mounted.handles.push_back(std::move(*slots[i].handle));
    } else {
      const auto& entry = box.entries[i];
      logger().warn("mount: '{}' failed: {}", entry.cluster_name, slots[i].failure);
      mounted.failures.push_back({entry.cluster_name, entry.tool_script_path, slots[i].failure});
    }
  }
  return mounted;
}

}  // namespace agentdistill::mcp
