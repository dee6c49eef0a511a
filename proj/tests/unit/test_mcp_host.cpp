#include "doctest.h"

#include "agentdistill/mcp/host.hpp"
#include "paths.hpp"

#include <chrono>
#include <thread>

using namespace agentdistill;
using namespace agentdistill::mcp;
using testing_paths::fault_tool;
using testing_paths::fixture_tool;

namespace {

SandboxConfig quick_sandbox() {
  SandboxConfig s;
  s.timeout_ms = 5000;
  s.call_timeout_ms = 5000;
  s.shutdown_grace_ms = 500;
  return s;
}

std::int64_t ms_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t).count();
}

}  // namespace

TEST_CASE("echo fixture: spawn, initialize, list, call, shutdown") {
  auto handle = spawn_server(fixture_tool("echo.py"), quick_sandbox(), "echo utils");
  CHECK(handle.state() == ServerState::starting);
  CHECK(handle.cluster_name() == "echo utils");
  const auto info = handle.initialize();
  CHECK(info.name == "echo");
  CHECK(handle.state() == ServerState::ready);
  REQUIRE(handle.tools().size() == 1);
  CHECK(handle.tools()[0].name == "echo");
  REQUIRE(handle.tools()[0].parameters.size() == 1);
  CHECK(handle.tools()[0].parameters[0].name == "text");
  CHECK(handle.tools()[0].parameters[0].required);
  CHECK(handle.tools()[0].parameters[0].type == "string");

  const auto hi = handle.call_tool("echo", {{"text", "hi"}});
  CHECK_FALSE(hi.is_error);
  CHECK(hi.content == "hi");
  CHECK(hi.elapsed_ms >= 0);

  const auto unknown = handle.call_tool("nope", json::object());
  CHECK(unknown.is_error);
  CHECK(unknown.content.find("not found") != std::string::npos);
  CHECK(handle.state() == ServerState::ready);

  const auto bad_args = handle.call_tool("echo", {{"wrong", 1}});
  CHECK(bad_args.is_error);
  CHECK(bad_args.content.find("-32602") != std::string::npos);

  handle.shutdown();
  CHECK(handle.state() == ServerState::stopped);
  handle.shutdown();
  CHECK(handle.state() == ServerState::stopped);
  CHECK_THROWS_AS(handle.call_tool("echo", {{"text", "x"}}), Error);
}

TEST_CASE("raising tool surfaces as is_error and the handle stays ready") {
  auto handle = spawn_server(fixture_tool("raising.py"), quick_sandbox());
  handle.initialize();
  const auto r = handle.call_tool("explode", {{"reason", "kaboom"}});
  CHECK(r.is_error);
  CHECK(r.content.find("kaboom") != std::string::npos);
  CHECK(handle.state() == ServerState::ready);
  CHECK(handle.call_tool("explode", json::object()).is_error);
}

TEST_CASE("spawn_server launch failures") {
  CHECK_THROWS_AS(spawn_server("/nonexistent/tool.py", quick_sandbox()), LaunchFailure);
  auto sandbox = quick_sandbox();
  sandbox.interpreter = {"definitely-not-an-interpreter-xyz"};
  try {
    spawn_server(fixture_tool("echo.py"), sandbox);
    FAIL("expected LaunchFailure");
  } catch (const LaunchFailure& e) {
    CHECK(std::string(e.what()).find("No such file") != std::string::npos);
  }
}

TEST_CASE("protocol violations: mismatched id and malformed JSON") {
  {
    auto handle = spawn_server(fault_tool("mismatched_id.py"), quick_sandbox());
    CHECK_THROWS_AS(handle.initialize(), ProtocolViolation);
    CHECK(handle.state() == ServerState::failed);
  }
  {
    auto handle = spawn_server(fault_tool("malformed_json.py"), quick_sandbox());
    CHECK_THROWS_AS(handle.initialize(), ProtocolViolation);
    CHECK(handle.state() == ServerState::failed);
  }
  {
    auto handle = spawn_server(fault_tool("no_tools.py"), quick_sandbox());
    CHECK_THROWS_AS(handle.initialize(), ProtocolViolation);
  }
}

TEST_CASE("server exiting before the handshake reports its status and stderr") {
  auto handle = spawn_server(fault_tool("exit_early.py"), quick_sandbox());
  try {
    handle.initialize();
    FAIL("expected ServerExited");
  } catch (const ServerExited& e) {
    REQUIRE(e.exit_status());
    CHECK(*e.exit_status() == 3);
    CHECK(e.stderr_tail().find("missing dependency") != std::string::npos);
  }
  CHECK(handle.state() == ServerState::failed);
}

TEST_CASE("notifications from the server are ignored") {
  auto handle = spawn_server(fault_tool("chatty_echo.py"), quick_sandbox());
  handle.initialize();
  CHECK(handle.call_tool("echo", {{"text", "quiet"}}).content == "quiet");
}

TEST_CASE("silent server times out the handshake at the configured bound") {
  auto sandbox = quick_sandbox();
  sandbox.timeout_ms = 1000;
  auto handle = spawn_server(fixture_tool("hang.py"), sandbox);
  const auto start = std::chrono::steady_clock::now();
  CHECK_THROWS_AS(handle.initialize(), Timeout);
  const auto elapsed = ms_since(start);
  CHECK(elapsed >= 800);
  CHECK(elapsed <= 1200);
  CHECK(handle.state() == ServerState::failed);
}

TEST_CASE("call timeout kills the server and marks it failed") {
  auto sandbox = quick_sandbox();
  sandbox.call_timeout_ms = 500;
  auto handle = spawn_server(fault_tool("stubborn.py"), sandbox);
  handle.initialize();
  CHECK_THROWS_AS(handle.call_tool("sleep_forever", json::object()), Timeout);
  CHECK(handle.state() == ServerState::failed);
  CHECK(child_processes().empty());
}

TEST_CASE("shutdown kills a server that ignores stdin EOF after the grace period") {
  auto sandbox = quick_sandbox();
  sandbox.shutdown_grace_ms = 2000;
  auto handle = spawn_server(fault_tool("stubborn.py"), sandbox);
  handle.initialize();
  const auto start = std::chrono::steady_clock::now();
  handle.shutdown();
  const auto elapsed = ms_since(start);
  CHECK(elapsed >= 1900);
  CHECK(elapsed <= 3000);
  CHECK(handle.state() == ServerState::stopped);
  CHECK(child_processes().empty());
}

TEST_CASE("stderr is captured to a per-handle log") {
  auto sandbox = quick_sandbox();
  TempDir logs;
  sandbox.log_dir = logs.path();
  auto handle = spawn_server(fault_tool("exit_early.py"), sandbox);
  CHECK_THROWS(handle.initialize());
  CHECK(handle.stderr_log().parent_path() == logs.path());
  CHECK(handle.stderr_tail().find("missing dependency") != std::string::npos);
}

TEST_CASE("mount_box: every entry is either ready or reported") {
  TempDir root;
  std::filesystem::create_directories(root.path() / "tools");
  auto put = [&](const char* src, const char* name) {
    std::filesystem::copy_file(src, root.path() / "tools" / name);
  };
  put(fixture_tool("echo.py").c_str(), "echo.tool");
  put(fixture_tool("game24_solver.py").c_str(), "numeric.tool");
  put(fixture_tool("brain_region_analyzer.py").c_str(), "image.tool");
  put(fixture_tool("broken.py").c_str(), "broken.tool");

  McpBox box;
  box.entries = {{"tools/echo.tool", "echo", {}},
                 {"tools/image.tool", "image utils", {}},
                 {"tools/numeric.tool", "numeric analysis", {}}};
  {
    auto mounted = mount_box(box, root.path(), quick_sandbox());
    REQUIRE(mounted.handles.size() == 3);
    CHECK(mounted.failures.empty());
    CHECK(mounted.handles[0].cluster_name() == "echo");
    CHECK(mounted.handles[1].cluster_name() == "image utils");
    CHECK(mounted.handles[2].cluster_name() == "numeric analysis");
    for (const auto& h : mounted.handles) CHECK(h.state() == ServerState::ready);
  }
  box.entries[1].tool_script_path = "tools/broken.tool";
  {
    auto mounted = mount_box(box, root.path(), quick_sandbox());
    CHECK(mounted.handles.size() == 2);
    REQUIRE(mounted.failures.size() == 1);
    CHECK(mounted.failures[0].cluster_name == "image utils");
  }
  CHECK(mount_box(McpBox{}, root.path(), quick_sandbox()).handles.empty());
  CHECK(child_processes().empty());
}

TEST_CASE("no child processes remain after all handles are gone") {
  {
    std::vector<ToolServerHandle> handles;
    for (int i = 0; i < 3; ++i) {
      handles.push_back(spawn_server(fixture_tool("echo.py"), quick_sandbox()));
      handles.back().initialize();
    }
    CHECK(child_processes().size() == 3);
  }
  CHECK(child_processes().empty());
}
