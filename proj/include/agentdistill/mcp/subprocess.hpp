#pragma once

#include "agentdistill/core/errors.hpp"

#include <sys/types.h>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace agentdistill::mcp {

class LaunchFailure : public Error {
 public:
  using Error::Error;
};

struct SpawnOptions {
  std::vector<std::string> argv;
  std::filesystem::path cwd;
  std::vector<std::string> env;  // KEY=VALUE
  std::filesystem::path stderr_path;  // empty -> /dev/null
  bool isolate_network = false;  // best effort, silently skipped if not permitted
};

// A child process in its own process group with piped stdin/stdout. A
// dedicated thread drains stdout into a line queue. Destruction kills the
// group and reaps the child.
class Subprocess {
 public:
  enum class ReadStatus { line, timeout, eof };
  struct ReadResult {
    ReadStatus status;
    std::string line;
  };

  static std::unique_ptr<Subprocess> spawn(const SpawnOptions& options);

  ~Subprocess();
  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  pid_t pid() const { return pid_; }

  // false if the pipe is closed (child gone or stdin already closed).
  bool write_line(const std::string& line);
  void close_stdin();

  ReadResult read_line(std::chrono::steady_clock::time_point deadline);

  // Waits up to `timeout` for the child to exit; true once reaped.
  bool wait_exit(std::chrono::milliseconds timeout);
  void kill_and_reap();
  bool running();
  std::optional<int> exit_status() const { return exit_status_; }

 private:
  Subprocess() = default;
  void reader_loop();
  bool try_reap();

  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  int wake_read_ = -1;
  int wake_write_ = -1;
  std::optional<int> exit_status_;

  std::thread reader_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> lines_;
  bool eof_ = false;
};

// Resolves a bare command name against PATH; names containing '/' are
// returned as-is when executable.
std::optional<std::filesystem::path> find_executable(const std::string& name);

// Snapshot of the current environment restricted to the given variable names.
std::vector<std::string> filtered_environment(const std::vector<std::string>& allowlist);

// Live child processes of this process (zombies included), from /proc.
std::vector<pid_t> child_processes();

}  // namespace agentdistill::mcp
