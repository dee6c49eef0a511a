#include "agentdistill/mcp/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

extern char** environ;

namespace agentdistill::mcp {
namespace {

void ignore_sigpipe_once() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

void close_fd(int& fd) {
  if (fd >= 0) {
    ::close(fd);
    fd = -1;
  }
}

std::vector<char*> c_strings(std::vector<std::string>& items) {
  std::vector<char*> out;
  out.reserve(items.size() + 1);
  for (auto& s : items) out.push_back(s.data());
  out.push_back(nullptr);
  return out;
}

}  // namespace

std::optional<std::filesystem::path> find_executable(const std::string& name) {
  if (name.empty()) return std::nullopt;
  if (name.find('/') != std::string::npos) {
    if (::access(name.c_str(), X_OK) == 0) return std::filesystem::path(name);
    return std::nullopt;
  }
  const char* path = std::getenv("PATH");
  std::stringstream dirs(path ? path : "/usr/local/bin:/usr/bin:/bin");
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    if (dir.empty()) dir = ".";
    const auto candidate = std::filesystem::path(dir) / name;
    struct stat st {};
    if (::stat(candidate.c_str(), &st) == 0 && S_ISREG(st.st_mode) && ::access(candidate.c_str(), X_OK) == 0) {
      return candidate;
    }
  }
  return std::nullopt;
}

std::vector<std::string> filtered_environment(const std::vector<std::string>& allowlist) {
  std::vector<std::string> out;
  for (char** e = environ; e && *e; ++e) {
    std::string_view entry(*e);
    const auto eq = entry.find('=');
    if (eq == std::string_view::npos) continue;
    const std::string key(entry.substr(0, eq));
    for (const auto& allowed : allowlist) {
      if (allowed == key) {
        out.emplace_back(entry);
        break;
      }
    }
  }
  return out;
}

std::vector<pid_t> child_processes() {
  std::vector<pid_t> out;
  const pid_t self = ::getpid();
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator("/proc", ec)) {
    const std::string name = entry.path().filename().string();
    if (name.find_first_not_of("0123456789") != std::string::npos) continue;
    std::ifstream stat(entry.path() / "stat");
    std::string content;
    if (!std::getline(stat, content)) continue;
    // pid (comm) state ppid ...; comm may contain spaces, so anchor on ')'.
    const auto close = content.rfind(')');
    if (close == std::string::npos) continue;
    std::istringstream rest(content.substr(close + 1));
    char state = 0;
    pid_t ppid = 0;
    rest >> state >> ppid;
    if (ppid == self) out.push_back(static_cast<pid_t>(std::stol(name)));
  }
  return out;
}

std::unique_ptr<Subprocess> Subprocess::spawn(const SpawnOptions& options) {
  ignore_sigpipe_once();
  if (options.argv.empty()) throw LaunchFailure("empty command line");
  const auto exe = find_executable(options.argv.front());
  if (!exe) {
    throw LaunchFailure("cannot execute '" + options.argv.front() + "': " + std::strerror(ENOENT));
  }

  std::vector<std::string> argv = options.argv;
  std::vector<std::string> env = options.env;
  auto c_argv = c_strings(argv);
  auto c_env = c_strings(env);
  const std::string exe_path = exe->string();
  const std::string cwd = options.cwd.string();
  const std::string err_path = options.stderr_path.empty() ? "/dev/null" : options.stderr_path.string();

  int in_pipe[2] = {-1, -1};
  int out_pipe[2] = {-1, -1};
  int status_pipe[2] = {-1, -1};
  if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0 ||
      ::pipe2(status_pipe, O_CLOEXEC) != 0) {
    const std::string reason = std::strerror(errno);
    for (int* p : {in_pipe, out_pipe, status_pipe}) {
      close_fd(p[0]);
      close_fd(p[1]);
    }
    throw LaunchFailure("pipe: " + reason);
  }
  int err_fd = ::open(err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (err_fd < 0) {
    const std::string reason = std::strerror(errno);
    for (int* p : {in_pipe, out_pipe, status_pipe}) {
      close_fd(p[0]);
      close_fd(p[1]);
    }
    throw LaunchFailure("cannot open stderr log " + err_path + ": " + reason);
  }

  const pid_t pid = ::fork();
  if (pid < 0) {
    const std::string reason = std::strerror(errno);
    for (int* p : {in_pipe, out_pipe, status_pipe}) {
      close_fd(p[0]);
      close_fd(p[1]);
    }
    close_fd(err_fd);
    throw LaunchFailure("fork: " + reason);
  }
  if (pid == 0) {
    // Child: async-signal-safe calls only.
    ::setpgid(0, 0);
    ::signal(SIGPIPE, SIG_DFL);
    if (options.isolate_network) (void)::unshare(CLONE_NEWNET);
    int err = 0;
    if (::dup2(in_pipe[0], STDIN_FILENO) < 0 || ::dup2(out_pipe[1], STDOUT_FILENO) < 0 ||
        ::dup2(err_fd, STDERR_FILENO) < 0) {
      err = errno;
    } else if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) {
      err = errno;
    } else {
      ::execve(exe_path.c_str(), c_argv.data(), c_env.data());
      err = errno;
    }
    (void)!::write(status_pipe[1], &err, sizeof err);
    ::_exit(127);
  }

  ::setpgid(pid, pid);
  close_fd(in_pipe[0]);
  close_fd(out_pipe[1]);
  close_fd(status_pipe[1]);
  close_fd(err_fd);

  int child_errno = 0;
  ssize_t n;
  do {
    n = ::read(status_pipe[0], &child_errno, sizeof child_errno);
  } while (n < 0 && errno == EINTR);
  close_fd(status_pipe[0]);
  if (n > 0) {
    int status = 0;
    ::waitpid(pid, &status, 0);
    close_fd(in_pipe[1]);
    close_fd(out_pipe[0]);
    throw LaunchFailure("cannot execute '" + options.argv.front() + "': " + std::strerror(child_errno));
  }

  std::unique_ptr<Subprocess> proc(new Subprocess());
  proc->pid_ = pid;
  proc->stdin_fd_ = in_pipe[1];
  proc->stdout_fd_ = out_pipe[0];
  int wake[2];
  if (::pipe2(wake, O_CLOEXEC) != 0) {
    proc->kill_and_reap();
    throw LaunchFailure(std::string("pipe: ") + std::strerror(errno));
  }
  proc->wake_read_ = wake[0];
  proc->wake_write_ = wake[1];
  proc->reader_ = std::thread([p = proc.get()] { p->reader_loop(); });
  return proc;
}

Subprocess::~Subprocess() {
  kill_and_reap();
  if (wake_write_ >= 0) {
    const char c = 'x';
    (void)!::write(wake_write_, &c, 1);
  }
  if (reader_.joinable()) reader_.join();
  close_fd(stdin_fd_);
  close_fd(stdout_fd_);
  close_fd(wake_read_);
  close_fd(wake_write_);
}

void Subprocess::reader_loop() {
  std::string partial;
  char buf[4096];
  for (;;) {
    pollfd fds[2] = {{stdout_fd_, POLLIN, 0}, {wake_read_, POLLIN, 0}};
    const int rc = ::poll(fds, 2, -1);
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (fds[1].revents != 0) break;
    if (fds[0].revents == 0) continue;
    const ssize_t n = ::read(stdout_fd_, buf, sizeof buf);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      break;
    }
    if (n == 0) break;
    std::lock_guard<std::mutex> lock(mu_);
    for (ssize_t i = 0; i < n; ++i) {
      if (buf[i] == '\n') {
        if (!partial.empty() && partial.back() == '\r') partial.pop_back();
        lines_.push_back(std::move(partial));
        partial.clear();
      } else {
        partial.push_back(buf[i]);
      }
    }
    cv_.notify_all();
  }
  std::lock_guard<std::mutex> lock(mu_);
  if (!partial.empty()) lines_.push_back(std::move(partial));
  eof_ = true;
  cv_.notify_all();
}

bool Subprocess::write_line(const std::string& line) {
  if (stdin_fd_ < 0) return false;
  std::string data = line;
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(stdin_fd_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

void Subprocess::close_stdin() { close_fd(stdin_fd_); }

Subprocess::ReadResult Subprocess::read_line(std::chrono::steady_clock::time_point deadline) {
  std::unique_lock<std::mutex> lock(mu_);
  cv_.wait_until(lock, deadline, [&] { return !lines_.empty() || eof_; });
  if (!lines_.empty()) {
    ReadResult r{ReadStatus::line, std::move(lines_.front())};
    lines_.pop_front();
    return r;
  }
  if (eof_) return {ReadStatus::eof, {}};
  return {ReadStatus::timeout, {}};
}

bool Subprocess::try_reap() {
  if (exit_status_) return true;
  if (pid_ <= 0) return true;
  int status = 0;
  const pid_t r = ::waitpid(pid_, &status, WNOHANG);
  if (r == pid_) {
    exit_status_ = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    // Reap stragglers in the group so nothing is left behind.
    ::kill(-pid_, SIGKILL);
    return true;
  }
  if (r < 0 && errno == ECHILD) {
    exit_status_ = -1;
    return true;
  }
  return false;
}

bool Subprocess::running() { return !try_reap(); }

bool Subprocess::wait_exit(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (!try_reap()) {
    if (std::chrono::steady_clock::now() >= deadline) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return true;
}

void Subprocess::kill_and_reap() {
  if (pid_ <= 0 || exit_status_) return;
  ::kill(-pid_, SIGKILL);
  ::kill(pid_, SIGKILL);
  int status = 0;
  pid_t r;
  do {
    r = ::waitpid(pid_, &status, 0);
  } while (r < 0 && errno == EINTR);
  exit_status_ = r == pid_ && WIFEXITED(status) ? WEXITSTATUS(status) : 128 + SIGKILL;
  if (r == pid_ && WIFSIGNALED(status)) exit_status_ = 128 + WTERMSIG(status);
}

}  // namespace agentdistill::mcp
