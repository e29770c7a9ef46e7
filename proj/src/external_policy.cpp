// Child-process transport for the line-delimited JSON policy protocol.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "guardad/error.hpp"
#include "guardad/policy.hpp"

namespace guardad {

using Clock = std::chrono::steady_clock;

class ExternalPolicy::Process {
 public:
  explicit Process(const std::string& command) {
    static const bool sigpipe_ignored = [] {
      ::signal(SIGPIPE, SIG_IGN);
      return true;
    }();
    (void)sigpipe_ignored;

    int in_pipe[2];
    int out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw LaunchError(std::string("pipe: ") + std::strerror(errno));
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      throw LaunchError(std::string("pipe: ") + std::strerror(errno));
    }
    pid_ = ::fork();
    if (pid_ < 0) {
      for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
      throw LaunchError(std::string("fork: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
  }

  ~Process() {
    close_input();
    if (from_child_ >= 0) ::close(from_child_);
    if (pid_ > 0 && !reaped_) {
      if (!wait_exit(std::chrono::milliseconds(200))) {
        ::kill(pid_, SIGKILL);
        int status = 0;
        ::waitpid(pid_, &status, 0);
      }
    }
  }

  Process(const Process&) = delete;
  Process& operator=(const Process&) = delete;

  void write_line(const std::string& line) {
    if (to_child_ < 0) throw ProtocolError("policy input stream already closed");
    std::string data = line + '\n';
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::write(to_child_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail_on_exit("policy process stopped reading its input");
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout) {
    const auto deadline = Clock::now() + timeout;
    for (;;) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (left.count() <= 0) throw Timeout("policy process did not reply within " + std::to_string(timeout.count()) + " ms");
      pollfd p{from_child_, POLLIN, 0};
      const int ready = ::poll(&p, 1, static_cast<int>(left.count()));
      if (ready < 0 && errno == EINTR) continue;
      if (ready < 0) throw ProtocolError(std::string("poll: ") + std::strerror(errno));
      if (ready == 0) continue;
      char chunk[4096];
      const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) fail_on_exit("policy process closed its output");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  void close_input() {
    if (to_child_ >= 0) {
      ::close(to_child_);
      to_child_ = -1;
    }
  }

  /// Waits up to `limit` for the child to exit.
  bool wait_exit(std::chrono::milliseconds limit) {
    if (reaped_) return true;
    const auto deadline = Clock::now() + limit;
    for (;;) {
      const pid_t r = ::waitpid(pid_, &status_, WNOHANG);
      if (r == pid_) {
        reaped_ = true;
        return true;
      }
      if (r < 0) return false;
      if (Clock::now() >= deadline) return false;
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  }

  int exit_code() const { return WIFEXITED(status_) ? WEXITSTATUS(status_) : -1; }

 private:
  [[noreturn]] void fail_on_exit(const std::string& what) {
    if (wait_exit(std::chrono::milliseconds(500))) {
      const int code = exit_code();
      if (code == 126 || code == 127) throw LaunchError("policy command could not be started (exit " + std::to_string(code) + ")");
      throw ProtocolError(what + " (exit " + std::to_string(code) + ")");
    }
    throw ProtocolError(what);
  }

  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  int status_ = 0;
  bool reaped_ = false;
};

ExternalPolicy::ExternalPolicy(const std::string& command, std::chrono::milliseconds timeout)
    : process_(std::make_unique<Process>(command)), timeout_(timeout) {
  json hello;
  hello["type"] = "hello";
  hello["version"] = std::string(kProtocolVersion);
  process_->write_line(hello.dump());
  const std::string line = process_->read_line(timeout);
  json reply;
  try {
    reply = json::parse(line);
  } catch (const json::parse_error&) {
    throw ProtocolError("hello reply is not valid JSON: '" + line.substr(0, 80) + "'");
  }
  if (!reply.is_object() || reply.value("type", std::string{}) != "hello" || !reply.contains("version") ||
      !reply["version"].is_string()) {
    throw ProtocolError("malformed hello reply: '" + line.substr(0, 80) + "'");
  }
  version_ = reply["version"].get<std::string>();
  if (version_ != kProtocolVersion) {
    throw VersionMismatch("policy speaks protocol version '" + version_ + "', engine supports '" +
                          std::string(kProtocolVersion) + "'");
  }
}

ExternalPolicy::~ExternalPolicy() {
  if (!process_) return;
  try {
    shutdown();
  } catch (const Error&) {
    // the process destructor kills a child that will not exit
  }
}

ActionDistribution ExternalPolicy::decide(const PolicyRequest& request) {
  if (!process_) throw PolicyError("external policy already shut down");
  if (request.history.empty()) throw PolicyError("policy request has an empty history");
  process_->write_line(decide_request_line(request));
  return parse_decision_reply(process_->read_line(timeout_));
}

int ExternalPolicy::shutdown() {
  if (!process_) return 0;
  auto process = std::move(process_);
  json msg;
  msg["type"] = "shutdown";
  process->write_line(msg.dump());
  process->close_input();
  if (!process->wait_exit(timeout_)) throw Timeout("policy process did not exit after shutdown");
  return process->exit_code();
}

std::string external_handshake(const std::string& command, std::chrono::milliseconds timeout) {
  ExternalPolicy policy(command, timeout);
  std::string version = policy.version();
  policy.shutdown();
  return version;
}

}  // namespace guardad
