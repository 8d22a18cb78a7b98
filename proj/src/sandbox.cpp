/*
 * Copyright 2026 The Hallu Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hallu/error.hpp"
#include "hallu/tools.hpp"

namespace hallu {

namespace fs = std::filesystem;

namespace {

// Runs inside the child interpreter before the user's code. The audit hook
// confines file access to the interpreter's module search path (read only) and
// the working directory, and refuses sockets, subprocesses and ctypes.
constexpr const char* kPrelude = R"PY(
import os, sys, traceback
_work = os.path.realpath(os.getcwd())
_read_roots = [os.path.realpath(p) for p in sys.path if p] + [_work]
_devices = {'/dev/null', '/dev/urandom', '/dev/random'}
_blocked = ('socket.', 'subprocess.', 'os.system', 'os.exec', 'os.spawn', 'os.posix_spawn',
            'os.fork', 'os.forkpty', 'os.kill', 'os.killpg', 'ctypes.', 'pty.', 'webbrowser.')
_busy = [False]
_wflags = os.O_WRONLY | os.O_RDWR | os.O_CREAT | os.O_APPEND | os.O_TRUNC

def _inside(path, roots):
    return any(path == r or path.startswith(r.rstrip('/') + '/') for r in roots)

def _resolve(path):
    return os.path.realpath(os.fsdecode(path))

def _hook(event, args):
    if _busy[0]:
        return
    _busy[0] = True
    try:
        if event.startswith(_blocked):
            raise PermissionError('sandbox: %s is not permitted' % event)
        if event == 'open':
            path, mode, flags = args
            if path is None or isinstance(path, int):
                return
            p = _resolve(path)
            writing = bool(mode and any(c in mode for c in 'wax+')) or bool((flags or 0) & _wflags)
            if p in _devices:
                return
            if writing and not _inside(p, [_work]):
                raise PermissionError('sandbox: writing %s is not permitted' % p)
            if not _inside(p, _read_roots):
                raise PermissionError('sandbox: reading %s is not permitted' % p)
        elif event in ('os.remove', 'os.rename', 'os.rmdir', 'os.mkdir', 'os.chmod', 'os.chown',
                       'os.symlink', 'os.link', 'os.truncate', 'shutil.rmtree'):
            for a in args:
                if isinstance(a, (str, bytes, os.PathLike)) and not _inside(_resolve(a), [_work]):
                    raise PermissionError('sandbox: %s outside the work directory' % event)
        elif event in ('os.listdir', 'os.scandir', 'os.chdir'):
            a = args[0] if args else '.'
            if isinstance(a, (str, bytes, os.PathLike)) and not _inside(_resolve(a), _read_roots):
                raise PermissionError('sandbox: %s outside the work directory' % event)
    finally:
        _busy[0] = False

with open('main.py', 'r', encoding='utf-8') as _f:
    _code = compile(_f.read(), 'main.py', 'exec')
sys.addaudithook(_hook)
try:
    exec(_code, {'__name__': '__main__', '__builtins__': __builtins__})
except SystemExit:
    raise
except BaseException as e:
    sys.stdout.flush()
    traceback.print_exception(type(e), e, e.__traceback__.tb_next)
    sys.exit(1)
)PY";

std::string trim(std::string s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.back())) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && s[start] == '\n') ++start;
  return s.substr(start);
}

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<64>& s) : s_(s) { s_.acquire(); }
  ~SlotGuard() { s_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<64>& s_;
};

struct ChildOutput {
  std::string out;
  std::string err;
  bool timed_out = false;
  int status = 0;
};

void set_limit(int resource, rlim_t value) {
  rlimit lim{value, value};
  setrlimit(resource, &lim);
}

}  // namespace

std::string find_executable(const std::string& name) {
  if (name.find('/') != std::string::npos) return access(name.c_str(), X_OK) == 0 ? name : std::string{};
  const char* path = std::getenv("PATH");
  std::stringstream dirs(path ? path : "/usr/local/bin:/usr/bin:/bin");
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    if (dir.empty()) continue;
    auto candidate = fs::path(dir) / name;
    if (access(candidate.c_str(), X_OK) == 0) return candidate.string();
  }
  return {};
}

SubprocessSandbox::SubprocessSandbox(SandboxOptions options)
    : options_(std::move(options)),
      interpreter_path_(find_executable(options_.interpreter)),
      slots_(std::clamp(options_.max_concurrent, 1, 64)) {
  if (options_.max_concurrent < 1 || options_.max_concurrent > 64) {
    throw ConfigError("sandbox max_concurrent must be within 1..64");
  }
}

ToolResult SubprocessSandbox::execute(std::string_view source) {
  if (source.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    return ToolResult::failure(ToolErrorKind::bad_arguments, "empty source");
  }
  if (interpreter_path_.empty()) {
    return ToolResult::failure(ToolErrorKind::execution_error,
                               "interpreter '" + options_.interpreter + "' not found");
  }
  SlotGuard slot(slots_);

  std::string templ = (fs::temp_directory_path() / "hallu-sandbox-XXXXXX").string();
  if (!mkdtemp(templ.data())) {
    return ToolResult::failure(ToolErrorKind::execution_error, std::string("mkdtemp: ") + std::strerror(errno));
  }
  const fs::path work = templ;
  struct Cleanup {
    fs::path p;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(p, ec);
    }
  } cleanup{work};
  {
    std::ofstream main_file(work / "main.py", std::ios::binary);
    main_file << source;
  }

  std::array<int, 2> out_pipe{}, err_pipe{};
  if (pipe2(out_pipe.data(), O_CLOEXEC) != 0 || pipe2(err_pipe.data(), O_CLOEXEC) != 0) {
    return ToolResult::failure(ToolErrorKind::execution_error, std::string("pipe: ") + std::strerror(errno));
  }

  // Everything the child touches is prepared before fork.
  std::string work_str = work.string();
  std::string home_env = "HOME=" + work_str;
  std::vector<std::string> args = {interpreter_path_, "-I", "-S", "-B", "-c", kPrelude};
  std::vector<std::string> env = {"PATH=/usr/local/bin:/usr/bin:/bin", "PYTHONIOENCODING=utf-8", "LANG=C.UTF-8",
                                  home_env};
  std::vector<char*> argv, envp;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  for (auto& e : env) envp.push_back(e.data());
  envp.push_back(nullptr);
  const auto cpu_seconds = static_cast<rlim_t>(options_.wall_clock.count() / 1000 + 2);
  const auto memory = static_cast<rlim_t>(options_.memory_limit_bytes);
  const int devnull = open("/dev/null", O_RDONLY | O_CLOEXEC);

  pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1], devnull}) close(fd);
    return ToolResult::failure(ToolErrorKind::execution_error, std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    setpgid(0, 0);
    unshare(CLONE_NEWNET);
    set_limit(RLIMIT_AS, memory);
    set_limit(RLIMIT_CPU, cpu_seconds);
    set_limit(RLIMIT_FSIZE, rlim_t{16} << 20);
    set_limit(RLIMIT_CORE, 0);
    if (chdir(work_str.c_str()) != 0) _exit(126);
    dup2(devnull, STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    execve(argv[0], argv.data(), envp.data());
    _exit(127);
  }
  setpgid(pid, pid);
  close(out_pipe[1]);
  close(err_pipe[1]);
  if (devnull >= 0) close(devnull);

  ChildOutput result;
  const auto deadline = std::chrono::steady_clock::now() + options_.wall_clock;
  std::array<pollfd, 2> fds{pollfd{out_pipe[0], POLLIN, 0}, pollfd{err_pipe[0], POLLIN, 0}};
  std::array<std::string*, 2> sinks{&result.out, &result.err};
  int open_fds = 2;
  std::array<char, 4096> buf{};
  while (open_fds > 0) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      result.timed_out = true;
      break;
    }
    int ready = poll(fds.data(), fds.size(), static_cast<int>(left.count()));
    if (ready < 0 && errno == EINTR) continue;
    if (ready <= 0) continue;
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      ssize_t n = read(fds[i].fd, buf.data(), buf.size());
      if (n > 0) {
        auto room = options_.output_limit_bytes - std::min(options_.output_limit_bytes, sinks[i]->size());
        sinks[i]->append(buf.data(), std::min(static_cast<std::size_t>(n), room));
      } else if (n == 0 || errno != EINTR) {
        close(fds[i].fd);
        fds[i].fd = -1;
        --open_fds;
      }
    }
  }
  if (result.timed_out) kill(-pid, SIGKILL);
  for (auto& f : fds) {
    if (f.fd >= 0) close(f.fd);
  }
  // The output pipes closing does not mean the child is gone; wait it out
  // against the same deadline.
  while (true) {
    pid_t r = waitpid(pid, &result.status, WNOHANG);
    if (r == pid || (r < 0 && errno != EINTR)) break;
    if (std::chrono::steady_clock::now() >= deadline) {
      result.timed_out = true;
      kill(-pid, SIGKILL);
      waitpid(pid, &result.status, 0);
      break;
    }
    usleep(2000);
  }

  if (result.timed_out) {
    return ToolResult::failure(ToolErrorKind::timeout,
                               "Execution timed out after " + std::to_string(options_.wall_clock.count()) + " ms");
  }
  if (WIFEXITED(result.status) && WEXITSTATUS(result.status) == 0) {
    return ToolResult::success(trim(result.out));
  }
  std::string detail = trim(result.err);
  if (detail.empty()) detail = trim(result.out);
  if (WIFSIGNALED(result.status)) {
    int sig = WTERMSIG(result.status);
    detail += (detail.empty() ? "" : "\n") + std::string("terminated by signal ") + std::to_string(sig) +
              (sig == SIGXCPU ? " (CPU limit)" : "");
  } else if (detail.empty()) {
    detail = "exited with status " + std::to_string(WEXITSTATUS(result.status));
  }
  return ToolResult::failure(ToolErrorKind::execution_error, detail);
}

}  // namespace hallu
