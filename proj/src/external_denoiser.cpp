// Copyright 2026 The scoredvi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "external_denoiser.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "errors.hpp"
#include "image_io.hpp"

namespace sdvi {
namespace fs = std::filesystem;
namespace {

constexpr std::size_t kMaxDiagnosticBytes = 2000;

class TempDir {
 public:
  TempDir() {
    const char* base = std::getenv("TMPDIR");
    std::string pattern = std::string(base && *base ? base : "/tmp") + "/sdvi-oracle-XXXXXX";
    if (!mkdtemp(pattern.data())) throw IoError("cannot create temporary directory for oracle");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

std::string read_tail(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (s.size() > kMaxDiagnosticBytes) s = "..." + s.substr(s.size() - kMaxDiagnosticBytes);
  return s;
}

struct ProcessOutcome {
  bool timed_out = false;
  int exit_code = -1;
  int signal = 0;
};

ProcessOutcome run_shell(const std::string& cmd, const fs::path& log, std::chrono::milliseconds timeout) {
  const pid_t pid = fork();
  if (pid < 0) throw OracleError("fork failed while launching external denoiser");
  if (pid == 0) {
    setpgid(0, 0);
    const int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    if (fd >= 0) {
      dup2(fd, STDOUT_FILENO);
      dup2(fd, STDERR_FILENO);
      close(fd);
    }
    execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  ProcessOutcome out;
  int status = 0;
  for (;;) {
    const pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw OracleError("waitpid failed for external denoiser");
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      out.timed_out = true;
      return out;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  if (WIFEXITED(status)) out.exit_code = WEXITSTATUS(status);
  if (WIFSIGNALED(status)) out.signal = WTERMSIG(status);
  return out;
}

}  // namespace

ExternalOracle::ExternalOracle(std::string command_template, std::chrono::milliseconds timeout,
                               std::optional<ValidityRange> range, bool concurrent_safe)
    : template_(std::move(command_template)),
      timeout_(timeout),
      range_(range),
      concurrent_safe_(concurrent_safe) {
  if (template_.find("{in}") == std::string::npos || template_.find("{out}") == std::string::npos) {
    throw ArgumentError("external oracle command must contain {in} and {out} placeholders");
  }
  if (timeout_.count() <= 0) throw ArgumentError("external oracle timeout must be positive");
}

ImageTensor ExternalOracle::denoise(const ImageTensor& noisy, const ImageTensor& noise_var) const {
  require_same_shape(noisy, noise_var, "external_denoise");
  TempDir dir;
  const fs::path in = dir.path() / "in.sdvi";
  const fs::path out = dir.path() / "out.sdvi";
  const fs::path nv = dir.path() / "nv.sdvi";
  const fs::path log = dir.path() / "log.txt";
  write_tensor(in.string(), noisy);
  write_tensor(nv.string(), noise_var);

  std::string cmd = replace_all(template_, "{in}", in.string());
  cmd = replace_all(cmd, "{out}", out.string());
  cmd = replace_all(cmd, "{nv}", nv.string());

  const ProcessOutcome r = run_shell(cmd, log, timeout_);
  const std::string diag = read_tail(log);
  if (r.timed_out) {
    throw OracleError("external denoiser timed out after " + std::to_string(timeout_.count()) +
                      " ms: " + cmd + (diag.empty() ? "" : "\n" + diag));
  }
  if (r.signal != 0) {
    throw OracleError("external denoiser killed by signal " + std::to_string(r.signal) +
                      (diag.empty() ? "" : "\n" + diag));
  }
  if (r.exit_code != 0) {
    throw OracleError("external denoiser exited with status " + std::to_string(r.exit_code) +
                      (diag.empty() ? "" : "\n" + diag));
  }
  ImageTensor result;
  try {
    result = read_tensor(out.string());
  } catch (const Error& e) {
    throw OracleError(std::string("external denoiser produced no valid output tensor: ") + e.what() +
                      (diag.empty() ? "" : "\n" + diag));
  }
  if (!result.same_shape(noisy)) {
    throw OracleError("external denoiser output shape " + result.shape_string() +
                      " does not match input " + noisy.shape_string());
  }
  if (!result.all_finite()) throw OracleError("external denoiser output contains non-finite values");
  return result;
}

ImageTensor external_denoise(const ImageTensor& noisy, const ImageTensor& noise_var,
                             const std::string& command_template, std::chrono::milliseconds timeout) {
  return ExternalOracle(command_template, timeout).denoise(noisy, noise_var);
}

}  // namespace sdvi
