#include "maxcode/executor.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

#include "maxcode/util.hpp"

namespace maxcode {

namespace {

std::string substitute(std::string templ, const std::string& key, const std::string& value) {
  std::string marker = "{" + key + "}";
  std::size_t pos;
  while ((pos = templ.find(marker)) != std::string::npos) {
    templ.replace(pos, marker.size(), value);
  }
  return templ;
}

struct RunResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string stdout_text;
  std::string stderr_text;
  double wall_ms = 0.0;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Runs `command` through /bin/sh with optional stdin file, capturing stdout
// and stderr to files in `dir`. Kills the process group on timeout.
RunResult run_command(const std::string& command, const std::filesystem::path& dir,
                      const std::filesystem::path* stdin_file, int timeout_ms) {
  std::filesystem::path out_path = dir / "__stdout";
  std::filesystem::path err_path = dir / "__stderr";

  auto start = std::chrono::steady_clock::now();
  pid_t pid = fork();
  if (pid < 0) throw InfrastructureError("fork failed");
  if (pid == 0) {
    setpgid(0, 0);
    if (stdin_file) {
      int fd = open(stdin_file->c_str(), O_RDONLY);
      if (fd < 0) _exit(125);
      dup2(fd, STDIN_FILENO);
      close(fd);
    } else {
      int fd = open("/dev/null", O_RDONLY);
      dup2(fd, STDIN_FILENO);
      close(fd);
    }
    int out_fd = open(out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    int err_fd = open(err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (out_fd < 0 || err_fd < 0) _exit(125);
    dup2(out_fd, STDOUT_FILENO);
    dup2(err_fd, STDERR_FILENO);
    close(out_fd);
    close(err_fd);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(126);
  }

  RunResult result;
  int status = 0;
  auto deadline = start + std::chrono::milliseconds(timeout_ms);
  while (true) {
    pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw InfrastructureError("waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(-pid, SIGKILL);
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      result.timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::microseconds(200));
  }
  auto end = std::chrono::steady_clock::now();
  result.wall_ms = std::chrono::duration<double, std::milli>(end - start).count();
  if (!result.timed_out) {
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -WTERMSIG(status);
  }
  result.stdout_text = slurp(out_path);
  result.stderr_text = slurp(err_path);
  if (!result.timed_out && result.exit_code == 125) {
    throw InfrastructureError("failed to set up candidate process redirections");
  }
  return result;
}

std::string excerpt(const std::string& s, std::size_t limit = 80) {
  if (s.size() <= limit) return s;
  return s.substr(0, limit) + "...";
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  std::size_t n = xs.size();
  if (n == 0) return 0.0;
  if (n % 2 == 1) return xs[n / 2];
  return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

struct CandidateSetup {
  std::filesystem::path dir;
  std::string run_command;
  bool compiled = false;
  std::string compiler_output;
};

// Writes the source, compiles it, and returns the concrete run command.
CandidateSetup setup_candidate(const ExecConfig& config, const ProblemSpec& problem,
                               const std::string& code,
                               const std::string& scratch_name) {
  CandidateSetup setup;
  setup.dir = config.workdir_root / problem.id / scratch_name;
  std::error_code ec;
  std::filesystem::create_directories(setup.dir, ec);
  if (ec) throw InfrastructureError("cannot create scratch dir " + setup.dir.string());

  std::filesystem::path src = setup.dir / ("candidate" + config.source_extension);
  std::filesystem::path bin = setup.dir / "candidate.bin";
  {
    std::ofstream out(src, std::ios::binary);
    if (!out) throw InfrastructureError("cannot write source file " + src.string());
    out << code;
  }

  std::string compile_cmd = substitute(
      substitute(config.compile_command_template, "src", src.string()), "bin", bin.string());
  RunResult cr = run_command(compile_cmd, setup.dir, nullptr, std::max(config.timeout_ms, 60000));
  if (cr.timed_out || cr.exit_code != 0) {
    setup.compiled = false;
    setup.compiler_output = cr.timed_out ? "compiler timeout" : cr.stderr_text + cr.stdout_text;
    return setup;
  }
  setup.compiled = true;
  setup.run_command = substitute(
      substitute(config.run_command_template, "bin", bin.string()), "src", src.string());
  return setup;
}

// One full pass over all test cases; returns total wall ms, or std::nullopt
// with a detail string on the first failing case.
std::optional<double> run_test_pass(const ExecConfig& config, const ProblemSpec& problem,
                                    const CandidateSetup& setup, std::string* fail_detail) {
  double total_ms = 0.0;
  for (std::size_t i = 0; i < problem.test_cases.size(); ++i) {
    const TestCase& tc = problem.test_cases[i];
    std::filesystem::path in_path = setup.dir / ("__in" + std::to_string(i));
    {
      std::ofstream in(in_path, std::ios::binary);
      in << tc.input;
    }
    RunResult rr = run_command(setup.run_command, setup.dir, &in_path, config.timeout_ms);
    if (rr.timed_out) {
      if (fail_detail) *fail_detail = "timeout on test " + std::to_string(i + 1);
      return std::nullopt;
    }
    if (rr.exit_code != 0) {
      if (fail_detail)
        *fail_detail = "test " + std::to_string(i + 1) + ": nonzero exit " +
                       std::to_string(rr.exit_code) + " (" + excerpt(rr.stderr_text) + ")";
      return std::nullopt;
    }
    if (normalize_output(rr.stdout_text) != normalize_output(tc.expected_output)) {
      if (fail_detail)
        *fail_detail = "test " + std::to_string(i + 1) + ": expected \"" +
                       excerpt(normalize_output(tc.expected_output)) + "\" got \"" +
                       excerpt(normalize_output(rr.stdout_text)) + "\"";
      return std::nullopt;
    }
    total_ms += rr.wall_ms;
  }
  return total_ms;
}

}  // namespace

void ExecConfig::validate() const {
  if (compile_command_template.find("{src}") == std::string::npos ||
      compile_command_template.find("{bin}") == std::string::npos)
    throw ConfigError("compile_command_template must contain {src} and {bin}");
  if (run_command_template.find("{bin}") == std::string::npos &&
      run_command_template.find("{src}") == std::string::npos)
    throw ConfigError("run_command_template must contain {bin} or {src}");
  if (timed_runs < 1) throw ConfigError("timed_runs must be >= 1");
  if (warmup_runs < 0) throw ConfigError("warmup_runs must be >= 0");
  if (timeout_ms <= 0) throw ConfigError("timeout_ms must be positive");
}

SubprocessExecutor::SubprocessExecutor(ExecConfig config) : config_(std::move(config)) {
  config_.validate();
}

ExecFeedback SubprocessExecutor::evaluate(const ProblemSpec& problem, const std::string& code) {
  if (!problem.baseline_time_ms)
    throw ConfigError("baseline timing missing for problem " + problem.id +
                      "; call measure_baseline first");
  if (code.empty())
    return ExecFeedback::make(false, false, "empty candidate", std::nullopt, 0.0, "");

  CandidateSetup setup =
      setup_candidate(config_, problem, code, "c" + std::to_string(scratch_counter_++));
  if (!setup.compiled) {
    return ExecFeedback::make(false, false, excerpt(setup.compiler_output, 2000), std::nullopt,
                              0.0, "");
  }

  std::string fail_detail;
  std::optional<double> first_pass = run_test_pass(config_, problem, setup, &fail_detail);
  if (!first_pass) {
    // Still report a wall-clock reading for the compiled-but-wrong candidate.
    return ExecFeedback::make(true, false, fail_detail, 0.0, 0.0, "");
  }

  for (int w = 0; w < config_.warmup_runs; ++w) {
    run_test_pass(config_, problem, setup, nullptr);
  }
  std::vector<double> times;
  times.push_back(*first_pass);
  // The correctness pass counts as one timed run; take the rest now.
  std::string detail;
  for (int t = 1; t < config_.timed_runs; ++t) {
    std::optional<double> ms = run_test_pass(config_, problem, setup, &detail);
    if (!ms) {
      return ExecFeedback::make(true, false, "unstable: " + detail, 0.0, 0.0, "");
    }
    times.push_back(*ms);
  }
  double time_ms = median(times);
  double speedup = *problem.baseline_time_ms / std::max(1e-3, time_ms);
  std::ostringstream perf;
  perf << "run_ms=[";
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (i) perf << ", ";
    perf << times[i];
  }
  perf << "]";
  return ExecFeedback::make(true, true, "", time_ms, speedup, perf.str());
}

double measure_baseline(const ExecConfig& config, ProblemSpec& problem) {
  if (problem.baseline_time_ms) return *problem.baseline_time_ms;

  SubprocessExecutor executor(config);
  ProblemSpec probe = problem;
  probe.baseline_time_ms = 1.0;  // placeholder; only the timing below matters
  ExecFeedback fb = executor.evaluate(probe, problem.baseline_code);
  if (!fb.compiled)
    throw ConfigError("baseline for problem " + problem.id +
                      " does not compile: " + fb.correctness_detail);
  if (!fb.correct)
    throw ConfigError("baseline for problem " + problem.id +
                      " fails its own tests: " + fb.correctness_detail);
  problem.baseline_time_ms = std::max(1e-3, *fb.time_ms);
  return *problem.baseline_time_ms;
}

void SimulatedExecutor::add(const std::string& problem_id, Landscape landscape) {
  landscapes_.emplace(problem_id, std::move(landscape));
}

const Landscape& SimulatedExecutor::landscape_for(const std::string& problem_id) const {
  auto it = landscapes_.find(problem_id);
  if (it == landscapes_.end())
    throw ConfigError("no landscape registered for problem " + problem_id);
  return it->second;
}

ExecFeedback SimulatedExecutor::evaluate(const ProblemSpec& problem, const std::string& code) {
  return simulate_evaluate(landscape_for(problem.id), code);
}

}  // namespace maxcode
