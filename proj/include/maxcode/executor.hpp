#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>

#include "maxcode/core.hpp"
#include "maxcode/landscape.hpp"

namespace maxcode {

// Failure of the harness itself (scratch dir, fork, ...), as opposed to a
// candidate that fails to compile or run.
struct InfrastructureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExecConfig {
  std::string compile_command_template;  // needs {src} and {bin}
  std::string run_command_template;      // needs {bin}
  int warmup_runs = 1;
  int timed_runs = 5;
  int timeout_ms = 10000;
  std::filesystem::path workdir_root = "work";
  std::string source_extension = ".cpp";

  void validate() const;  // throws ConfigError
};

class Executor {
 public:
  virtual ~Executor() = default;
  virtual ExecFeedback evaluate(const ProblemSpec& problem, const std::string& code) = 0;
};

// Compiles a candidate in a scratch directory, checks it against the
// problem's test cases (trailing-whitespace-normalized comparison), then
// times it; speedup = baseline_time_ms / median candidate time.
class SubprocessExecutor : public Executor {
 public:
  explicit SubprocessExecutor(ExecConfig config);
  ExecFeedback evaluate(const ProblemSpec& problem, const std::string& code) override;

  const ExecConfig& config() const { return config_; }

 private:
  ExecConfig config_;
  long long scratch_counter_ = 0;
};

// Measures the baseline once per session and caches the result into the
// ProblemSpec. The baseline must compile and pass its own tests.
double measure_baseline(const ExecConfig& config, ProblemSpec& problem);

class SimulatedExecutor : public Executor {
 public:
  void add(const std::string& problem_id, Landscape landscape);
  const Landscape& landscape_for(const std::string& problem_id) const;
  ExecFeedback evaluate(const ProblemSpec& problem, const std::string& code) override;

 private:
  std::map<std::string, Landscape> landscapes_;
};

}  // namespace maxcode
