#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "maxcode/executor.hpp"
#include "maxcode/problems.hpp"

namespace maxcode {

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

ProblemSpec load_problem_dir(const std::filesystem::path& dir, const RewardBins& bins,
                             int timeout_ms, std::string* source_extension) {
  ProblemSpec p;
  p.id = dir.filename().string();
  p.bins = bins;
  p.timeout_ms = timeout_ms;

  std::filesystem::path desc = dir / "problem.txt";
  if (std::filesystem::exists(desc)) p.description = read_file(desc);

  bool found_baseline = false;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string stem = entry.path().stem().string();
    if (stem == "baseline") {
      p.baseline_code = read_file(entry.path());
      if (source_extension) *source_extension = entry.path().extension().string();
      found_baseline = true;
      break;
    }
  }
  if (!found_baseline) throw ConfigError("problem " + p.id + ": no baseline.* file in " + dir.string());

  std::filesystem::path tests_dir = dir / "tests";
  if (!std::filesystem::is_directory(tests_dir))
    throw ConfigError("problem " + p.id + ": missing tests/ directory");
  std::set<std::string> stems;
  for (const auto& entry : std::filesystem::directory_iterator(tests_dir)) {
    if (entry.path().extension() == ".in") stems.insert(entry.path().stem().string());
  }
  for (const std::string& stem : stems) {
    std::filesystem::path in_path = tests_dir / (stem + ".in");
    std::filesystem::path out_path = tests_dir / (stem + ".out");
    if (!std::filesystem::exists(out_path))
      throw ConfigError("problem " + p.id + ": test " + stem + " has no .out file");
    p.test_cases.push_back({read_file(in_path), read_file(out_path)});
  }
  p.validate();
  return p;
}

std::vector<ProblemSpec> load_problems(const std::filesystem::path& root, const RewardBins& bins,
                                       int timeout_ms, std::string* source_extension) {
  if (!std::filesystem::is_directory(root))
    throw ConfigError("problems_dir does not exist: " + root.string());
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<ProblemSpec> problems;
  std::set<std::string> ids;
  for (const auto& dir : dirs) {
    ProblemSpec p = load_problem_dir(dir, bins, timeout_ms, source_extension);
    if (!ids.insert(p.id).second) throw ConfigError("duplicate problem id " + p.id);
    problems.push_back(std::move(p));
  }
  if (problems.empty()) throw ConfigError("no problems found under " + root.string());
  return problems;
}

}  // namespace maxcode
