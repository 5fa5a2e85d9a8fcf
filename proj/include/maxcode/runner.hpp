#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "maxcode/config.hpp"
#include "maxcode/landscape.hpp"

namespace maxcode {

// File layout inside a run's output directory.
std::filesystem::path log_path_for(const std::filesystem::path& output_dir);
std::filesystem::path manifest_path_for(const std::filesystem::path& log_path);

struct ProblemSetup {
  std::vector<ProblemSpec> problems;
  std::map<std::string, Landscape> landscapes;  // simulate mode only
  std::string source_extension;                 // subprocess mode only
};

// Simulate mode derives one landscape per problem from seed + index;
// subprocess mode loads the problems directory (without timing baselines).
ProblemSetup build_problems(const RunConfig& config);

int cmd_run(RunConfig config, std::ostream& out = std::cout, std::ostream& err = std::cerr);
int cmd_report(const std::filesystem::path& log_path, const std::filesystem::path& out_dir,
               std::ostream& out = std::cout, std::ostream& err = std::cerr);
int cmd_extract_values(const std::filesystem::path& log_path, const RewardBins& bins,
                       double gamma, int horizon, int max_prefix_len, double split_fraction,
                       std::uint64_t seed, const std::filesystem::path& out_dir,
                       std::ostream& out = std::cout, std::ostream& err = std::cerr);
int cmd_replay(const std::filesystem::path& log_path, const std::string& node_id,
               std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace maxcode
