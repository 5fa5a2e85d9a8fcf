#pragma once

#include <filesystem>
#include <vector>

#include "maxcode/core.hpp"

namespace maxcode {

// Directory layout: one directory per problem with problem.txt, baseline.<ext>
// and tests/N.in / N.out pairs.
ProblemSpec load_problem_dir(const std::filesystem::path& dir, const RewardBins& bins,
                             int timeout_ms, std::string* source_extension = nullptr);

std::vector<ProblemSpec> load_problems(const std::filesystem::path& root, const RewardBins& bins,
                                       int timeout_ms, std::string* source_extension = nullptr);

}  // namespace maxcode
