#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "maxcode/core.hpp"
#include "maxcode/executor.hpp"
#include "maxcode/remote.hpp"
#include "maxcode/search.hpp"

namespace maxcode {

// Flat key/value run configuration ("key = value" lines, '#' comments).
struct RunConfig {
  enum class Mode { Subprocess, Simulate };

  Mode mode = Mode::Simulate;
  std::filesystem::path output_dir = "out";
  std::filesystem::path templates_dir;
  std::vector<MethodSpec> methods;
  SearchBudget budget;
  RewardBins bins;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double gamma = 1.0;
  double temperature = 0.6;
  int max_tokens = 4096;
  int limit_problems = 0;  // CLI override; 0 means all

  // subprocess mode
  std::filesystem::path problems_dir;
  ExecConfig exec;
  RemoteConfig remote;
  std::string critic_model;
  std::string value_model;

  // simulate mode
  int sim_problems = 3;
  int sim_dim = 2;
  int sim_range = 12;
  double sim_optimum = 8.0;
  double sim_threshold = 0.25;

  static RunConfig from_file(const std::filesystem::path& path);
  static RunConfig from_map(const std::map<std::string, std::string>& kv,
                            const std::filesystem::path& base_dir);
  void validate() const;  // throws ConfigError with the offending field

  // Effective configuration, defaults materialized; the config hash is over
  // these sorted key=value pairs, so it changes exactly when a field does.
  std::map<std::string, std::string> canonical_map() const;
  std::uint64_t config_hash() const;
};

std::map<std::string, std::string> parse_flat_config(const std::string& text);

}  // namespace maxcode
