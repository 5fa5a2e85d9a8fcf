#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maxcode/core.hpp"

namespace maxcode {

// One log line: the full state tuple of a node plus bookkeeping. wall_time is
// informational only; replay and determinism checks ignore it. prompt_hash
// identifies the prompt that produced the node (empty for the root) so replay
// can verify byte-identical re-rendering without storing prompts verbatim.
struct TrajectoryRecord {
  std::string run_id;
  std::string problem_id;
  std::string node_id;
  std::optional<std::string> parent_id;
  int depth = 0;
  std::string method;
  std::string code;
  std::optional<bool> compiled;  // unset on the root, which carries no feedback
  std::optional<bool> correct;
  std::string correctness_detail;
  std::optional<double> time_ms;
  std::optional<double> speedup;
  std::string perf_detail;
  std::optional<std::string> critique;
  double u_raw = 1.0;
  int u_cat = 0;
  std::int64_t created_order = 0;
  std::string wall_time;
  std::string prompt_hash;

  std::string to_json_line() const;
  static TrajectoryRecord from_json_line(const std::string& line);

  bool operator==(const TrajectoryRecord&) const = default;
};

TrajectoryRecord record_from_state(const SearchTree& tree, const SearchState& state,
                                   std::uint64_t prompt_hash, std::string wall_time);

// Rebuilds the state (root or evaluated node) a record describes.
SearchState state_from_record(const TrajectoryRecord& record, const std::string& method);

class TrajectoryLogWriter {
 public:
  explicit TrajectoryLogWriter(const std::filesystem::path& path, bool append = true);
  void write(const TrajectoryRecord& record);

 private:
  std::ofstream out_;
};

struct LogReadResult {
  std::vector<TrajectoryRecord> records;
  int corrupt_lines = 0;
  int total_lines = 0;
};

LogReadResult read_log(const std::filesystem::path& path);

// Groups records by (problem, method) and rebuilds the trees in creation
// order. gamma applies to every rebuilt tree (u fields come from the records
// themselves).
std::map<std::pair<std::string, std::string>, SearchTree> rebuild_trees(
    const std::vector<TrajectoryRecord>& records, double gamma = 1.0);

}  // namespace maxcode
