#include "maxcode/trajectory.hpp"

#include <algorithm>
#include <stdexcept>

#include "json.hpp"
#include "maxcode/prompts.hpp"
#include "maxcode/util.hpp"

namespace maxcode {

namespace {

using nlohmann::json;

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& value) {
  if (value)
    j[key] = *value;
  else
    j[key] = nullptr;
}

template <typename T>
std::optional<T> get_optional(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<T>();
}

}  // namespace

std::string TrajectoryRecord::to_json_line() const {
  json j;
  j["run_id"] = run_id;
  j["problem_id"] = problem_id;
  j["node_id"] = node_id;
  put_optional(j, "parent_id", parent_id);
  j["depth"] = depth;
  j["method"] = method;
  j["code"] = code;
  put_optional(j, "compiled", compiled);
  put_optional(j, "correct", correct);
  j["correctness_detail"] = correctness_detail;
  put_optional(j, "time_ms", time_ms);
  put_optional(j, "speedup", speedup);
  j["perf_detail"] = perf_detail;
  put_optional(j, "critique", critique);
  j["u_raw"] = u_raw;
  j["u_cat"] = u_cat;
  j["created_order"] = created_order;
  j["wall_time"] = wall_time;
  j["prompt_hash"] = prompt_hash;
  return j.dump();
}

TrajectoryRecord TrajectoryRecord::from_json_line(const std::string& line) {
  json j = json::parse(line);
  TrajectoryRecord r;
  r.run_id = j.at("run_id").get<std::string>();
  r.problem_id = j.at("problem_id").get<std::string>();
  r.node_id = j.at("node_id").get<std::string>();
  r.parent_id = get_optional<std::string>(j, "parent_id");
  r.depth = j.at("depth").get<int>();
  r.method = j.at("method").get<std::string>();
  r.code = j.at("code").get<std::string>();
  r.compiled = get_optional<bool>(j, "compiled");
  r.correct = get_optional<bool>(j, "correct");
  r.correctness_detail = j.at("correctness_detail").get<std::string>();
  r.time_ms = get_optional<double>(j, "time_ms");
  r.speedup = get_optional<double>(j, "speedup");
  r.perf_detail = j.at("perf_detail").get<std::string>();
  r.critique = get_optional<std::string>(j, "critique");
  r.u_raw = j.at("u_raw").get<double>();
  r.u_cat = j.at("u_cat").get<int>();
  r.created_order = j.at("created_order").get<std::int64_t>();
  r.wall_time = j.at("wall_time").get<std::string>();
  r.prompt_hash = j.at("prompt_hash").get<std::string>();
  return r;
}

TrajectoryRecord record_from_state(const SearchTree& tree, const SearchState& state,
                                   std::uint64_t prompt_hash_value, std::string wall_time) {
  TrajectoryRecord r;
  r.run_id = tree.run_id();
  r.problem_id = state.problem_id;
  r.node_id = state.node_id;
  r.parent_id = state.parent_id;
  r.depth = state.depth;
  r.method = tree.method();
  r.code = state.code;
  if (state.feedback) {
    r.compiled = state.feedback->compiled;
    r.correct = state.feedback->correct;
    r.correctness_detail = state.feedback->correctness_detail;
    r.time_ms = state.feedback->time_ms;
    r.speedup = state.feedback->speedup;
    r.perf_detail = state.feedback->perf_detail;
  }
  if (state.critique) r.critique = state.critique->text;
  r.u_raw = state.u_raw;
  r.u_cat = state.u_cat;
  r.created_order = state.created_order;
  r.wall_time = std::move(wall_time);
  r.prompt_hash = state.is_root() ? "" : to_hex(prompt_hash_value);
  return r;
}

SearchState state_from_record(const TrajectoryRecord& record, const std::string& method) {
  SearchState s;
  s.node_id = record.node_id;
  s.parent_id = record.parent_id;
  s.problem_id = record.problem_id;
  s.depth = record.depth;
  s.code = record.code;
  if (record.compiled.has_value()) {
    ExecFeedback fb = ExecFeedback::make(*record.compiled, record.correct.value_or(false),
                                         record.correctness_detail, record.time_ms,
                                         record.speedup.value_or(0.0), record.perf_detail);
    s.feedback = fb;
  }
  if (record.critique) {
    Critique c;
    c.text = *record.critique;
    // The critic variant is recoverable from the "algo:Variant[@g]" method
    // string when the variant uses critiques.
    std::size_t colon = method.find(':');
    std::size_t at = method.find('@');
    if (colon != std::string::npos) {
      std::string vname = method.substr(colon + 1, (at == std::string::npos ? method.size() : at) -
                                                       colon - 1);
      try {
        c.variant = critic_variant_for(variant_from_name(vname));
      } catch (const std::exception&) {
      }
    }
    s.critique = c;
  }
  s.u_raw = record.u_raw;
  s.u_cat = record.u_cat;
  s.created_order = record.created_order;
  return s;
}

TrajectoryLogWriter::TrajectoryLogWriter(const std::filesystem::path& path, bool append) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, append ? std::ios::app | std::ios::binary : std::ios::trunc | std::ios::binary);
  if (!out_) throw std::runtime_error("cannot open log " + path.string());
}

void TrajectoryLogWriter::write(const TrajectoryRecord& record) {
  out_ << record.to_json_line() << "\n";
  out_.flush();
}

LogReadResult read_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read log " + path.string());
  LogReadResult result;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++result.total_lines;
    try {
      result.records.push_back(TrajectoryRecord::from_json_line(line));
    } catch (const std::exception&) {
      ++result.corrupt_lines;
    }
  }
  return result;
}

std::map<std::pair<std::string, std::string>, SearchTree> rebuild_trees(
    const std::vector<TrajectoryRecord>& records, double gamma) {
  std::map<std::pair<std::string, std::string>, std::vector<const TrajectoryRecord*>> groups;
  for (const TrajectoryRecord& r : records) {
    groups[{r.problem_id, r.method}].push_back(&r);
  }
  std::map<std::pair<std::string, std::string>, SearchTree> trees;
  for (auto& [key, group] : groups) {
    std::sort(group.begin(), group.end(), [](const TrajectoryRecord* a, const TrajectoryRecord* b) {
      return a->created_order < b->created_order;
    });
    SearchTree tree(group.front()->run_id, key.second, 0, gamma);
    for (const TrajectoryRecord* r : group) {
      tree.add_raw(state_from_record(*r, key.second));
    }
    trees.emplace(key, std::move(tree));
  }
  return trees;
}

}  // namespace maxcode
