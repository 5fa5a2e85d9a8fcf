#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "maxcode/config.hpp"
#include "maxcode/runner.hpp"
#include "maxcode/trajectory.hpp"
#include "maxcode/util.hpp"

using namespace maxcode;

namespace {

std::map<std::string, std::string> base_sim_config() {
  return {
      {"mode", "simulate"},    {"seed", "21"},          {"sim_problems", "3"},
      {"methods", "flat:Base, single:TrajBestPerf"},    {"max_evaluations", "12"},
      {"max_depth", "4"},      {"beam_width_k", "3"},   {"output_dir", "out"},
  };
}

RunConfig config_in(const std::filesystem::path& dir,
                    std::map<std::string, std::string> kv = base_sim_config()) {
  std::filesystem::create_directories(dir);
  RunConfig c = RunConfig::from_map(kv, dir);
  return c;
}

std::string log_without_wall_time(const std::filesystem::path& log_path) {
  std::ostringstream os;
  for (const TrajectoryRecord& r : read_log(log_path).records) {
    TrajectoryRecord copy = r;
    copy.wall_time.clear();
    os << copy.to_json_line() << "\n";
  }
  return os.str();
}

}  // namespace

TEST_CASE("flat config text parses into key/value pairs") {
  auto kv = parse_flat_config("# comment\nmode = simulate\n\nseed= 7\n");
  CHECK(kv.at("mode") == "simulate");
  CHECK(kv.at("seed") == "7");
  CHECK_THROWS_AS(parse_flat_config("not a key value line"), ConfigError);
  CHECK_THROWS_AS(parse_flat_config("a = 1\na = 2"), ConfigError);
}

TEST_CASE("config validation names the offending field") {
  auto dir = std::filesystem::temp_directory_path() / "maxcode_cfg";
  auto kv = base_sim_config();

  kv.erase("seed");
  CHECK_THROWS_WITH_AS(config_in(dir, kv), "config field 'seed': required in simulate mode",
                       ConfigError);

  kv = base_sim_config();
  kv["problems_dir"] = "problems";
  CHECK_THROWS_AS(config_in(dir, kv), ConfigError);  // simulate forbids subprocess keys

  kv = base_sim_config();
  kv["mode"] = "subprocess";
  kv.erase("sim_problems");
  CHECK_THROWS_AS(config_in(dir, kv), ConfigError);  // missing problems_dir

  kv = base_sim_config();
  kv["mode"] = "subprocess";
  CHECK_THROWS_AS(config_in(dir, kv), ConfigError);  // subprocess forbids sim keys

  kv = base_sim_config();
  kv["bogus_key"] = "1";
  CHECK_THROWS_WITH_AS(config_in(dir, kv), "unknown config field 'bogus_key'", ConfigError);

  kv = base_sim_config();
  kv["bins"] = "300,200,100";
  CHECK_THROWS_AS(config_in(dir, kv), ConfigError);
}

TEST_CASE("the config hash changes exactly when a field changes") {
  auto dir = std::filesystem::temp_directory_path() / "maxcode_cfg_hash";
  RunConfig a = config_in(dir);
  RunConfig b = config_in(dir);
  CHECK(a.config_hash() == b.config_hash());

  RunConfig c = config_in(dir);
  c.seed = 9999;
  CHECK(a.config_hash() != c.config_hash());

  RunConfig d = config_in(dir);
  d.budget.max_depth = 5;
  CHECK(a.config_hash() != d.config_hash());

  RunConfig e = config_in(dir);
  e.bins.s2 = 321;
  CHECK(a.config_hash() != e.config_hash());
}

TEST_CASE("cmd_run executes every problem x method cell and writes a manifest") {
  auto dir = std::filesystem::temp_directory_path() / "maxcode_run_cells";
  std::filesystem::remove_all(dir);
  auto kv = base_sim_config();
  kv["methods"] = "flat:Base, beam:TrajCritique";
  RunConfig config = config_in(dir, kv);
  config.output_dir = dir / "out";

  std::ostringstream out, err;
  REQUIRE(cmd_run(config, out, err) == 0);

  auto log = read_log(log_path_for(config.output_dir));
  std::set<std::pair<std::string, std::string>> cells;
  for (const TrajectoryRecord& r : log.records) cells.insert({r.problem_id, r.method});
  CHECK(cells.size() == 6);  // 3 problems x 2 methods

  std::ifstream manifest_in(manifest_path_for(log_path_for(config.output_dir)));
  REQUIRE(manifest_in.good());
  nlohmann::json manifest = nlohmann::json::parse(manifest_in);
  CHECK(manifest.at("complete").get<bool>());
  CHECK(manifest.at("totals").at("cells").get<int>() == 6);
  CHECK(manifest.at("totals").at("nodes").get<int>() ==
        static_cast<int>(log.records.size()));

  // created_order is strictly increasing across the whole run
  for (std::size_t i = 1; i < log.records.size(); ++i)
    CHECK(log.records[i].created_order > log.records[i - 1].created_order);
}

TEST_CASE("rerunning an identical simulate config reproduces the log byte for byte") {
  auto dir = std::filesystem::temp_directory_path() / "maxcode_run_determinism";
  std::filesystem::remove_all(dir);
  auto kv = base_sim_config();
  kv["methods"] = "beam:TrajCritiqueBestPerf, value:TrajCritique";
  kv["oversample_m"] = "6";
  RunConfig config = config_in(dir, kv);

  std::ostringstream out1, out2, err;
  config.output_dir = dir / "out1";
  REQUIRE(cmd_run(config, out1, err) == 0);
  config.output_dir = dir / "out2";
  REQUIRE(cmd_run(config, out2, err) == 0);

  std::string a = log_without_wall_time(log_path_for(dir / "out1"));
  std::string b = log_without_wall_time(log_path_for(dir / "out2"));
  CHECK(a == b);
  CHECK_FALSE(a.empty());
}

TEST_CASE("cmd_run rejects an invalid config with a nonzero exit") {
  RunConfig config;
  config.methods = {MethodSpec::parse("flat:Base")};
  config.mode = RunConfig::Mode::Subprocess;  // no problems_dir
  std::ostringstream out, err;
  CHECK(cmd_run(config, out, err) == 2);
  CHECK(err.str().find("problems_dir") != std::string::npos);
}

TEST_CASE("cmd_report writes tables and a summary from a log") {
  auto dir = std::filesystem::temp_directory_path() / "maxcode_report";
  std::filesystem::remove_all(dir);
  auto kv = base_sim_config();
  kv["methods"] = "flat:Base, beam:TrajCritique";
  RunConfig config = config_in(dir, kv);
  config.output_dir = dir / "out";
  std::ostringstream out, err;
  REQUIRE(cmd_run(config, out, err) == 0);

  auto report_dir = dir / "report";
  REQUIRE(cmd_report(log_path_for(config.output_dir), report_dir, out, err) == 0);
  CHECK(std::filesystem::exists(report_dir / "per_problem.csv"));
  CHECK(std::filesystem::exists(report_dir / "median.csv"));
  CHECK(std::filesystem::exists(report_dir / "rank.csv"));
  CHECK(std::filesystem::exists(report_dir / "summary.txt"));
  CHECK(std::filesystem::exists(report_dir / "scaling_flat_Base.csv"));

  std::ifstream rank_in(report_dir / "rank.csv");
  std::string header;
  std::getline(rank_in, header);
  CHECK(header == "method,average_rank");
}

TEST_CASE("cmd_report fails when the log is mostly corrupt") {
  auto dir = std::filesystem::temp_directory_path() / "maxcode_report_corrupt";
  std::filesystem::create_directories(dir);
  auto log = dir / "trajectory.jsonl";
  {
    std::ofstream out_file(log, std::ios::trunc);
    out_file << "garbage line one\ngarbage line two\n";
  }
  std::ostringstream out, err;
  CHECK(cmd_report(log, dir / "report", out, err) == 1);
  CHECK(err.str().find("corrupt") != std::string::npos);
}

TEST_CASE("cmd_extract_values produces a problem-disjoint split from a run log") {
  auto dir = std::filesystem::temp_directory_path() / "maxcode_extract";
  std::filesystem::remove_all(dir);
  auto kv = base_sim_config();
  kv["sim_problems"] = "4";
  kv["methods"] = "single:TrajCritique";
  RunConfig config = config_in(dir, kv);
  config.output_dir = dir / "out";
  std::ostringstream out, err;
  REQUIRE(cmd_run(config, out, err) == 0);

  auto data_dir = dir / "data";
  REQUIRE(cmd_extract_values(log_path_for(config.output_dir), config.bins, 1.0,
                             /*horizon=*/4, /*max_prefix_len=*/2, 0.75, 3, data_dir, out,
                             err) == 0);
  std::set<std::string> train_ids, val_ids;
  auto collect = [](const std::filesystem::path& p, std::set<std::string>& ids) {
    std::ifstream in(p);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      ids.insert(nlohmann::json::parse(line).at("problem_id").get<std::string>());
      ++lines;
    }
    return lines;
  };
  int train_lines = collect(data_dir / "value_train.jsonl", train_ids);
  int val_lines = collect(data_dir / "value_val.jsonl", val_ids);
  CHECK(train_lines + val_lines == 8);  // 4 chains, 2 prefixes each
  CHECK(train_ids.size() == 3);
  CHECK(val_ids.size() == 1);
  for (const std::string& id : train_ids) CHECK_FALSE(val_ids.count(id));
}

TEST_CASE("cmd_replay re-renders the exact prompt recorded at generation time") {
  auto dir = std::filesystem::temp_directory_path() / "maxcode_replay";
  std::filesystem::remove_all(dir);
  auto kv = base_sim_config();
  kv["methods"] = "beam:TrajCritiqueBestPerf";
  RunConfig config = config_in(dir, kv);
  config.output_dir = dir / "out";
  std::ostringstream out, err;
  REQUIRE(cmd_run(config, out, err) == 0);

  auto log = read_log(log_path_for(config.output_dir));
  int replayed = 0;
  for (const TrajectoryRecord& r : log.records) {
    if (!r.parent_id) continue;
    std::ostringstream replay_out, replay_err;
    INFO("node ", r.node_id);
    CHECK(cmd_replay(log_path_for(config.output_dir), r.node_id, replay_out, replay_err) == 0);
    CHECK(replay_out.str().find("re-rendered hash:   " + r.prompt_hash) != std::string::npos);
    ++replayed;
    if (replayed >= 6) break;
  }
  CHECK(replayed == 6);

  std::ostringstream replay_out, replay_err;
  CHECK(cmd_replay(log_path_for(config.output_dir), "n999999", replay_out, replay_err) == 1);
}
