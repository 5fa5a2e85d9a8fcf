#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "maxcode/config.hpp"
#include "maxcode/prompts.hpp"
#include "maxcode/runner.hpp"
#include "maxcode/util.hpp"

int main(int argc, char** argv) {
  CLI::App app{"maxcode: max-reward search orchestration for code optimization"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "execute every problem x method cell of a config");
  std::string run_config_path;
  int run_seed = -1;
  int limit_problems = 0;
  run->add_option("--config", run_config_path, "run config file")->required();
  run->add_option("--seed", run_seed, "override the config seed");
  run->add_option("--limit-problems", limit_problems, "only run the first N problems");

  // report
  auto* report = app.add_subcommand("report", "compute metrics and tables from a trajectory log");
  std::string report_log, report_out;
  report->add_option("--log", report_log, "trajectory log file")->required();
  report->add_option("--out", report_out, "output directory for CSVs and summary")->required();

  // extract-values
  auto* extract = app.add_subcommand("extract-values", "build value-model training data from a log");
  std::string extract_log, extract_bins = "140,320,475", extract_out;
  int horizon = 8, max_prefix = 2;
  double split = 0.8, extract_gamma = 1.0;
  std::uint64_t extract_seed = 0;
  extract->add_option("--log", extract_log, "trajectory log file")->required();
  extract->add_option("--bins", extract_bins, "reward bin thresholds s1,s2,s3 (percent)");
  extract->add_option("--horizon", horizon, "total refinement rounds for remaining-round counts");
  extract->add_option("--max-prefix", max_prefix, "maximum prefix length to extract");
  extract->add_option("--split", split, "fraction of problems in the train split");
  extract->add_option("--seed", extract_seed, "shuffle seed for the problem split");
  extract->add_option("--gamma", extract_gamma, "discount factor");
  extract->add_option("--out", extract_out, "output directory (default: log directory)");

  // replay
  auto* replay = app.add_subcommand("replay", "re-render the prompt that produced a node");
  std::string replay_log, replay_node;
  replay->add_option("--log", replay_log, "trajectory log file")->required();
  replay->add_option("--node", replay_node, "node id to replay")->required();

  // init-templates
  auto* init_templates =
      app.add_subcommand("init-templates", "write the builtin prompt templates as editable files");
  std::string templates_out = "templates";
  init_templates->add_option("--out", templates_out, "target directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      maxcode::RunConfig config = maxcode::RunConfig::from_file(run_config_path);
      if (run_seed >= 0) {
        config.seed = static_cast<std::uint64_t>(run_seed);
        config.seed_set = true;
      }
      if (limit_problems > 0) config.limit_problems = limit_problems;
      return maxcode::cmd_run(std::move(config));
    }
    if (report->parsed()) {
      return maxcode::cmd_report(report_log, report_out);
    }
    if (extract->parsed()) {
      auto parts = maxcode::split(extract_bins, ',');
      if (parts.size() != 3) {
        std::cerr << "--bins expects s1,s2,s3\n";
        return 2;
      }
      maxcode::RewardBins bins{std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2])};
      std::filesystem::path out_dir =
          extract_out.empty() ? std::filesystem::path(extract_log).parent_path()
                              : std::filesystem::path(extract_out);
      return maxcode::cmd_extract_values(extract_log, bins, extract_gamma, horizon, max_prefix,
                                         split, extract_seed, out_dir);
    }
    if (replay->parsed()) {
      return maxcode::cmd_replay(replay_log, replay_node);
    }
    if (init_templates->parsed()) {
      maxcode::PromptTemplates::write_builtin(templates_out);
      std::cout << "templates written to " << templates_out << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
