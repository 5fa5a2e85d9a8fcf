#include "maxcode/runner.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "maxcode/agents.hpp"
#include "maxcode/metrics.hpp"
#include "maxcode/problems.hpp"
#include "maxcode/remote.hpp"
#include "maxcode/search.hpp"
#include "maxcode/trajectory.hpp"
#include "maxcode/util.hpp"
#include "maxcode/valuedata.hpp"

namespace maxcode {

namespace {

std::string iso_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()) % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<int>(ms.count()));
  return buf;
}

std::string sanitize_for_filename(std::string s) {
  for (char& c : s) {
    if (c == ':' || c == '@' || c == '/' || c == ' ') c = '_';
  }
  return s;
}

std::string sim_problem_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "sim-%03d", index);
  return buf;
}

struct Manifest {
  std::string run_id;
  std::string config_hash;
  std::map<std::string, std::string> config;
  std::map<std::string, double> baseline_times;
  long long cells = 0;
  long long nodes = 0;
  long long evaluations = 0;
  long long prediction_calls = 0;
  long long predictor_failures = 0;
  long long degraded_levels = 0;
  long long truncated_cells = 0;
  bool complete = false;

  void write(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["run_id"] = run_id;
    j["config_hash"] = config_hash;
    j["config"] = config;
    j["baseline_times"] = baseline_times;
    j["totals"] = {{"cells", cells},
                   {"nodes", nodes},
                   {"evaluations", evaluations},
                   {"prediction_calls", prediction_calls},
                   {"predictor_failures", predictor_failures},
                   {"degraded_levels", degraded_levels},
                   {"truncated_cells", truncated_cells}};
    j["complete"] = complete;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write manifest " + path.string());
    out << j.dump(2) << "\n";
  }

  static Manifest read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read manifest " + path.string());
    nlohmann::json j = nlohmann::json::parse(in);
    Manifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.config = j.at("config").get<std::map<std::string, std::string>>();
    if (j.contains("baseline_times"))
      m.baseline_times = j.at("baseline_times").get<std::map<std::string, double>>();
    m.complete = j.at("complete").get<bool>();
    return m;
  }
};

}  // namespace

std::filesystem::path log_path_for(const std::filesystem::path& output_dir) {
  return output_dir / "trajectory.jsonl";
}

std::filesystem::path manifest_path_for(const std::filesystem::path& log_path) {
  return log_path.parent_path() / "manifest.json";
}

ProblemSetup build_problems(const RunConfig& config) {
  ProblemSetup setup;
  if (config.mode == RunConfig::Mode::Simulate) {
    for (int i = 0; i < config.sim_problems; ++i) {
      Landscape landscape =
          Landscape::make(static_cast<std::int64_t>(config.seed) + i, config.sim_dim,
                          config.sim_range, config.sim_optimum, config.sim_threshold);
      ProblemSpec p;
      p.id = sim_problem_id(i);
      std::ostringstream desc;
      desc << "Synthetic optimization landscape (dim=" << config.sim_dim
           << ", range=" << config.sim_range
           << "). Emit one integer assignment per parameter, e.g. p0=3; p1=7.";
      p.description = desc.str();
      p.baseline_code = format_params(landscape.start_params());
      p.test_cases = {{"", ""}};
      p.baseline_time_ms = 100.0;
      p.bins = config.bins;
      p.timeout_ms = 1000;
      p.validate();
      setup.landscapes.emplace(p.id, std::move(landscape));
      setup.problems.push_back(std::move(p));
    }
  } else {
    setup.problems = load_problems(config.problems_dir, config.bins, config.exec.timeout_ms,
                                   &setup.source_extension);
  }
  if (config.limit_problems > 0 &&
      static_cast<int>(setup.problems.size()) > config.limit_problems) {
    setup.problems.resize(config.limit_problems);
  }
  return setup;
}

int cmd_run(RunConfig config, std::ostream& out, std::ostream& err) {
  try {
    config.validate();
    std::filesystem::create_directories(config.output_dir);
    std::filesystem::path log_path = log_path_for(config.output_dir);
    std::filesystem::path manifest_path = manifest_path_for(log_path);

    Manifest manifest;
    manifest.run_id = to_hex(config.config_hash()).substr(0, 12);
    manifest.config_hash = to_hex(config.config_hash());
    manifest.config = config.canonical_map();
    manifest.complete = false;

    ProblemSetup setup = build_problems(config);

    PromptTemplates templates = PromptTemplates::load_dir(config.templates_dir);

    std::unique_ptr<Executor> executor;
    SimulatedExecutor* sim_executor = nullptr;
    if (config.mode == RunConfig::Mode::Simulate) {
      auto sim = std::make_unique<SimulatedExecutor>();
      for (const auto& [id, landscape] : setup.landscapes) sim->add(id, landscape);
      sim_executor = sim.get();
      executor = std::move(sim);
    } else {
      ExecConfig exec = config.exec;
      if (!setup.source_extension.empty()) exec.source_extension = setup.source_extension;
      executor = std::make_unique<SubprocessExecutor>(exec);
      for (ProblemSpec& p : setup.problems) {
        double ms = measure_baseline(exec, p);
        manifest.baseline_times[p.id] = ms;
        out << "baseline " << p.id << ": " << ms << " ms\n";
      }
    }
    manifest.write(manifest_path);

    // Remote agents are shared across cells; scripted ones depend on the
    // problem's landscape and are created per cell.
    std::unique_ptr<PolicyAgent> remote_agent;
    std::unique_ptr<CriticAgent> remote_critic;
    std::unique_ptr<ValuePredictor> remote_predictor;
    ScriptedCriticAgent scripted_critic;
    if (config.mode == RunConfig::Mode::Subprocess) {
      remote_agent = std::make_unique<RemotePolicyAgent>(config.remote);
      RemoteConfig critic_cfg = config.remote;
      if (!config.critic_model.empty()) critic_cfg.model = config.critic_model;
      remote_critic = std::make_unique<RemoteCriticAgent>(critic_cfg);
      if (!config.value_model.empty()) {
        RemoteConfig value_cfg = config.remote;
        value_cfg.model = config.value_model;
        remote_predictor = std::make_unique<RemoteValuePredictor>(value_cfg);
      }
    }

    TrajectoryLogWriter writer(log_path, /*append=*/false);
    std::int64_t created_counter = 0;
    NodeSink sink = [&](const SearchTree& tree, const SearchState& state, std::uint64_t hash) {
      writer.write(record_from_state(tree, state, hash, iso_now()));
      ++manifest.nodes;
    };

    for (const ProblemSpec& problem : setup.problems) {
      std::unique_ptr<ScriptedPolicyAgent> scripted_agent;
      std::unique_ptr<OracleValuePredictor> oracle_predictor;
      PolicyAgent* agent = remote_agent.get();
      CriticAgent* critic = remote_critic.get();
      ValuePredictor* predictor = remote_predictor.get();
      if (config.mode == RunConfig::Mode::Simulate) {
        const Landscape& landscape = sim_executor->landscape_for(problem.id);
        scripted_agent = std::make_unique<ScriptedPolicyAgent>(landscape);
        oracle_predictor =
            std::make_unique<OracleValuePredictor>(landscape, config.bins, config.gamma);
        agent = scripted_agent.get();
        critic = &scripted_critic;
        predictor = oracle_predictor.get();
      }

      for (const MethodSpec& method : config.methods) {
        SearchEngine engine(templates, *agent, critic, *executor, predictor, config.seed, sink);
        engine.set_request_params(config.temperature, config.max_tokens);
        engine.set_created_counter(&created_counter);
        engine.set_run_id(manifest.run_id);
        SearchOutcome outcome = engine.run(problem, method, config.budget);
        ++manifest.cells;
        manifest.evaluations += outcome.budget.evaluations_used;
        manifest.prediction_calls += outcome.prediction_calls;
        manifest.predictor_failures += outcome.predictor_failures;
        manifest.degraded_levels += outcome.degraded_levels;
        if (outcome.truncated) ++manifest.truncated_cells;
        out << problem.id << " x " << method.name() << ": " << outcome.tree.nodes().size()
            << " nodes, " << outcome.budget.evaluations_used << " evaluations"
            << (outcome.truncated ? " (truncated)" : "") << "\n";
      }
    }

    manifest.complete = true;
    manifest.write(manifest_path);
    out << "log: " << log_path.string() << "\n";
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

namespace {

// >1% corrupt records is a hard failure for every log-consuming command.
LogReadResult read_log_checked(const std::filesystem::path& log_path, std::ostream& err) {
  LogReadResult result = read_log(log_path);
  if (result.total_lines > 0 &&
      static_cast<double>(result.corrupt_lines) > 0.01 * result.total_lines) {
    throw std::runtime_error("log too corrupt: " + std::to_string(result.corrupt_lines) + " of " +
                             std::to_string(result.total_lines) + " lines unparseable");
  }
  if (result.corrupt_lines > 0)
    err << "warning: skipped " << result.corrupt_lines << " corrupt log lines\n";
  return result;
}

void write_csv(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string fmt4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

int cmd_report(const std::filesystem::path& log_path, const std::filesystem::path& out_dir,
               std::ostream& out, std::ostream& err) {
  try {
    LogReadResult log = read_log_checked(log_path, err);
    if (log.records.empty()) throw std::runtime_error("log is empty: " + log_path.string());
    auto trees = rebuild_trees(log.records);
    std::filesystem::create_directories(out_dir);

    // method -> problem -> metrics
    std::map<std::string, std::map<std::string, ProblemMetrics>> by_method;
    for (const auto& [key, tree] : trees) {
      by_method[key.second][key.first] = compute_problem_metrics(tree);
    }

    std::string per_problem_csv =
        "method,problem_id,max_speedup,correct_rate,fast1_rate,selected_path_correct_rate\n";
    std::map<std::string, std::map<std::string, double>> speedup_table;
    std::map<std::string, MethodResults> results;
    for (const auto& [method, problems] : by_method) {
      MethodResults& r = results[method];
      r.method = method;
      for (const auto& [pid, m] : problems) {
        per_problem_csv += method + "," + pid + "," + fmt4(m.max_speedup) + "," +
                           fmt4(m.correct_rate) + "," + fmt4(m.fast1_rate) + "," +
                           fmt4(m.selected_path_correct_rate) + "\n";
        speedup_table[method][pid] = m.max_speedup;
        r.per_problem_max_speedup[pid] = m.max_speedup;
        r.per_problem_correct_rate[pid] = m.correct_rate;
        r.per_problem_fast1[pid] = m.fast1_rate;
      }
    }
    write_csv(out_dir / "per_problem.csv", per_problem_csv);

    std::string median_csv = "method,median_max_speedup\n";
    for (const auto& [method, r] : results) {
      median_csv += method + "," + fmt4(median_of_max(r)) + "\n";
    }
    write_csv(out_dir / "median.csv", median_csv);

    std::string rank_csv = "method,average_rank\n";
    bool have_ranks = false;
    std::map<std::string, double> ranks;
    try {
      ranks = average_rank(speedup_table);
      have_ranks = true;
      for (const auto& [method, rank] : ranks) rank_csv += method + "," + fmt4(rank) + "\n";
      write_csv(out_dir / "rank.csv", rank_csv);
    } catch (const std::exception& e) {
      err << "warning: skipping rank.csv: " << e.what() << "\n";
    }

    for (const auto& [method, problems] : by_method) {
      std::vector<const SearchTree*> method_trees;
      for (const auto& [key, tree] : trees) {
        if (key.second == method) method_trees.push_back(&tree);
      }
      auto curve = scaling_curve(method_trees);
      std::string curve_csv = "depth,median_max_speedup\n";
      for (const auto& [depth, value] : curve)
        curve_csv += std::to_string(depth) + "," + fmt4(value) + "\n";
      write_csv(out_dir / ("scaling_" + sanitize_for_filename(method) + ".csv"), curve_csv);
    }

    std::ostringstream summary;
    summary << "method                                    rank    median_max_speedup\n";
    for (const auto& [method, r] : results) {
      char line[160];
      std::snprintf(line, sizeof(line), "%-40s  %-6s  %.2fx\n", method.c_str(),
                    have_ranks ? fmt4(ranks.at(method)).c_str() : "-",
                    median_of_max(r));
      summary << line;
    }
    write_csv(out_dir / "summary.txt", summary.str());
    out << summary.str();
    return 0;
  } catch (const std::exception& e) {
    err << "report error: " << e.what() << "\n";
    return 1;
  }
}

namespace {

// Problems for log-consuming commands: from the manifest's config when
// available, else minimal specs reconstructed from each tree's root.
std::map<std::string, ProblemSpec> problems_for_log(
    const std::filesystem::path& log_path,
    const std::map<std::pair<std::string, std::string>, SearchTree>& trees,
    PromptTemplates* templates_out) {
  std::map<std::string, ProblemSpec> problems;
  std::filesystem::path manifest_path = manifest_path_for(log_path);
  if (std::filesystem::exists(manifest_path)) {
    Manifest manifest = Manifest::read(manifest_path);
    auto cfg = manifest.config;
    RunConfig config = RunConfig::from_map(cfg, manifest_path.parent_path());
    if (templates_out) *templates_out = PromptTemplates::load_dir(config.templates_dir);
    ProblemSetup setup = build_problems(config);
    for (ProblemSpec& p : setup.problems) {
      auto it = manifest.baseline_times.find(p.id);
      if (it != manifest.baseline_times.end()) p.baseline_time_ms = it->second;
      problems.emplace(p.id, std::move(p));
    }
    return problems;
  }
  if (templates_out) *templates_out = PromptTemplates::builtin();
  for (const auto& [key, tree] : trees) {
    if (problems.count(key.first)) continue;
    ProblemSpec p;
    p.id = key.first;
    p.description = key.first;
    p.baseline_code = tree.root().code;
    p.test_cases = {{"", ""}};
    problems.emplace(p.id, std::move(p));
  }
  return problems;
}

}  // namespace

int cmd_extract_values(const std::filesystem::path& log_path, const RewardBins& bins,
                       double gamma, int horizon, int max_prefix_len, double split_fraction,
                       std::uint64_t seed, const std::filesystem::path& out_dir,
                       std::ostream& out, std::ostream& err) {
  try {
    LogReadResult log = read_log_checked(log_path, err);
    auto trees = rebuild_trees(log.records, gamma);
    if (trees.empty()) throw std::runtime_error("log contains no trees");

    PromptTemplates templates = PromptTemplates::builtin();
    std::map<std::string, ProblemSpec> problems = problems_for_log(log_path, trees, &templates);

    std::vector<ValueExample> examples;
    int skipped = 0;
    for (const auto& [key, tree] : trees) {
      auto it = problems.find(key.first);
      if (it == problems.end()) continue;
      ExtractResult result =
          extract_examples(tree, it->second, templates, bins, gamma, horizon, max_prefix_len);
      skipped += result.skipped_missing_feedback;
      for (ValueExample& ex : result.examples) examples.push_back(std::move(ex));
    }
    if (skipped > 0) err << "warning: skipped " << skipped << " prefixes missing feedback\n";

    auto [train_path, val_path] =
        export_training_set(examples, split_fraction, seed, out_dir);
    out << "examples: " << examples.size() << "\n"
        << "train: " << train_path.string() << "\n"
        << "val: " << val_path.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "extract error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_replay(const std::filesystem::path& log_path, const std::string& node_id,
               std::ostream& out, std::ostream& err) {
  try {
    LogReadResult log = read_log_checked(log_path, err);
    auto trees = rebuild_trees(log.records);

    const TrajectoryRecord* record = nullptr;
    for (const TrajectoryRecord& r : log.records) {
      if (r.node_id == node_id) {
        if (record) throw std::runtime_error("node id " + node_id + " is ambiguous in this log");
        record = &r;
      }
    }
    if (!record) throw std::runtime_error("node " + node_id + " not found in log");
    if (!record->parent_id)
      throw std::runtime_error("node " + node_id + " is a root; roots have no prompt");

    PromptTemplates templates = PromptTemplates::builtin();
    std::map<std::string, ProblemSpec> problems = problems_for_log(log_path, trees, &templates);
    auto problem_it = problems.find(record->problem_id);
    if (problem_it == problems.end())
      throw std::runtime_error("cannot reconstruct problem " + record->problem_id);

    const SearchTree& tree = trees.at({record->problem_id, record->method});
    MethodSpec method = MethodSpec::parse(record->method);

    PromptContext ctx;
    ctx.problem = &problem_it->second;
    ctx.ancestors = tree.path_to(*record->parent_id);
    ctx.current = ctx.ancestors.back();
    ctx.u_raw = ctx.current->u_raw;
    if (flags_of(method.variant).uses_best_perf)
      ctx.best_node = SearchEngine::best_on_path(ctx.ancestors, method.gamma);

    RenderedPrompt prompt = render_generator_prompt(templates, method.variant, ctx);
    std::string hash = to_hex(prompt_hash(prompt));

    out << "node: " << record->node_id << "\n"
        << "problem: " << record->problem_id << "\n"
        << "method: " << record->method << "\n"
        << "depth: " << record->depth << "\n"
        << "u_raw: " << record->u_raw << ", u_cat: " << record->u_cat << "\n"
        << "logged prompt hash: " << record->prompt_hash << "\n"
        << "re-rendered hash:   " << hash << "\n"
        << "--- system ---\n"
        << prompt.system << "\n"
        << "--- user ---\n"
        << prompt.user;
    if (hash != record->prompt_hash) {
      err << "replay mismatch: re-rendered prompt hash differs from the logged hash\n";
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    err << "replay error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace maxcode
