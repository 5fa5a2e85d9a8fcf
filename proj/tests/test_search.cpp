#include <random>

#include "doctest.h"
#include "maxcode/search.hpp"
#include "test_support.hpp"

using namespace maxcode;
using namespace maxcode::testing;

namespace {

struct SimEnv {
  Landscape landscape;
  ProblemSpec problem;
  SimulatedExecutor executor;
  ScriptedPolicyAgent agent;
  ScriptedCriticAgent critic;

  explicit SimEnv(std::int64_t seed, double threshold = 0.25)
      : landscape(Landscape::make(seed, 2, 12, 8.0, threshold)),
        problem(sim_problem(landscape)),
        agent(landscape) {
    executor.add(problem.id, landscape);
  }
};

SearchBudget budget_of(int max_evals, int depth, int k = 4, int m = 0) {
  SearchBudget b;
  b.max_evaluations = max_evals;
  b.max_depth = depth;
  b.beam_width_k = k;
  b.oversample_m = m > 0 ? m : k;
  return b;
}

MethodSpec method_of(MethodSpec::Algorithm algorithm, GeneratorVariant variant) {
  MethodSpec m;
  m.algorithm = algorithm;
  m.variant = variant;
  m.use_critic = flags_of(variant).uses_critique;
  return m;
}

}  // namespace

TEST_CASE("method specs parse and round-trip") {
  MethodSpec m = MethodSpec::parse("beam:TrajCritiqueBestPerf");
  CHECK(m.algorithm == MethodSpec::Algorithm::Beam);
  CHECK(m.use_critic);
  CHECK(m.name() == "beam:TrajCritiqueBestPerf");
  MethodSpec g = MethodSpec::parse("single:Base@0.9");
  CHECK(g.gamma == doctest::Approx(0.9));
  CHECK(MethodSpec::parse(g.name()).gamma == doctest::Approx(0.9));
  CHECK_THROWS_AS(MethodSpec::parse("mcts:Base"), ConfigError);
  CHECK_THROWS_AS(MethodSpec::parse("beam"), ConfigError);

  MethodSpec bad = method_of(MethodSpec::Algorithm::Beam, GeneratorVariant::TrajCritique);
  bad.use_critic = false;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("flat sampling produces n evaluated leaves off the root") {
  SimEnv env(3);
  SearchEngine engine(PromptTemplates::builtin(), env.agent, nullptr, env.executor, nullptr, 42);
  SearchOutcome out = engine.run_flat_sampling(env.problem,
                                               method_of(MethodSpec::Algorithm::Flat,
                                                         GeneratorVariant::Base),
                                               budget_of(64, 8), 8);
  CHECK(out.tree.nodes().size() == 9);
  CHECK(out.budget.evaluations_used == 8);
  CHECK_FALSE(out.truncated);
  for (const SearchState& node : out.tree.nodes()) {
    if (node.is_root()) continue;
    CHECK(node.depth == 1);
    CHECK(node.evaluated());
  }

  SearchEngine single(PromptTemplates::builtin(), env.agent, nullptr, env.executor, nullptr, 42);
  SearchOutcome one = single.run_flat_sampling(env.problem,
                                               method_of(MethodSpec::Algorithm::Flat,
                                                         GeneratorVariant::Base),
                                               budget_of(64, 8), 1);
  CHECK(one.tree.nodes().size() == 2);
}

TEST_CASE("flat sampling truncates when the budget runs out") {
  SimEnv env(3);
  SearchEngine engine(PromptTemplates::builtin(), env.agent, nullptr, env.executor, nullptr, 42);
  SearchOutcome out = engine.run_flat_sampling(env.problem,
                                               method_of(MethodSpec::Algorithm::Flat,
                                                         GeneratorVariant::Base),
                                               budget_of(4, 8), 6);
  CHECK(out.truncated);
  CHECK(out.budget.evaluations_used == 4);
  CHECK(out.tree.nodes().size() == 5);
}

TEST_CASE("identical seeds reproduce identical trees") {
  for (auto algorithm : {MethodSpec::Algorithm::Flat, MethodSpec::Algorithm::SinglePath,
                         MethodSpec::Algorithm::Beam}) {
    SimEnv env1(9, 0.45);
    SimEnv env2(9, 0.45);
    MethodSpec method = method_of(algorithm, GeneratorVariant::TrajBestPerf);
    SearchEngine e1(PromptTemplates::builtin(), env1.agent, nullptr, env1.executor, nullptr, 7);
    SearchEngine e2(PromptTemplates::builtin(), env2.agent, nullptr, env2.executor, nullptr, 7);
    SearchOutcome a = e1.run(env1.problem, method, budget_of(80, 6));
    SearchOutcome b = e2.run(env2.problem, method, budget_of(80, 6));
    CHECK(serialize_tree(a.tree) == serialize_tree(b.tree));
  }
}

TEST_CASE("single path builds a chain and critiques every step when asked") {
  SimEnv env(5);
  MethodSpec base = method_of(MethodSpec::Algorithm::SinglePath, GeneratorVariant::Base);
  SearchEngine engine(PromptTemplates::builtin(), env.agent, &env.critic, env.executor, nullptr,
                      11);
  SearchOutcome out = engine.run_single_path(env.problem, base, budget_of(64, 8), 2);
  REQUIRE(out.tree.nodes().size() == 3);
  CHECK(out.tree.nodes()[1].depth == 1);
  CHECK(out.tree.nodes()[2].depth == 2);
  CHECK(*out.tree.nodes()[2].parent_id == out.tree.nodes()[1].node_id);
  CHECK_FALSE(out.tree.nodes()[1].critique.has_value());

  MethodSpec critique = method_of(MethodSpec::Algorithm::SinglePath, GeneratorVariant::Critique);
  SearchEngine engine2(PromptTemplates::builtin(), env.agent, &env.critic, env.executor, nullptr,
                       11);
  SearchOutcome out2 = engine2.run_single_path(env.problem, critique, budget_of(64, 8), 2);
  REQUIRE(out2.tree.nodes().size() == 3);
  CHECK(out2.tree.nodes()[1].critique.has_value());
  CHECK(out2.tree.nodes()[2].critique.has_value());
  CHECK(out2.tree.nodes()[1].critique->variant == CriticVariant::Critique);

  // critic requested but absent is a configuration error
  SearchEngine engine3(PromptTemplates::builtin(), env.agent, nullptr, env.executor, nullptr, 11);
  CHECK_THROWS_AS(engine3.run_single_path(env.problem, critique, budget_of(64, 8), 2),
                  ConfigError);
  CHECK_THROWS_AS(engine3.run_single_path(env.problem, base, budget_of(64, 8), 1), ConfigError);
}

TEST_CASE("u_raw is non-decreasing along a gamma=1 chain and matches the path max") {
  SimEnv env(13);
  MethodSpec method = method_of(MethodSpec::Algorithm::SinglePath, GeneratorVariant::TrajBestPerf);
  SearchEngine engine(PromptTemplates::builtin(), env.agent, nullptr, env.executor, nullptr, 23);
  SearchOutcome out = engine.run_single_path(env.problem, method, budget_of(64, 8), 8);
  double prev = 1.0;
  double best_seen = 1.0;
  for (const SearchState& node : out.tree.nodes()) {
    if (node.is_root()) continue;
    CHECK(node.u_raw >= prev);
    prev = node.u_raw;
    best_seen = std::max(best_seen, node.feedback->speedup);
    CHECK(node.u_raw == doctest::Approx(best_seen));
  }
}

TEST_CASE("beam advances to the argmax-speedup correct candidate") {
  ProblemSpec problem;
  problem.id = "stub";
  problem.description = "stub";
  problem.baseline_code = "orig";
  problem.test_cases = {{"", ""}};

  StubExecutor executor({{"a", feedback_for(1.1)},
                         {"b", feedback_for(2.0)},
                         {"c", feedback_for(1.5)},
                         {"d", feedback_for(2.5)},
                         {"e", feedback_for(0.9)},
                         {"f", feedback_for(1.0, false)}});
  StubAgent agent({{"a", "b", "c"}, {"d", "e", "f"}});
  SearchEngine engine(PromptTemplates::builtin(), agent, nullptr, executor, nullptr, 1);
  MethodSpec method = method_of(MethodSpec::Algorithm::Beam, GeneratorVariant::Base);
  SearchOutcome out = engine.run_beam(problem, method, budget_of(64, 2, 3), 2, 3);

  const SearchTree& tree = out.tree;
  const SearchState* b_node = nullptr;
  for (const SearchState& node : tree.nodes()) {
    if (node.code == "b") b_node = &node;
  }
  REQUIRE(b_node);
  // level 2 candidates are children of "b"
  int level2 = 0;
  for (const SearchState& node : tree.nodes()) {
    if (node.parent_id && *node.parent_id == b_node->node_id) ++level2;
  }
  CHECK(level2 == 3);
  CHECK(out.budget.evaluations_used == 6);
  verify_beam_semantics(tree, 3, 4);
}

TEST_CASE("repair fires on an all-incorrect level and advances to the repaired node") {
  ProblemSpec problem;
  problem.id = "stub";
  problem.baseline_code = "orig";
  problem.test_cases = {{"", ""}};

  StubExecutor executor({{"x1", feedback_for(0.0, false)},
                         {"x2", feedback_for(0.0, false, false)},
                         {"r1", feedback_for(1.8)},
                         {"r2", feedback_for(0.0, false)},
                         {"y1", feedback_for(1.2)},
                         {"y2", feedback_for(1.1)}});
  // level 1: x1 x2 (both incorrect) -> repair round 1: r1 (correct), r2
  // level 2 from r1: y1 y2
  StubAgent agent({{"x1", "x2"}, {"r1"}, {"r2"}, {"y1", "y2"}});
  SearchEngine engine(PromptTemplates::builtin(), agent, nullptr, executor, nullptr, 1);
  MethodSpec method = method_of(MethodSpec::Algorithm::Beam, GeneratorVariant::Base);
  SearchOutcome out = engine.run_beam(problem, method, budget_of(64, 2, 2), 2, 2);

  CHECK(out.degraded_levels == 0);
  CHECK(out.budget.evaluations_used == 6);
  const SearchState* r1 = nullptr;
  for (const SearchState& node : out.tree.nodes())
    if (node.code == "r1") r1 = &node;
  REQUIRE(r1);
  int children_of_r1 = 0;
  for (const SearchState& node : out.tree.nodes())
    if (node.parent_id && *node.parent_id == r1->node_id) ++children_of_r1;
  CHECK(children_of_r1 == 2);
  BeamReplayStats stats = verify_beam_semantics(out.tree, 2, 4);
  CHECK(stats.repair_levels == 1);
  CHECK(stats.advance_levels == 1);
}

TEST_CASE("exhausted repair cap falls back to the first-created compiled candidate") {
  ProblemSpec problem;
  problem.id = "stub";
  problem.baseline_code = "orig";
  problem.test_cases = {{"", ""}};

  std::map<std::string, ExecFeedback> table{{"x1", feedback_for(0.0, false)},
                                            {"x2", feedback_for(0.0, false)}};
  std::vector<std::vector<std::string>> batches{{"x1", "x2"}};
  // cap=2 rounds, every repair compiled but wrong
  for (int round = 1; round <= 2; ++round) {
    for (int branch = 1; branch <= 2; ++branch) {
      std::string code = "r" + std::to_string(round) + std::to_string(branch);
      table.emplace(code, feedback_for(0.0, false));
      batches.push_back({code});
    }
  }
  batches.push_back({"y1", "y2"});  // level 2 from the fallback
  table.emplace("y1", feedback_for(1.4));
  table.emplace("y2", feedback_for(1.2));

  StubExecutor executor(std::move(table));
  StubAgent agent(std::move(batches));
  SearchEngine engine(PromptTemplates::builtin(), agent, nullptr, executor, nullptr, 1);
  MethodSpec method = method_of(MethodSpec::Algorithm::Beam, GeneratorVariant::Base);
  SearchBudget budget = budget_of(64, 2, 2);
  budget.repair_cap = 2;
  SearchOutcome out = engine.run_beam(problem, method, budget, 2, 2);

  CHECK(out.degraded_levels == 1);
  // the fallback is x1 (first created, compiled) and level 2 hangs off it
  const SearchState* x1 = nullptr;
  for (const SearchState& node : out.tree.nodes())
    if (node.code == "x1") x1 = &node;
  REQUIRE(x1);
  int next_level = 0;
  for (const SearchState& node : out.tree.nodes())
    if (node.parent_id && *node.parent_id == x1->node_id && node.code[0] == 'y') ++next_level;
  CHECK(next_level == 2);
  BeamReplayStats stats = verify_beam_semantics(out.tree, 2, 2);
  CHECK(stats.repair_levels == 1);
}

TEST_CASE("a width-1 beam with an immediately correct repair consumes one extra evaluation") {
  ProblemSpec problem;
  problem.id = "stub";
  problem.baseline_code = "orig";
  problem.test_cases = {{"", ""}};
  StubExecutor executor({{"x", feedback_for(0.0, false)}, {"r", feedback_for(1.5)}});
  StubAgent agent({{"x"}, {"r"}});
  SearchEngine engine(PromptTemplates::builtin(), agent, nullptr, executor, nullptr, 1);
  SearchOutcome out = engine.run_beam(problem,
                                      method_of(MethodSpec::Algorithm::Beam, GeneratorVariant::Base),
                                      budget_of(64, 1, 1), 1, 1);
  CHECK(out.budget.evaluations_used == 2);
  CHECK(out.degraded_levels == 0);
}

TEST_CASE("budget soundness: evaluations equal non-root nodes and respect the cap") {
  std::mt19937_64 rng(321);
  for (int trial = 0; trial < 10; ++trial) {
    std::int64_t seed = static_cast<std::int64_t>(rng() % 1000);
    SimEnv env(seed, 0.5);
    MethodSpec method = method_of(MethodSpec::Algorithm::Beam, GeneratorVariant::TrajBestPerf);
    int cap = 10 + static_cast<int>(rng() % 30);
    SearchEngine engine(PromptTemplates::builtin(), env.agent, nullptr, env.executor, nullptr,
                        rng());
    SearchOutcome out = engine.run_beam(env.problem, method, budget_of(cap, 5, 3), 5, 3);
    int non_root = static_cast<int>(out.tree.nodes().size()) - 1;
    CHECK(out.budget.evaluations_used == non_root);
    CHECK(out.budget.evaluations_used <= cap);
  }
}

TEST_CASE("value-guided with m=k is byte-identical to the beam") {
  for (std::int64_t seed : {2, 8, 15}) {
    SimEnv env1(seed, 0.4);
    SimEnv env2(seed, 0.4);
    OracleValuePredictor predictor(env2.landscape, env2.problem.bins, 1.0);
    MethodSpec beam_method = method_of(MethodSpec::Algorithm::Beam, GeneratorVariant::TrajBestPerf);
    MethodSpec vg_method = beam_method;
    vg_method.algorithm = MethodSpec::Algorithm::ValueGuided;

    SearchEngine beam_engine(PromptTemplates::builtin(), env1.agent, nullptr, env1.executor,
                             nullptr, 99);
    SearchEngine vg_engine(PromptTemplates::builtin(), env2.agent, nullptr, env2.executor,
                           &predictor, 99);
    SearchOutcome beam_out = beam_engine.run_beam(env1.problem, beam_method, budget_of(80, 5, 4),
                                                  5, 4);
    SearchOutcome vg_out = vg_engine.run_value_guided(env2.problem, vg_method,
                                                      budget_of(80, 5, 4), 5, 4, 4);
    std::string a = serialize_tree(beam_out.tree);
    std::string b = serialize_tree(vg_out.tree);
    // method strings differ; normalize them out
    std::string from = "\"method\":\"" + vg_method.name() + "\"";
    std::string to = "\"method\":\"" + beam_method.name() + "\"";
    std::size_t pos;
    while ((pos = b.find(from)) != std::string::npos) b.replace(pos, from.size(), to);
    CHECK(a == b);
    CHECK(vg_out.prediction_calls == 0);  // no filtering when m == k
  }
}

TEST_CASE("oversampling keeps the candidates the predictor ranks best") {
  ProblemSpec problem;
  problem.id = "stub";
  problem.baseline_code = "orig";
  problem.test_cases = {{"", ""}};

  // m=4 candidates; true speedups put "c3" (cat 4) and "c2" (cat 2) on top.
  StubExecutor executor({{"c0", feedback_for(1.2)},
                         {"c1", feedback_for(1.0, false)},
                         {"c2", feedback_for(2.0)},
                         {"c3", feedback_for(6.0)}});
  StubAgent agent({{"c0", "c1", "c2", "c3"}});
  std::map<std::string, int> true_cat{{"c0", 1}, {"c1", 0}, {"c2", 2}, {"c3", 4}};
  FixedValuePredictor predictor([&](const std::string& render, int, int) {
    for (const auto& [code, cat] : true_cat) {
      if (render.find("\n" + code + "\n") != std::string::npos)
        return CategoricalValue::one_hot(cat);
    }
    throw std::logic_error("candidate not found in render");
  });

  SearchEngine engine(PromptTemplates::builtin(), agent, nullptr, executor, &predictor, 1);
  MethodSpec method = method_of(MethodSpec::Algorithm::ValueGuided, GeneratorVariant::Base);
  SearchOutcome out = engine.run_value_guided(problem, method, budget_of(64, 1, 2, 4), 1, 2, 4);

  CHECK(out.prediction_calls == 4);
  CHECK(out.budget.evaluations_used == 2);  // only the kept candidates run
  std::set<std::string> evaluated;
  for (const SearchState& node : out.tree.nodes())
    if (!node.is_root()) evaluated.insert(node.code);
  CHECK(evaluated == std::set<std::string>{"c2", "c3"});  // contains the true best of the m
}

TEST_CASE("a uniform predictor reduces selection to creation order") {
  ProblemSpec problem;
  problem.id = "stub";
  problem.baseline_code = "orig";
  problem.test_cases = {{"", ""}};
  StubExecutor executor({{"c0", feedback_for(1.1)},
                         {"c1", feedback_for(1.2)},
                         {"c2", feedback_for(5.0)},
                         {"c3", feedback_for(6.0)}});
  StubAgent agent({{"c0", "c1", "c2", "c3"}});
  FixedValuePredictor predictor(
      [](const std::string&, int, int) { return CategoricalValue::uniform(); });
  SearchEngine engine(PromptTemplates::builtin(), agent, nullptr, executor, &predictor, 1);
  MethodSpec method = method_of(MethodSpec::Algorithm::ValueGuided, GeneratorVariant::Base);
  SearchOutcome out = engine.run_value_guided(problem, method, budget_of(64, 1, 2, 4), 1, 2, 4);
  std::set<std::string> evaluated;
  for (const SearchState& node : out.tree.nodes())
    if (!node.is_root()) evaluated.insert(node.code);
  CHECK(evaluated == std::set<std::string>{"c0", "c1"});
}

TEST_CASE("predictor failure falls back to beam semantics for the level") {
  ProblemSpec problem;
  problem.id = "stub";
  problem.baseline_code = "orig";
  problem.test_cases = {{"", ""}};
  StubExecutor executor({{"c0", feedback_for(1.1)},
                         {"c1", feedback_for(1.2)},
                         {"c2", feedback_for(5.0)},
                         {"c3", feedback_for(6.0)}});
  StubAgent agent({{"c0", "c1", "c2", "c3"}});
  FixedValuePredictor predictor([](const std::string&, int, int) -> CategoricalValue {
    throw std::runtime_error("predictor offline");
  });
  SearchEngine engine(PromptTemplates::builtin(), agent, nullptr, executor, &predictor, 1);
  MethodSpec method = method_of(MethodSpec::Algorithm::ValueGuided, GeneratorVariant::Base);
  SearchOutcome out = engine.run_value_guided(problem, method, budget_of(64, 1, 2, 4), 1, 2, 4);
  CHECK(out.predictor_failures == 1);
  std::set<std::string> evaluated;
  for (const SearchState& node : out.tree.nodes())
    if (!node.is_root()) evaluated.insert(node.code);
  CHECK(evaluated == std::set<std::string>{"c0", "c1"});

  // value-guided without any predictor at all is a configuration error
  SearchEngine engine2(PromptTemplates::builtin(), agent, nullptr, executor, nullptr, 1);
  CHECK_THROWS_AS(engine2.run_value_guided(problem, method, budget_of(64, 1, 2, 4), 1, 2, 4),
                  ConfigError);
}

TEST_CASE("node sink streams every node with its prompt hash") {
  SimEnv env(31);
  std::vector<std::string> ids;
  std::vector<std::uint64_t> hashes;
  NodeSink sink = [&](const SearchTree&, const SearchState& state, std::uint64_t hash) {
    ids.push_back(state.node_id);
    hashes.push_back(hash);
  };
  SearchEngine engine(PromptTemplates::builtin(), env.agent, nullptr, env.executor, nullptr, 5,
                      sink);
  SearchOutcome out = engine.run_single_path(env.problem,
                                             method_of(MethodSpec::Algorithm::SinglePath,
                                                       GeneratorVariant::Base),
                                             budget_of(16, 4), 4);
  CHECK(ids.size() == out.tree.nodes().size());
  CHECK(hashes.front() == 0);  // root has no prompt
  for (std::size_t i = 1; i < hashes.size(); ++i) CHECK(hashes[i] != 0);
}
