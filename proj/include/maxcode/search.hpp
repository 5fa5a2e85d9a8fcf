#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "maxcode/agents.hpp"
#include "maxcode/core.hpp"
#include "maxcode/executor.hpp"
#include "maxcode/prompts.hpp"
#include "maxcode/valuedata.hpp"

namespace maxcode {

struct SearchBudget {
  int max_evaluations = 64;
  int evaluations_used = 0;
  int max_depth = 8;
  int beam_width_k = 8;
  int repair_cap = 4;
  int oversample_m = 8;

  void validate() const;  // throws ConfigError
  bool can_evaluate() const { return evaluations_used < max_evaluations; }
};

struct MethodSpec {
  enum class Algorithm { Flat, SinglePath, Beam, ValueGuided };

  Algorithm algorithm = Algorithm::Beam;
  GeneratorVariant variant = GeneratorVariant::Base;
  bool use_critic = false;
  double gamma = 1.0;

  std::string name() const;                       // e.g. "beam:TrajCritique"
  static MethodSpec parse(const std::string& s);  // inverse of name()
  void validate() const;
};

struct SearchOutcome {
  SearchTree tree;
  SearchBudget budget;
  bool truncated = false;
  int degraded_levels = 0;
  int prediction_calls = 0;  // predictor calls are free but reported
  int predictor_failures = 0;
};

// Fires once per node, after evaluation and critique attachment, with the
// hash of the prompt that produced the node (0 for the root).
using NodeSink =
    std::function<void(const SearchTree& tree, const SearchState& state, std::uint64_t prompt_hash)>;

// Drives one (problem, method) cell: candidate generation through the policy
// contract, execution through the executor, critiques when the method asks
// for them, and value-predictor filtering for the oversampling strategy.
// All randomness is derived from run_seed, so identical inputs reproduce
// identical trees.
class SearchEngine {
 public:
  SearchEngine(const PromptTemplates& templates, PolicyAgent& agent, CriticAgent* critic,
               Executor& executor, ValuePredictor* predictor, std::uint64_t run_seed,
               NodeSink sink = {});

  void set_request_params(double temperature, int max_tokens);
  // Shared creation counter for multi-cell runs; engine-local when unset.
  void set_created_counter(std::int64_t* counter) { shared_counter_ = counter; }
  void set_run_id(std::string run_id) { run_id_ = std::move(run_id); }

  SearchOutcome run(const ProblemSpec& problem, const MethodSpec& method, SearchBudget budget);

  SearchOutcome run_flat_sampling(const ProblemSpec& problem, const MethodSpec& method,
                                  SearchBudget budget, int n);
  SearchOutcome run_single_path(const ProblemSpec& problem, const MethodSpec& method,
                                SearchBudget budget, int depth);
  SearchOutcome run_beam(const ProblemSpec& problem, const MethodSpec& method,
                         SearchBudget budget, int depth, int k);
  SearchOutcome run_value_guided(const ProblemSpec& problem, const MethodSpec& method,
                                 SearchBudget budget, int depth, int k, int m);

  struct RepairResult {
    std::string node_id;
    bool degraded = false;
    bool truncated = false;
  };
  // All-incorrect recovery: per round one refinement per branch, stopping at
  // the first round with a correct refinement (argmax speedup wins). At the
  // cap, falls back to (compiled desc, creation order) and flags degraded.
  RepairResult repair_loop(SearchTree& tree, SearchBudget& budget, const ProblemSpec& problem,
                           const MethodSpec& method, const std::vector<std::string>& branch_ids,
                           int cap, int level);

  // Best evaluated node on the path by discounted raw speedup (the u_raw
  // witness); null for a root-only path.
  static const SearchState* best_on_path(const std::vector<const SearchState*>& path,
                                         double gamma);

  PromptContext make_context(const SearchTree& tree, const ProblemSpec& problem,
                             const MethodSpec& method, const std::string& node_id) const;

 private:
  struct Run;

  std::int64_t take_order();
  const SearchState& add_root(Run& run);
  const SearchState& add_evaluated(Run& run, const std::string& parent_id,
                                   const std::string& code, std::uint64_t hash);
  void maybe_critique(Run& run, const std::string& node_id);
  std::vector<std::string> sample(Run& run, const std::string& context_node_id, int n, int level,
                                  int branch, int round, std::uint64_t* hash_out);
  std::optional<std::string> advance_target(const SearchTree& tree,
                                            const std::vector<std::string>& level_ids) const;

  const PromptTemplates* templates_;
  PolicyAgent* agent_;
  CriticAgent* critic_;
  Executor* executor_;
  ValuePredictor* predictor_;
  std::uint64_t run_seed_;
  NodeSink sink_;
  double temperature_ = 0.6;
  int max_tokens_ = 4096;
  std::int64_t own_counter_ = 0;
  std::int64_t* shared_counter_ = nullptr;
  std::string run_id_ = "run";
};

}  // namespace maxcode
