#include "maxcode/search.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "maxcode/util.hpp"

namespace maxcode {

void SearchBudget::validate() const {
  if (max_evaluations < 1) throw ConfigError("max_evaluations must be >= 1");
  if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (beam_width_k < 1) throw ConfigError("beam_width_k must be >= 1");
  if (repair_cap < 1) throw ConfigError("repair_cap must be >= 1");
  if (oversample_m < beam_width_k) throw ConfigError("oversample_m must be >= beam_width_k");
  if (evaluations_used < 0 || evaluations_used > max_evaluations)
    throw ConfigError("evaluations_used out of range");
}

namespace {

const char* algorithm_name(MethodSpec::Algorithm a) {
  switch (a) {
    case MethodSpec::Algorithm::Flat: return "flat";
    case MethodSpec::Algorithm::SinglePath: return "single";
    case MethodSpec::Algorithm::Beam: return "beam";
    case MethodSpec::Algorithm::ValueGuided: return "value";
  }
  throw std::logic_error("unknown algorithm");
}

MethodSpec::Algorithm algorithm_from_name(const std::string& s) {
  if (s == "flat") return MethodSpec::Algorithm::Flat;
  if (s == "single") return MethodSpec::Algorithm::SinglePath;
  if (s == "beam") return MethodSpec::Algorithm::Beam;
  if (s == "value") return MethodSpec::Algorithm::ValueGuided;
  throw ConfigError("unknown search algorithm: " + s);
}

}  // namespace

std::string MethodSpec::name() const {
  std::string s = std::string(algorithm_name(algorithm)) + ":" + variant_name(variant);
  if (gamma != 1.0) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "@%g", gamma);
    s += buf;
  }
  return s;
}

MethodSpec MethodSpec::parse(const std::string& s) {
  MethodSpec m;
  std::string body = s;
  std::size_t at = body.find('@');
  if (at != std::string::npos) {
    m.gamma = std::stod(body.substr(at + 1));
    body = body.substr(0, at);
  }
  std::size_t colon = body.find(':');
  if (colon == std::string::npos) throw ConfigError("method must look like algorithm:Variant: " + s);
  m.algorithm = algorithm_from_name(trim(body.substr(0, colon)));
  m.variant = variant_from_name(trim(body.substr(colon + 1)));
  m.use_critic = flags_of(m.variant).uses_critique;
  m.validate();
  return m;
}

void MethodSpec::validate() const {
  if (gamma <= 0.0 || gamma > 1.0) throw ConfigError("method gamma must be in (0, 1]");
  if (use_critic != flags_of(variant).uses_critique)
    throw ConfigError("use_critic must match the variant's critique flag for " + name());
}

struct SearchEngine::Run {
  SearchTree tree;
  SearchBudget budget;
  const ProblemSpec* problem = nullptr;
  MethodSpec method;
  bool truncated = false;
  int degraded_levels = 0;
  int prediction_calls = 0;
  int predictor_failures = 0;

  SearchOutcome outcome() && {
    SearchOutcome o;
    o.tree = std::move(tree);
    o.budget = budget;
    o.truncated = truncated;
    o.degraded_levels = degraded_levels;
    o.prediction_calls = prediction_calls;
    o.predictor_failures = predictor_failures;
    return o;
  }
};

SearchEngine::SearchEngine(const PromptTemplates& templates, PolicyAgent& agent,
                           CriticAgent* critic, Executor& executor, ValuePredictor* predictor,
                           std::uint64_t run_seed, NodeSink sink)
    : templates_(&templates),
      agent_(&agent),
      critic_(critic),
      executor_(&executor),
      predictor_(predictor),
      run_seed_(run_seed),
      sink_(std::move(sink)) {}

void SearchEngine::set_request_params(double temperature, int max_tokens) {
  temperature_ = temperature;
  max_tokens_ = max_tokens;
}

std::int64_t SearchEngine::take_order() {
  if (shared_counter_) return (*shared_counter_)++;
  return own_counter_++;
}

const SearchState* SearchEngine::best_on_path(const std::vector<const SearchState*>& path,
                                              double gamma) {
  const SearchState* best = nullptr;
  double best_score = 0.0;
  for (const SearchState* node : path) {
    if (!node->evaluated()) continue;
    double score = std::pow(gamma, node->depth) * node->feedback->speedup;
    if (!best || score > best_score) {
      best = node;
      best_score = score;
    }
  }
  return best;
}

PromptContext SearchEngine::make_context(const SearchTree& tree, const ProblemSpec& problem,
                                         const MethodSpec& method,
                                         const std::string& node_id) const {
  PromptContext ctx;
  ctx.problem = &problem;
  ctx.ancestors = tree.path_to(node_id);
  ctx.current = ctx.ancestors.back();
  ctx.u_raw = ctx.current->u_raw;
  if (flags_of(method.variant).uses_best_perf)
    ctx.best_node = best_on_path(ctx.ancestors, method.gamma);
  return ctx;
}

const SearchState& SearchEngine::add_root(Run& run) {
  const SearchState& root = run.tree.add_root(run.problem->id, run.problem->baseline_code,
                                              take_order());
  if (sink_) sink_(run.tree, root, 0);
  return root;
}

const SearchState& SearchEngine::add_evaluated(Run& run, const std::string& parent_id,
                                               const std::string& code, std::uint64_t hash) {
  ExecFeedback fb = executor_->evaluate(*run.problem, code);
  ++run.budget.evaluations_used;
  const SearchState& node =
      run.tree.add_child(parent_id, code, fb, run.problem->bins, take_order());
  maybe_critique(run, node.node_id);
  if (sink_) sink_(run.tree, run.tree.get(node.node_id), hash);
  return run.tree.get(node.node_id);
}

void SearchEngine::maybe_critique(Run& run, const std::string& node_id) {
  if (!run.method.use_critic) return;
  if (!critic_) throw ConfigError("method " + run.method.name() + " needs a critic agent");
  const SearchState& node = run.tree.get(node_id);
  if (node.is_root() || !node.evaluated() || node.critique) return;
  CriticVariant cv = critic_variant_for(run.method.variant);
  PromptContext ctx = make_context(run.tree, *run.problem, run.method, node_id);
  RenderedPrompt prompt = render_critic_prompt(*templates_, cv, ctx);
  AgentRequest request{prompt.system, prompt.user, temperature_, max_tokens_, 1,
                       derive_seed(run_seed_, run.problem->id + "/critic",
                                   static_cast<std::uint64_t>(node.created_order))};
  std::string text = critic_->critique(request, ctx);
  run.tree.attach_critique(node_id, Critique{text, cv, critic_->id()});
}

std::vector<std::string> SearchEngine::sample(Run& run, const std::string& context_node_id,
                                              int n, int level, int branch, int round,
                                              std::uint64_t* hash_out) {
  PromptContext ctx = make_context(run.tree, *run.problem, run.method, context_node_id);
  RenderedPrompt prompt = render_generator_prompt(*templates_, run.method.variant, ctx);
  if (hash_out) *hash_out = prompt_hash(prompt);
  AgentRequest request{prompt.system, prompt.user, temperature_, max_tokens_, n,
                       derive_seed(run_seed_, run.problem->id, level, branch, round)};
  return generate_candidates(*agent_, request, ctx);
}

std::optional<std::string> SearchEngine::advance_target(
    const SearchTree& tree, const std::vector<std::string>& level_ids) const {
  const SearchState* best = nullptr;
  for (const std::string& id : level_ids) {
    const SearchState& node = tree.get(id);
    // Correct for advancement means correct and strictly faster.
    if (!node.evaluated() || !node.feedback->correct || node.feedback->speedup <= 1.0) continue;
    if (!best || node.feedback->speedup > best->feedback->speedup) best = &node;
  }
  if (!best) return std::nullopt;
  return best->node_id;
}

SearchOutcome SearchEngine::run(const ProblemSpec& problem, const MethodSpec& method,
                                SearchBudget budget) {
  switch (method.algorithm) {
    case MethodSpec::Algorithm::Flat:
      return run_flat_sampling(problem, method, budget, budget.max_evaluations);
    case MethodSpec::Algorithm::SinglePath:
      return run_single_path(problem, method, budget, budget.max_depth);
    case MethodSpec::Algorithm::Beam:
      return run_beam(problem, method, budget, budget.max_depth, budget.beam_width_k);
    case MethodSpec::Algorithm::ValueGuided:
      return run_value_guided(problem, method, budget, budget.max_depth, budget.beam_width_k,
                              budget.oversample_m);
  }
  throw std::logic_error("unknown algorithm");
}

SearchOutcome SearchEngine::run_flat_sampling(const ProblemSpec& problem,
                                              const MethodSpec& method, SearchBudget budget,
                                              int n) {
  if (n < 1) throw ConfigError("flat sampling needs n >= 1");
  budget.validate();
  method.validate();
  Run run{SearchTree(run_id_, method.name(), static_cast<std::int64_t>(run_seed_), method.gamma),
          budget, &problem, method};
  const SearchState& root = add_root(run);

  std::uint64_t hash = 0;
  std::vector<std::string> texts = sample(run, root.node_id, n, 0, 0, 0, &hash);
  for (const std::string& text : texts) {
    if (!run.budget.can_evaluate()) {
      run.truncated = true;
      break;
    }
    add_evaluated(run, root.node_id, text, hash);
  }
  return std::move(run).outcome();
}

SearchOutcome SearchEngine::run_single_path(const ProblemSpec& problem, const MethodSpec& method,
                                            SearchBudget budget, int depth) {
  if (depth < 2) throw ConfigError("single-path refinement needs depth >= 2");
  budget.validate();
  method.validate();
  Run run{SearchTree(run_id_, method.name(), static_cast<std::int64_t>(run_seed_), method.gamma),
          budget, &problem, method};
  const SearchState& root = add_root(run);

  std::string current = root.node_id;
  for (int step = 1; step <= depth; ++step) {
    if (!run.budget.can_evaluate()) {
      run.truncated = true;
      break;
    }
    std::uint64_t hash = 0;
    std::vector<std::string> texts = sample(run, current, 1, step, 0, 0, &hash);
    current = add_evaluated(run, current, texts.front(), hash).node_id;
  }
  return std::move(run).outcome();
}

SearchEngine::RepairResult SearchEngine::repair_loop(SearchTree& tree, SearchBudget& budget,
                                                     const ProblemSpec& problem,
                                                     const MethodSpec& method,
                                                     const std::vector<std::string>& branch_ids,
                                                     int cap, int level) {
  if (branch_ids.empty()) throw std::invalid_argument("repair loop needs at least one branch");
  Run run{std::move(tree), budget, &problem, method};
  RepairResult result;

  std::vector<std::string> reps = branch_ids;  // current representative per branch
  std::vector<std::string> scope = branch_ids;  // every node considered for the fallback
  for (int round = 1; round <= cap && !result.truncated; ++round) {
    std::vector<std::string> round_ids;
    for (std::size_t j = 0; j < reps.size(); ++j) {
      if (!run.budget.can_evaluate()) {
        result.truncated = true;
        break;
      }
      std::uint64_t hash = 0;
      std::vector<std::string> texts =
          sample(run, reps[j], 1, level, static_cast<int>(j + 1), round, &hash);
      const SearchState& node = add_evaluated(run, reps[j], texts.front(), hash);
      round_ids.push_back(node.node_id);
      scope.push_back(node.node_id);
      reps[j] = node.node_id;
    }
    const SearchState* winner = nullptr;
    for (const std::string& id : round_ids) {
      const SearchState& node = run.tree.get(id);
      if (!node.feedback->correct) continue;
      if (!winner || node.feedback->speedup > winner->feedback->speedup) winner = &node;
    }
    if (winner) {
      result.node_id = winner->node_id;
      tree = std::move(run.tree);
      budget = run.budget;
      return result;
    }
  }

  // Cap (or budget) reached with nothing correct: least-bad fallback.
  const SearchState* fallback = nullptr;
  for (const std::string& id : scope) {
    const SearchState& node = run.tree.get(id);
    if (!fallback) {
      fallback = &node;
      continue;
    }
    bool better_compiled = node.feedback->compiled && !fallback->feedback->compiled;
    bool same_compiled = node.feedback->compiled == fallback->feedback->compiled;
    if (better_compiled || (same_compiled && node.created_order < fallback->created_order))
      fallback = &node;
  }
  result.node_id = fallback->node_id;
  result.degraded = true;
  tree = std::move(run.tree);
  budget = run.budget;
  return result;
}

SearchOutcome SearchEngine::run_beam(const ProblemSpec& problem, const MethodSpec& method,
                                     SearchBudget budget, int depth, int k) {
  return run_value_guided(problem, method, budget, depth, k, k);
}

SearchOutcome SearchEngine::run_value_guided(const ProblemSpec& problem, const MethodSpec& method,
                                             SearchBudget budget, int depth, int k, int m) {
  if (k < 1) throw ConfigError("beam width must be >= 1");
  if (m < k) throw ConfigError("oversample m must be >= beam width k");
  bool filtering = m > k;
  if (filtering && !predictor_)
    throw ConfigError("value-guided search needs a value predictor");
  budget.validate();
  method.validate();

  Run run{SearchTree(run_id_, method.name(), static_cast<std::int64_t>(run_seed_), method.gamma),
          budget, &problem, method};
  const SearchState& root = add_root(run);
  int horizon = budget.max_depth;

  std::string selected = root.node_id;
  for (int level = 1; level <= depth; ++level) {
    if (!run.budget.can_evaluate()) {
      run.truncated = true;
      break;
    }
    std::uint64_t hash = 0;
    std::vector<std::string> texts = sample(run, selected, m, level, 0, 0, &hash);

    // Oversampling: keep the top-k candidates by predicted value, then
    // evaluate only those. Prediction is free with respect to the budget.
    std::vector<std::size_t> kept(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) kept[i] = i;
    if (filtering) {
      const SearchState& sel = run.tree.get(selected);
      std::vector<const SearchState*> prefix = run.tree.path_to(selected);
      int remaining = std::max(0, horizon - (sel.depth + 1));
      std::vector<CategoricalValue> values(texts.size());
      bool predictor_ok = true;
      for (std::size_t i = 0; i < texts.size() && predictor_ok; ++i) {
        RenderedPrompt render = render_reward_prompt(*templates_, problem, prefix, texts[i],
                                                     sel.u_cat, remaining);
        ++run.prediction_calls;
        try {
          values[i] = predictor_->predict(render.full(), sel.u_cat, remaining);
        } catch (const std::exception&) {
          ++run.predictor_failures;
          predictor_ok = false;  // fall back to plain beam semantics this level
        }
      }
      if (predictor_ok) {
        std::stable_sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
          double ea = expected_category(values[a]);
          double eb = expected_category(values[b]);
          if (ea != eb) return ea > eb;
          double pa = values[a].probabilities[4];
          double pb = values[b].probabilities[4];
          if (pa != pb) return pa > pb;
          return a < b;  // creation order
        });
      }
      kept.resize(static_cast<std::size_t>(k));
      std::sort(kept.begin(), kept.end());  // evaluate in generation order
    }

    std::vector<std::string> level_ids;
    for (std::size_t idx : kept) {
      if (!run.budget.can_evaluate()) {
        run.truncated = true;
        break;
      }
      level_ids.push_back(add_evaluated(run, selected, texts[idx], hash).node_id);
    }
    if (level_ids.empty()) break;

    if (auto target = advance_target(run.tree, level_ids)) {
      selected = *target;
      continue;
    }
    if (run.truncated) break;

    SearchTree tree = std::move(run.tree);
    SearchBudget b = run.budget;
    RepairResult repair = repair_loop(tree, b, problem, method, level_ids,
                                      run.budget.repair_cap, level);
    run.tree = std::move(tree);
    run.budget = b;
    if (repair.degraded) ++run.degraded_levels;
    if (repair.truncated) run.truncated = true;
    selected = repair.node_id;
    if (repair.truncated) break;
  }
  return std::move(run).outcome();
}

}  // namespace maxcode
