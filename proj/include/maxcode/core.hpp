#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace maxcode {

struct TestCase {
  std::string input;
  std::string expected_output;
};

// Speedup thresholds in percent (140 means 140%). Category boundaries are
// inclusive on the upper side.
struct RewardBins {
  double s1 = 140.0;
  double s2 = 320.0;
  double s3 = 475.0;
  bool valid() const { return 100.0 < s1 && s1 < s2 && s2 < s3; }
};

struct ProblemSpec {
  std::string id;
  std::string description;
  std::string baseline_code;
  std::vector<TestCase> test_cases;
  std::optional<double> baseline_time_ms;
  RewardBins bins;
  int timeout_ms = 10000;

  void validate() const;  // throws std::invalid_argument on a bad spec
};

// Executor output e = {compiled, correct/detail, speedup/perf detail}.
// Construct through make() so the cross-field invariants always hold:
// correct implies compiled, speedup is 0 unless correct, time_ms is present
// exactly when the candidate compiled.
struct ExecFeedback {
  bool compiled = false;
  bool correct = false;
  std::string correctness_detail;
  std::optional<double> time_ms;
  double speedup = 0.0;
  std::string perf_detail;

  static ExecFeedback make(bool compiled, bool correct,
                           std::string correctness_detail,
                           std::optional<double> time_ms, double speedup,
                           std::string perf_detail);
};

enum class CriticVariant { Critique, CritiqueBestPerf, TrajCritique, TrajCritiqueBestPerf };

std::string critic_variant_name(CriticVariant v);
CriticVariant critic_variant_from_name(const std::string& name);

struct Critique {
  std::string text;
  CriticVariant variant = CriticVariant::Critique;
  std::string generator_id;
};

// One node of the search tree: current code, its execution feedback, the
// critique attached to it, and the two best-so-far tracks (u_raw over raw
// speedups, u_cat over binned rewards).
struct SearchState {
  std::string node_id;
  std::optional<std::string> parent_id;
  std::string problem_id;
  int depth = 0;
  std::string code;
  std::optional<ExecFeedback> feedback;
  std::optional<Critique> critique;
  double u_raw = 1.0;
  int u_cat = 0;
  std::int64_t created_order = 0;

  bool is_root() const { return depth == 0; }
  bool evaluated() const { return feedback.has_value(); }
};

// Persisted DAG of SearchStates, one per (problem, method, seed). Nodes are
// stored in creation order; parent links always resolve and there is exactly
// one root.
class SearchTree {
 public:
  SearchTree() = default;
  SearchTree(std::string run_id, std::string method, std::int64_t seed, double gamma);

  SearchState& add_root(const std::string& problem_id, const std::string& code,
                        std::int64_t created_order);
  // Computes depth, u_raw and u_cat for the new node from its parent chain.
  SearchState& add_child(const std::string& parent_id, const std::string& code,
                         const ExecFeedback& feedback, const RewardBins& bins,
                         std::int64_t created_order);
  // Inserts a fully populated state (log reconstruction path).
  SearchState& add_raw(SearchState state);

  void attach_critique(const std::string& node_id, Critique critique);

  bool has(const std::string& node_id) const;
  const SearchState& get(const std::string& node_id) const;
  const SearchState& root() const;
  const std::deque<SearchState>& nodes() const { return nodes_; }
  bool empty() const { return nodes_.empty(); }

  // Root-to-node path, both endpoints included.
  std::vector<const SearchState*> path_to(const std::string& node_id) const;

  const std::string& run_id() const { return run_id_; }
  const std::string& method() const { return method_; }
  std::int64_t seed() const { return seed_; }
  double gamma() const { return gamma_; }

  std::string next_node_id(std::int64_t created_order) const;

 private:
  std::string run_id_;
  std::string method_;
  std::int64_t seed_ = 0;
  double gamma_ = 1.0;
  std::deque<SearchState> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
};

// --- max-reward mathematics ---

// Largest valid category index <= v, clamped into {0..4}.
int floor_to_category(double v);

// max over k of gamma^(k-1) * rewards[k], k starting at 1.
double max_reward_return(std::span<const double> rewards, double gamma);

// max(u_prev, gamma^depth * reward); the running best-so-far update.
double update_best_so_far(double u_prev, double reward, int depth, double gamma);

// 5-way discretization of a speedup ratio; 0 covers incorrect or no-gain.
int bin_speedup(double speedup, bool correct, const RewardBins& bins);

// Categorical label realizing max(u_cat/gamma, max_k gamma^(k-t) * future[k]),
// floored to the category grid. `future` starts at the state's own reward.
int compute_value_target(int u_cat, std::span<const int> future_binned, double gamma);

// Node maximizing gamma^(depth-1) * speedup among correct nodes; root when
// nothing correct. Ties break by lowest creation order.
const SearchState& select_best_node(const SearchTree& tree);

}  // namespace maxcode
