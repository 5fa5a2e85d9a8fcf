#pragma once

// Shared scaffolding for the unit and acceptance suites: scripted stub
// agents/executors with fully controlled feedback, a tree serializer for
// byte-level comparisons, and a beam replay checker that re-verifies the
// advance and repair rules from the finished tree structure.

#include <deque>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "maxcode/agents.hpp"
#include "maxcode/executor.hpp"
#include "maxcode/search.hpp"
#include "maxcode/trajectory.hpp"
#include "maxcode/valuedata.hpp"

namespace maxcode::testing {

inline ExecFeedback feedback_for(double speedup, bool correct = true, bool compiled = true) {
  return ExecFeedback::make(compiled, correct,
                            compiled ? (correct ? "" : "wrong output") : "syntax error",
                            compiled ? std::optional<double>(100.0 / std::max(0.2, speedup))
                                     : std::nullopt,
                            speedup, "");
}

// Maps candidate code verbatim to feedback.
class StubExecutor : public Executor {
 public:
  explicit StubExecutor(std::map<std::string, ExecFeedback> table) : table_(std::move(table)) {}
  ExecFeedback evaluate(const ProblemSpec&, const std::string& code) override {
    auto it = table_.find(code);
    if (it == table_.end()) throw std::logic_error("stub executor: unknown code " + code);
    return it->second;
  }

 private:
  std::map<std::string, ExecFeedback> table_;
};

// Replays scripted candidate batches in order; each batch must match the
// requested n exactly.
class StubAgent : public PolicyAgent {
 public:
  explicit StubAgent(std::vector<std::vector<std::string>> batches)
      : batches_(batches.begin(), batches.end()) {}
  std::vector<std::string> generate(const AgentRequest& request, const PromptContext&) override {
    if (batches_.empty()) throw std::logic_error("stub agent: out of batches");
    std::vector<std::string> batch = batches_.front();
    batches_.pop_front();
    if (static_cast<int>(batch.size()) != request.n)
      throw std::logic_error("stub agent: batch size " + std::to_string(batch.size()) +
                             " != n " + std::to_string(request.n));
    return batch;
  }
  std::string id() const override { return "stub-agent"; }

 private:
  std::deque<std::vector<std::string>> batches_;
};

class FixedValuePredictor : public ValuePredictor {
 public:
  using Fn = std::function<CategoricalValue(const std::string&, int, int)>;
  explicit FixedValuePredictor(Fn fn) : fn_(std::move(fn)) {}
  CategoricalValue predict(const std::string& render, int u_cat, int remaining) override {
    return fn_(render, u_cat, remaining);
  }
  std::string id() const override { return "fixed-predictor"; }

 private:
  Fn fn_;
};

inline ProblemSpec sim_problem(const Landscape& landscape, const std::string& id = "sim") {
  ProblemSpec p;
  p.id = id;
  p.description = "synthetic landscape";
  p.baseline_code = format_params(landscape.start_params());
  p.test_cases = {{"", ""}};
  p.baseline_time_ms = 100.0;
  return p;
}

// Creation-order serialization without wall-clock fields, for determinism
// and equivalence checks.
inline std::string serialize_tree(const SearchTree& tree) {
  std::ostringstream os;
  for (const SearchState& node : tree.nodes()) {
    TrajectoryRecord r = record_from_state(tree, node, 0, "");
    r.prompt_hash.clear();
    os << r.to_json_line() << "\n";
  }
  return os.str();
}

struct BeamReplayStats {
  int levels = 0;
  int advance_levels = 0;
  int repair_levels = 0;
  int repair_rounds = 0;
};

// Walks a finished beam tree level by level and checks, from structure
// alone, that every advance went to the argmax-speedup correct candidate and
// that repairs fired exactly on the all-incorrect levels. The consumed set
// separates repair chains from later level candidates when a degraded
// fallback re-selects a node that already has repair children.
inline BeamReplayStats verify_beam_semantics(const SearchTree& tree, int k, int repair_cap) {
  std::map<std::string, std::vector<const SearchState*>> children;
  for (const SearchState& node : tree.nodes()) {
    if (node.parent_id) children[*node.parent_id].push_back(&node);
  }
  std::set<std::string> consumed;
  auto kids = [&](const std::string& id, bool unconsumed_only) {
    std::vector<const SearchState*> out;
    auto it = children.find(id);
    if (it == children.end()) return out;
    for (const SearchState* c : it->second) {
      if (!unconsumed_only || !consumed.count(c->node_id)) out.push_back(c);
    }
    return out;
  };

  BeamReplayStats stats;
  const SearchState* selected = &tree.root();
  while (true) {
    std::vector<const SearchState*> candidates = kids(selected->node_id, true);
    if (candidates.empty()) break;
    if (static_cast<int>(candidates.size()) > k)
      throw std::runtime_error("level has more than k candidates");
    for (const SearchState* c : candidates) consumed.insert(c->node_id);
    ++stats.levels;

    const SearchState* winner = nullptr;
    for (const SearchState* c : candidates) {
      if (!c->feedback->correct || c->feedback->speedup <= 1.0) continue;
      if (!winner || c->feedback->speedup > winner->feedback->speedup) winner = c;
    }

    if (winner) {
      ++stats.advance_levels;
      for (const SearchState* c : candidates) {
        if (c != winner && !kids(c->node_id, true).empty())
          throw std::runtime_error("non-selected candidate " + c->node_id +
                                   " has children on an advance level");
      }
      selected = winner;
      continue;
    }

    // All-incorrect level: repairs must exist (unless the run stopped here).
    ++stats.repair_levels;
    std::vector<const SearchState*> reps = candidates;
    std::vector<const SearchState*> scope = candidates;
    const SearchState* repair_winner = nullptr;
    int rounds = 0;
    while (!repair_winner) {
      std::vector<const SearchState*> round_nodes;
      std::vector<const SearchState*> next_reps;
      for (const SearchState* rep : reps) {
        std::vector<const SearchState*> refinements = kids(rep->node_id, true);
        if (refinements.size() > 1)
          throw std::runtime_error("repair branch " + rep->node_id + " has multiple refinements");
        if (!refinements.empty()) {
          consumed.insert(refinements[0]->node_id);
          round_nodes.push_back(refinements[0]);
          next_reps.push_back(refinements[0]);
          scope.push_back(refinements[0]);
        } else {
          next_reps.push_back(rep);
        }
      }
      if (round_nodes.empty()) break;  // chains ended (cap or truncation)
      ++rounds;
      if (rounds > repair_cap) throw std::runtime_error("repair exceeded its cap");
      for (const SearchState* node : round_nodes) {
        if (!node->feedback->correct) continue;
        if (!repair_winner || node->feedback->speedup > repair_winner->feedback->speedup)
          repair_winner = node;
      }
      reps = next_reps;
    }
    stats.repair_rounds += rounds;

    if (repair_winner) {
      for (const SearchState* node : scope) {
        if (node != repair_winner && !kids(node->node_id, true).empty())
          throw std::runtime_error("repair chain continued past the winning round");
      }
      selected = repair_winner;
      continue;
    }

    // Degraded level: no correct node anywhere in scope, and the fallback is
    // (compiled desc, creation order) over the whole repair scope.
    const SearchState* fallback = nullptr;
    for (const SearchState* node : scope) {
      if (node->feedback->correct)
        throw std::runtime_error("degraded level contained a correct node");
      if (!fallback) {
        fallback = node;
        continue;
      }
      bool better = node->feedback->compiled && !fallback->feedback->compiled;
      bool same = node->feedback->compiled == fallback->feedback->compiled;
      if (better || (same && node->created_order < fallback->created_order)) fallback = node;
    }
    selected = fallback;
  }
  return stats;
}

}  // namespace maxcode::testing
