#include "maxcode/valuedata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "maxcode/util.hpp"

namespace maxcode {

CategoricalValue CategoricalValue::one_hot(int category) {
  if (category < 0 || category > 4) throw std::invalid_argument("category out of range");
  CategoricalValue v;
  v.probabilities[category] = 1.0;
  return v;
}

CategoricalValue CategoricalValue::uniform() {
  CategoricalValue v;
  v.probabilities.fill(0.2);
  return v;
}

bool CategoricalValue::normalized(double tol) const {
  double sum = 0.0;
  for (double p : probabilities) {
    if (p < 0.0) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol;
}

double expected_category(const CategoricalValue& v) {
  double e = 0.0;
  for (int i = 0; i < 5; ++i) e += i * v.probabilities[i];
  return e;
}

namespace {

// Best discounted future category over every root-to-leaf continuation of
// `node`, discount starting at gamma^0 for the node's own reward.
double best_future(const SearchTree& tree, const RewardBins& bins,
                   const std::map<std::string, std::vector<const SearchState*>>& children,
                   const SearchState& node, double gamma) {
  double own = node.evaluated()
                   ? bin_speedup(node.feedback->speedup, node.feedback->correct, bins)
                   : 0.0;
  double best = own;
  auto it = children.find(node.node_id);
  if (it != children.end()) {
    for (const SearchState* child : it->second) {
      best = std::max(best, gamma * best_future(tree, bins, children, *child, gamma));
    }
  }
  return best;
}

}  // namespace

ExtractResult extract_examples(const SearchTree& tree, const ProblemSpec& problem,
                               const PromptTemplates& templates, const RewardBins& bins,
                               double gamma, int horizon, int max_prefix_len) {
  if (max_prefix_len < 1) throw std::invalid_argument("max_prefix_len must be >= 1");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");

  std::map<std::string, std::vector<const SearchState*>> children;
  for (const SearchState& node : tree.nodes()) {
    if (node.parent_id) children[*node.parent_id].push_back(&node);
  }

  ExtractResult result;
  for (const SearchState& node : tree.nodes()) {
    if (node.is_root()) continue;
    if (node.depth > max_prefix_len) continue;
    if (!node.evaluated()) {
      ++result.skipped_missing_feedback;
      continue;
    }
    std::vector<const SearchState*> path = tree.path_to(node.node_id);
    bool usable = true;
    for (const SearchState* p : path) {
      if (!p->is_root() && !p->evaluated()) usable = false;
    }
    if (!usable) {
      ++result.skipped_missing_feedback;
      continue;
    }

    // u_cat over the prefix, gamma^(k-1) weighting, own reward included.
    double u = 0.0;
    double w = 1.0;
    for (const SearchState* p : path) {
      if (p->is_root()) continue;
      u = std::max(u, w * bin_speedup(p->feedback->speedup, p->feedback->correct, bins));
      w *= gamma;
    }
    int u_cat = floor_to_category(u);

    double future = best_future(tree, bins, children, node, gamma);
    int label = floor_to_category(std::max(static_cast<double>(u_cat) / gamma, future));

    ValueExample ex;
    ex.problem_id = node.problem_id;
    ex.u_cat = u_cat;
    ex.remaining_rounds = std::max(0, horizon - node.depth);
    ex.label = label;
    std::vector<const SearchState*> prefix(path.begin(), path.end() - 1);
    ex.prefix_render =
        render_reward_prompt(templates, problem, prefix, node.code, u_cat, ex.remaining_rounds)
            .full();
    result.examples.push_back(std::move(ex));
  }
  return result;
}

std::string last_code_block(const std::string& render) {
  std::size_t close = render.rfind("\n```");
  if (close == std::string::npos || close == 0) return {};
  std::size_t open = render.rfind("```\n", close - 1);
  if (open == std::string::npos) return {};
  std::size_t body = open + 4;
  if (close < body) return {};
  return render.substr(body, close - body);
}

CategoricalValue OracleValuePredictor::predict(const std::string& prefix_render, int u_cat,
                                               int remaining_rounds) {
  auto params = parse_params(last_code_block(prefix_render), landscape_.dim);
  if (!params) {
    // Unparseable attempt: its own reward is 0 and it cannot improve, so the
    // target collapses to the carried-over best.
    return CategoricalValue::one_hot(
        floor_to_category(static_cast<double>(u_cat) / gamma_));
  }

  // Rounds needed to turn *params into q: one coordinate per round, step
  // magnitude at most 3 (the scripted agent's move set).
  double best = bin_speedup(landscape_.clamped_value(*params),
                            landscape_.constraint_ok(*params), bins_);
  std::vector<int> q(landscape_.dim, 0);
  bool done = false;
  while (!done) {
    int rounds = 0;
    for (int i = 0; i < landscape_.dim; ++i) {
      rounds += (std::abs(q[i] - (*params)[i]) + 2) / 3;
    }
    if (rounds <= remaining_rounds) {
      bool correct = landscape_.constraint_ok(q);
      double cat = bin_speedup(landscape_.clamped_value(q), correct, bins_);
      best = std::max(best, std::pow(gamma_, rounds) * cat);
    }
    int i = landscape_.dim - 1;
    while (i >= 0) {
      if (q[i] < landscape_.range - 1) {
        ++q[i];
        break;
      }
      q[i] = 0;
      --i;
    }
    done = i < 0;
  }
  int label = floor_to_category(std::max(static_cast<double>(u_cat) / gamma_, best));
  return CategoricalValue::one_hot(label);
}

std::pair<std::filesystem::path, std::filesystem::path> export_training_set(
    std::span<const ValueExample> examples, double split_fraction, std::uint64_t seed,
    const std::filesystem::path& out_dir) {
  if (split_fraction <= 0.0 || split_fraction >= 1.0)
    throw std::invalid_argument("split_fraction must be in (0, 1)");

  std::vector<std::string> problems;
  std::set<std::string> seen;
  for (const ValueExample& ex : examples) {
    if (seen.insert(ex.problem_id).second) problems.push_back(ex.problem_id);
  }
  if (problems.size() < 2)
    throw std::invalid_argument("need at least 2 distinct problems to split");

  std::sort(problems.begin(), problems.end());
  std::mt19937_64 rng(seed);
  std::shuffle(problems.begin(), problems.end(), rng);

  std::size_t train_count = static_cast<std::size_t>(
      std::floor(split_fraction * static_cast<double>(problems.size())));
  train_count = std::clamp<std::size_t>(train_count, 1, problems.size() - 1);
  std::set<std::string> train_problems(problems.begin(), problems.begin() + train_count);

  std::filesystem::create_directories(out_dir);
  std::filesystem::path train_path = out_dir / "value_train.jsonl";
  std::filesystem::path val_path = out_dir / "value_val.jsonl";
  std::ofstream train(train_path, std::ios::binary);
  std::ofstream val(val_path, std::ios::binary);
  if (!train || !val) throw std::runtime_error("cannot write dataset files in " + out_dir.string());

  for (const ValueExample& ex : examples) {
    nlohmann::json j{{"problem_id", ex.problem_id},
                     {"prefix_render", ex.prefix_render},
                     {"u_cat", ex.u_cat},
                     {"remaining_rounds", ex.remaining_rounds},
                     {"label", ex.label}};
    (train_problems.count(ex.problem_id) ? train : val) << j.dump() << "\n";
  }
  return {train_path, val_path};
}

}  // namespace maxcode
