#include "maxcode/metrics.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace maxcode {

ProblemMetrics compute_problem_metrics(const SearchTree& tree) {
  int evaluated = 0, correct = 0, fast1 = 0;
  double max_speedup = 1.0;
  bool any_correct = false;
  for (const SearchState& node : tree.nodes()) {
    if (!node.evaluated()) continue;
    ++evaluated;
    if (node.feedback->correct) {
      ++correct;
      any_correct = true;
      max_speedup = std::max(max_speedup, node.feedback->speedup);
      if (node.feedback->speedup > 1.0) ++fast1;
    }
  }
  if (evaluated == 0) throw std::invalid_argument("tree has no evaluated node");

  ProblemMetrics m;
  m.correct_rate = static_cast<double>(correct) / evaluated;
  m.fast1_rate = static_cast<double>(fast1) / evaluated;
  m.max_speedup = any_correct ? std::max(1.0, max_speedup) : 1.0;

  const SearchState& best = select_best_node(tree);
  int path_evaluated = 0, path_correct = 0;
  for (const SearchState* node : tree.path_to(best.node_id)) {
    if (!node->evaluated()) continue;
    ++path_evaluated;
    if (node->feedback->correct) ++path_correct;
  }
  m.selected_path_correct_rate =
      path_evaluated ? static_cast<double>(path_correct) / path_evaluated : 0.0;
  return m;
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median of empty set");
  std::sort(xs.begin(), xs.end());
  std::size_t n = xs.size();
  if (n % 2 == 1) return xs[n / 2];
  return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double median_of_max(const MethodResults& results) {
  std::vector<double> values;
  values.reserve(results.per_problem_max_speedup.size());
  for (const auto& [_, v] : results.per_problem_max_speedup) values.push_back(v);
  return median(std::move(values));
}

std::map<std::string, double> average_rank(
    const std::map<std::string, std::map<std::string, double>>& table) {
  if (table.empty()) throw std::invalid_argument("empty method table");

  const auto& reference = table.begin()->second;
  std::set<std::string> problems;
  for (const auto& [_, v] : reference) problems.insert(_);
  for (const auto& [method, per_problem] : table) {
    std::set<std::string> mine;
    for (const auto& [pid, _] : per_problem) mine.insert(pid);
    if (mine != problems) {
      std::vector<std::string> diff;
      std::set_symmetric_difference(problems.begin(), problems.end(), mine.begin(), mine.end(),
                                    std::back_inserter(diff));
      std::ostringstream os;
      os << "method " << method << " problem set mismatch:";
      for (const std::string& d : diff) os << ' ' << d;
      throw std::invalid_argument(os.str());
    }
  }
  if (problems.empty()) throw std::invalid_argument("no problems in table");

  std::map<std::string, double> rank_sum;
  for (const std::string& pid : problems) {
    // Sort methods by descending speedup, then assign fractional ranks.
    std::vector<std::pair<double, std::string>> row;
    for (const auto& [method, per_problem] : table)
      row.emplace_back(per_problem.at(pid), method);
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::size_t i = 0;
    while (i < row.size()) {
      std::size_t j = i;
      while (j + 1 < row.size() && row[j + 1].first == row[i].first) ++j;
      double shared = 0.5 * static_cast<double>((i + 1) + (j + 1));
      for (std::size_t t = i; t <= j; ++t) rank_sum[row[t].second] += shared;
      i = j + 1;
    }
  }

  std::map<std::string, double> out;
  for (auto& [method, sum] : rank_sum) out[method] = sum / static_cast<double>(problems.size());
  return out;
}

std::vector<std::pair<int, double>> scaling_curve(const std::vector<const SearchTree*>& trees,
                                                  int max_depth) {
  if (trees.empty()) throw std::invalid_argument("no trees for scaling curve");
  if (max_depth <= 0) {
    for (const SearchTree* tree : trees)
      for (const SearchState& node : tree->nodes()) max_depth = std::max(max_depth, node.depth);
    if (max_depth <= 0) throw std::invalid_argument("trees contain no non-root nodes");
  }

  std::vector<std::pair<int, double>> curve;
  for (int d = 1; d <= max_depth; ++d) {
    std::vector<double> per_tree;
    for (const SearchTree* tree : trees) {
      double best = 1.0;
      for (const SearchState& node : tree->nodes()) {
        if (node.depth > d || !node.evaluated() || !node.feedback->correct) continue;
        best = std::max(best, node.feedback->speedup);
      }
      per_tree.push_back(best);
    }
    curve.emplace_back(d, median(std::move(per_tree)));
  }
  return curve;
}

}  // namespace maxcode
