#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "maxcode/core.hpp"

namespace maxcode {

struct ProblemMetrics {
  double correct_rate = 0.0;
  double fast1_rate = 0.0;
  double max_speedup = 1.0;
  // Same correctness rate restricted to the root-to-best selected path;
  // reported as a secondary column.
  double selected_path_correct_rate = 0.0;
};

struct MethodResults {
  std::string method;
  std::map<std::string, double> per_problem_max_speedup;
  std::map<std::string, double> per_problem_correct_rate;
  std::map<std::string, double> per_problem_fast1;
};

// correct_rate and fast1 over every evaluated node; max speedup over correct
// nodes with fallback 1.0 (the original program always exists).
ProblemMetrics compute_problem_metrics(const SearchTree& tree);

double median(std::vector<double> xs);
double median_of_max(const MethodResults& results);

// Fractional ranking per problem (rank 1 = best, ties share the mean of the
// occupied ranks), averaged over problems. Throws when methods disagree on
// the problem set, listing the symmetric difference.
std::map<std::string, double> average_rank(
    const std::map<std::string, std::map<std::string, double>>& table);

// Median-across-trees of the best correct speedup at depth <= d, for each
// depth from 1 to max_depth (deduced from the trees when 0).
std::vector<std::pair<int, double>> scaling_curve(const std::vector<const SearchTree*>& trees,
                                                  int max_depth = 0);

}  // namespace maxcode
