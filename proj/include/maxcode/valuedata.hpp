#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "maxcode/core.hpp"
#include "maxcode/landscape.hpp"
#include "maxcode/prompts.hpp"

namespace maxcode {

// Normalized 5-way distribution over reward categories.
struct CategoricalValue {
  std::array<double, 5> probabilities{};

  static CategoricalValue one_hot(int category);
  static CategoricalValue uniform();
  bool normalized(double tol = 1e-9) const;
};

// Sum of i * p_i, in [0, 4].
double expected_category(const CategoricalValue& v);

class ValuePredictor {
 public:
  virtual ~ValuePredictor() = default;
  virtual CategoricalValue predict(const std::string& prefix_render, int u_cat,
                                   int remaining_rounds) = 0;
  virtual std::string id() const = 0;
};

struct ValueExample {
  std::string problem_id;
  std::string prefix_render;
  int u_cat = 0;
  int remaining_rounds = 0;
  int label = 0;
};

struct ExtractResult {
  std::vector<ValueExample> examples;
  int skipped_missing_feedback = 0;
};

// One example per evaluated node at depth <= max_prefix_len: u_cat via the
// gamma^(k-1) recurrence over the prefix, label maximized over every realized
// root-to-leaf continuation, remaining_rounds = horizon - prefix length.
ExtractResult extract_examples(const SearchTree& tree, const ProblemSpec& problem,
                               const PromptTemplates& templates, const RewardBins& bins,
                               double gamma, int horizon, int max_prefix_len);

// Brute-force predictor for the simulator: enumerates every grid point
// reachable from the rendered attempt within remaining_rounds single-
// coordinate moves of magnitude <= 3 and returns a one-hot at the resulting
// value target.
class OracleValuePredictor : public ValuePredictor {
 public:
  OracleValuePredictor(Landscape landscape, RewardBins bins, double gamma)
      : landscape_(std::move(landscape)), bins_(bins), gamma_(gamma) {}
  CategoricalValue predict(const std::string& prefix_render, int u_cat,
                           int remaining_rounds) override;
  std::string id() const override { return "oracle-predictor"; }

 private:
  Landscape landscape_;
  RewardBins bins_;
  double gamma_;
};

// Last fenced code block of a render (the most recent attempt).
std::string last_code_block(const std::string& render);

// Splits by problem (floor(split_fraction * #problems) train problems, at
// least one per side) and writes line-delimited JSON records.
std::pair<std::filesystem::path, std::filesystem::path> export_training_set(
    std::span<const ValueExample> examples, double split_fraction, std::uint64_t seed,
    const std::filesystem::path& out_dir);

}  // namespace maxcode
