#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "maxcode/core.hpp"

namespace maxcode {

// Deterministic synthetic optimization landscape over integer parameter
// vectors. A wide basin peaks at a hidden target vector (where the value
// clamps to optimum_speedup exactly) with a few narrow secondary bumps, and
// a smooth constraint field decides correctness. Everything derives from the
// seed, so identical (seed, code) pairs always produce identical feedback.
struct Landscape {
  std::int64_t seed = 0;
  int dim = 2;
  int range = 12;  // each parameter lives in [0, range)
  double optimum_speedup = 8.0;
  double correctness_threshold = 0.25;

  // hidden, seed-derived
  std::vector<int> target;
  double sigma_main = 0.0;
  struct Bump {
    std::vector<double> center;
    double amp = 0.0;
    double sigma = 1.0;
  };
  std::vector<Bump> bumps;
  std::vector<int> constraint_weights;
  double constraint_freq = 0.5;
  double constraint_phase = 0.0;

  static Landscape make(std::int64_t seed, int dim = 2, int range = 12,
                        double optimum_speedup = 8.0,
                        double correctness_threshold = 0.25);

  double raw_value(std::span<const int> params) const;
  double clamped_value(std::span<const int> params) const;
  // Constraint field in [0, 1]; correct iff >= correctness_threshold.
  double constraint_field(std::span<const int> params) const;
  bool constraint_ok(std::span<const int> params) const;

  // Seed-derived start vector, the landscape's "original program".
  std::vector<int> start_params() const;
};

// Candidate grammar: integer assignments "p0=3; p1=7", separated by
// semicolons or newlines, one per dimension.
std::optional<std::vector<int>> parse_params(const std::string& code, int dim);
std::string format_params(std::span<const int> params);

ExecFeedback simulate_evaluate(const Landscape& landscape, const std::string& code);

struct OracleResult {
  std::vector<int> params;
  double speedup = 0.0;
};

// Exhaustive enumeration over the inclusive per-dimension bounds; returns the
// correct point with maximal speedup (first in lexicographic order on ties).
// Test-side oracle only.
OracleResult oracle_optimum(const Landscape& landscape,
                            const std::vector<std::pair<int, int>>& bounds);

}  // namespace maxcode
