#include "maxcode/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "maxcode/util.hpp"

namespace maxcode {

namespace {

// Nominal baseline runtime used to turn a landscape value into a fake
// wall-clock reading.
constexpr double kNominalBaselineMs = 100.0;

double sq_dist(std::span<const int> p, std::span<const double> c) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double diff = static_cast<double>(p[i]) - c[i];
    d += diff * diff;
  }
  return d;
}

}  // namespace

Landscape Landscape::make(std::int64_t seed, int dim, int range,
                          double optimum_speedup, double correctness_threshold) {
  if (dim < 1) throw std::invalid_argument("landscape dim must be positive");
  if (range < 2) throw std::invalid_argument("landscape range must be >= 2");
  if (optimum_speedup <= 0.0) throw std::invalid_argument("optimum_speedup must be positive");

  Landscape l;
  l.seed = seed;
  l.dim = dim;
  l.range = range;
  l.optimum_speedup = optimum_speedup;
  l.correctness_threshold = correctness_threshold;

  std::mt19937_64 rng(static_cast<std::uint64_t>(seed) * 0x9e3779b97f4a7c15ull + 0x1234abcdull);
  std::uniform_int_distribution<int> coord(0, range - 1);
  l.target.resize(dim);
  for (int& t : l.target) t = coord(rng);
  l.sigma_main = 0.55 * range;

  std::uniform_real_distribution<double> amp(0.08, 0.18);
  std::uniform_real_distribution<double> bump_sigma(0.8, 1.4);
  std::uniform_real_distribution<double> center(0.0, range - 1.0);
  int nbumps = 3;
  for (int j = 0; j < nbumps; ++j) {
    Bump b;
    b.center.resize(dim);
    for (double& c : b.center) c = center(rng);
    b.amp = amp(rng) * optimum_speedup;
    b.sigma = bump_sigma(rng);
    l.bumps.push_back(std::move(b));
  }

  std::uniform_int_distribution<int> weight(1, 3);
  l.constraint_weights.resize(dim);
  for (int& w : l.constraint_weights) w = weight(rng);
  std::uniform_real_distribution<double> freq(0.35, 0.75);
  l.constraint_freq = freq(rng);
  // Phase chosen so the target itself always satisfies the constraint.
  double at_target = 0.0;
  for (int i = 0; i < dim; ++i) at_target += l.constraint_weights[i] * l.target[i];
  l.constraint_phase = std::numbers::pi / 2.0 - l.constraint_freq * at_target;
  return l;
}

double Landscape::raw_value(std::span<const int> params) const {
  double d = 0.0;
  for (int i = 0; i < dim; ++i) {
    double diff = static_cast<double>(params[i]) - static_cast<double>(target[i]);
    d += diff * diff;
  }
  double v = optimum_speedup * std::exp(-d / (2.0 * sigma_main * sigma_main));
  for (const Bump& b : bumps) {
    v += b.amp * std::exp(-sq_dist(params, b.center) / (2.0 * b.sigma * b.sigma));
  }
  return v;
}

double Landscape::clamped_value(std::span<const int> params) const {
  return std::clamp(raw_value(params), 0.0, optimum_speedup);
}

double Landscape::constraint_field(std::span<const int> params) const {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += constraint_weights[i] * params[i];
  return 0.5 + 0.5 * std::sin(constraint_freq * s + constraint_phase);
}

bool Landscape::constraint_ok(std::span<const int> params) const {
  return constraint_field(params) >= correctness_threshold;
}

std::vector<int> Landscape::start_params() const {
  std::mt19937_64 rng(static_cast<std::uint64_t>(seed) * 0xda942042e4dd58b5ull + 0x77ull);
  std::uniform_int_distribution<int> coord(0, range - 1);
  std::vector<int> p(dim);
  for (int& x : p) x = coord(rng);
  return p;
}

std::optional<std::vector<int>> parse_params(const std::string& code, int dim) {
  std::vector<std::optional<int>> values(dim);
  int seen = 0;
  std::string token;
  std::vector<std::string> tokens;
  for (char c : code) {
    if (c == ';' || c == '\n') {
      tokens.push_back(token);
      token.clear();
    } else {
      token += c;
    }
  }
  tokens.push_back(token);
  for (const std::string& raw : tokens) {
    std::string t = trim(raw);
    if (t.empty()) continue;
    if (t.size() < 4 || t[0] != 'p') return std::nullopt;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos) return std::nullopt;
    int idx = 0;
    try {
      std::size_t used = 0;
      idx = std::stoi(t.substr(1, eq - 1), &used);
      if (used != eq - 1) return std::nullopt;
    } catch (const std::exception&) {
      return std::nullopt;
    }
    if (idx < 0 || idx >= dim) return std::nullopt;
    if (values[idx]) return std::nullopt;  // duplicate assignment
    int val = 0;
    try {
      std::size_t used = 0;
      std::string vs = trim(t.substr(eq + 1));
      val = std::stoi(vs, &used);
      if (used != vs.size()) return std::nullopt;
    } catch (const std::exception&) {
      return std::nullopt;
    }
    values[idx] = std::clamp(val, -1000000, 1000000);
    ++seen;
  }
  if (seen != dim) return std::nullopt;
  std::vector<int> out(dim);
  for (int i = 0; i < dim; ++i) out[i] = *values[i];
  return out;
}

std::string format_params(std::span<const int> params) {
  std::ostringstream os;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) os << "; ";
    os << 'p' << i << '=' << params[i];
  }
  return os.str();
}

ExecFeedback simulate_evaluate(const Landscape& landscape, const std::string& code) {
  auto params = parse_params(code, landscape.dim);
  if (!params) {
    return ExecFeedback::make(false, false,
                              "parse error: expected " + std::to_string(landscape.dim) +
                                  " integer assignments pK=V",
                              std::nullopt, 0.0, "");
  }
  double value = landscape.clamped_value(*params);
  bool correct = landscape.constraint_ok(*params);
  double time_ms = kNominalBaselineMs / std::max(0.01, value);
  std::ostringstream perf;
  perf << "run_ms=[" << time_ms << "]";
  if (correct) {
    return ExecFeedback::make(true, true, "", time_ms, value, perf.str());
  }
  std::ostringstream detail;
  detail << "output mismatch on case 1 at params (" << format_params(*params) << ")";
  return ExecFeedback::make(true, false, detail.str(), time_ms, 0.0, perf.str());
}

OracleResult oracle_optimum(const Landscape& landscape,
                            const std::vector<std::pair<int, int>>& bounds) {
  if (static_cast<int>(bounds.size()) != landscape.dim)
    throw std::invalid_argument("bounds dimension mismatch");
  long long total = 1;
  for (auto [lo, hi] : bounds) {
    if (hi < lo) throw std::invalid_argument("empty bound range");
    total *= (hi - lo + 1);
    if (total > 1000000) throw std::invalid_argument("grid too large");
  }

  std::vector<int> point(landscape.dim);
  for (int i = 0; i < landscape.dim; ++i) point[i] = bounds[i].first;

  bool found = false;
  OracleResult best;
  while (true) {
    if (landscape.constraint_ok(point)) {
      double v = landscape.clamped_value(point);
      if (!found || v > best.speedup) {
        best.params = point;
        best.speedup = v;
        found = true;
      }
    }
    int i = landscape.dim - 1;
    while (i >= 0) {
      if (point[i] < bounds[i].second) {
        ++point[i];
        break;
      }
      point[i] = bounds[i].first;
      --i;
    }
    if (i < 0) break;
  }
  if (!found) throw std::runtime_error("no feasible point");
  return best;
}

}  // namespace maxcode
