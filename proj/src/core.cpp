#include "maxcode/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "maxcode/util.hpp"

namespace maxcode {

std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view label,
                          std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = fnv1a_u64(run_seed);
  h = fnv1a(label, h);
  h = fnv1a_u64(a, h);
  h = fnv1a_u64(b, h);
  h = fnv1a_u64(c, h);
  return h;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(s.substr(start));
      break;
    }
    parts.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string normalize_output(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::string line;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == '\n') {
      while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
        line.pop_back();
      out += line;
      if (i != s.size()) out += '\n';
      line.clear();
    } else {
      line += s[i];
    }
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

void ProblemSpec::validate() const {
  if (id.empty()) throw std::invalid_argument("problem id empty");
  if (test_cases.empty()) throw std::invalid_argument("problem '" + id + "': no test cases");
  if (!bins.valid()) throw std::invalid_argument("problem '" + id + "': bins not strictly increasing above 100");
  if (timeout_ms <= 0) throw std::invalid_argument("problem '" + id + "': timeout_ms must be positive");
  if (baseline_time_ms && *baseline_time_ms <= 0.0)
    throw std::invalid_argument("problem '" + id + "': baseline_time_ms must be positive");
}

ExecFeedback ExecFeedback::make(bool compiled, bool correct,
                                std::string correctness_detail,
                                std::optional<double> time_ms, double speedup,
                                std::string perf_detail) {
  ExecFeedback fb;
  fb.compiled = compiled;
  fb.correct = correct && compiled;
  fb.correctness_detail = std::move(correctness_detail);
  fb.time_ms = compiled ? time_ms : std::nullopt;
  fb.speedup = fb.correct ? std::max(0.0, speedup) : 0.0;
  fb.perf_detail = std::move(perf_detail);
  return fb;
}

std::string critic_variant_name(CriticVariant v) {
  switch (v) {
    case CriticVariant::Critique: return "Critique";
    case CriticVariant::CritiqueBestPerf: return "CritiqueBestPerf";
    case CriticVariant::TrajCritique: return "TrajCritique";
    case CriticVariant::TrajCritiqueBestPerf: return "TrajCritiqueBestPerf";
  }
  throw std::logic_error("unknown critic variant");
}

CriticVariant critic_variant_from_name(const std::string& name) {
  if (name == "Critique") return CriticVariant::Critique;
  if (name == "CritiqueBestPerf") return CriticVariant::CritiqueBestPerf;
  if (name == "TrajCritique") return CriticVariant::TrajCritique;
  if (name == "TrajCritiqueBestPerf") return CriticVariant::TrajCritiqueBestPerf;
  throw std::invalid_argument("unknown critic variant: " + name);
}

SearchTree::SearchTree(std::string run_id, std::string method, std::int64_t seed, double gamma)
    : run_id_(std::move(run_id)), method_(std::move(method)), seed_(seed), gamma_(gamma) {
  if (gamma_ <= 0.0 || gamma_ > 1.0) throw std::invalid_argument("gamma must be in (0, 1]");
}

std::string SearchTree::next_node_id(std::int64_t created_order) const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "n%06lld", static_cast<long long>(created_order));
  return buf;
}

SearchState& SearchTree::add_root(const std::string& problem_id, const std::string& code,
                                  std::int64_t created_order) {
  if (!nodes_.empty()) throw std::logic_error("tree already has a root");
  SearchState s;
  s.node_id = next_node_id(created_order);
  s.problem_id = problem_id;
  s.depth = 0;
  s.code = code;
  s.u_raw = 1.0;
  s.u_cat = 0;
  s.created_order = created_order;
  index_[s.node_id] = nodes_.size();
  nodes_.push_back(std::move(s));
  return nodes_.back();
}

SearchState& SearchTree::add_child(const std::string& parent_id, const std::string& code,
                                   const ExecFeedback& feedback, const RewardBins& bins,
                                   std::int64_t created_order) {
  const SearchState& parent = get(parent_id);
  SearchState s;
  s.node_id = next_node_id(created_order);
  s.parent_id = parent_id;
  s.problem_id = parent.problem_id;
  s.depth = parent.depth + 1;
  s.code = code;
  s.feedback = feedback;
  s.created_order = created_order;
  s.u_raw = update_best_so_far(parent.u_raw, feedback.speedup, s.depth, gamma_);

  // u_cat follows the gamma^(k-1) convention over the path's binned rewards.
  double best = 0.0;
  std::vector<const SearchState*> path = path_to(parent_id);
  double w = 1.0;
  for (const SearchState* node : path) {
    if (node->is_root()) continue;
    best = std::max(best, w * bin_speedup(node->feedback->speedup, node->feedback->correct, bins));
    w *= gamma_;
  }
  best = std::max(best, w * bin_speedup(feedback.speedup, feedback.correct, bins));
  s.u_cat = floor_to_category(best);

  index_[s.node_id] = nodes_.size();
  nodes_.push_back(std::move(s));
  return nodes_.back();
}

SearchState& SearchTree::add_raw(SearchState state) {
  if (state.parent_id) {
    if (!has(*state.parent_id))
      throw std::invalid_argument("node " + state.node_id + " references missing parent " + *state.parent_id);
  } else if (!nodes_.empty()) {
    throw std::invalid_argument("second root " + state.node_id);
  }
  if (has(state.node_id)) throw std::invalid_argument("duplicate node id " + state.node_id);
  index_[state.node_id] = nodes_.size();
  nodes_.push_back(std::move(state));
  return nodes_.back();
}

void SearchTree::attach_critique(const std::string& node_id, Critique critique) {
  nodes_[index_.at(node_id)].critique = std::move(critique);
}

bool SearchTree::has(const std::string& node_id) const { return index_.count(node_id) > 0; }

const SearchState& SearchTree::get(const std::string& node_id) const {
  auto it = index_.find(node_id);
  if (it == index_.end()) throw std::out_of_range("no node " + node_id);
  return nodes_[it->second];
}

const SearchState& SearchTree::root() const {
  if (nodes_.empty()) throw std::runtime_error("empty tree");
  return nodes_.front();
}

std::vector<const SearchState*> SearchTree::path_to(const std::string& node_id) const {
  std::vector<const SearchState*> path;
  const SearchState* cur = &get(node_id);
  while (true) {
    path.push_back(cur);
    if (!cur->parent_id) break;
    cur = &get(*cur->parent_id);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

int floor_to_category(double v) {
  int c = static_cast<int>(std::floor(v + 1e-12));
  return std::clamp(c, 0, 4);
}

double max_reward_return(std::span<const double> rewards, double gamma) {
  if (rewards.empty()) throw std::invalid_argument("empty trajectory");
  double best = -1.0;
  double w = 1.0;
  for (double r : rewards) {
    best = std::max(best, w * r);
    w *= gamma;
  }
  return best;
}

double update_best_so_far(double u_prev, double reward, int depth, double gamma) {
  return std::max(u_prev, std::pow(gamma, depth) * reward);
}

int bin_speedup(double speedup, bool correct, const RewardBins& bins) {
  if (speedup < 0.0) throw std::invalid_argument("negative speedup");
  if (!correct) return 0;
  // Compare in ratio space so stated percent boundaries land exactly.
  if (speedup <= 1.0) return 0;
  if (speedup <= bins.s1 / 100.0) return 1;
  if (speedup <= bins.s2 / 100.0) return 2;
  if (speedup <= bins.s3 / 100.0) return 3;
  return 4;
}

int compute_value_target(int u_cat, std::span<const int> future_binned, double gamma) {
  if (future_binned.empty()) throw std::invalid_argument("empty future sequence");
  double best = static_cast<double>(u_cat) / gamma;
  double w = 1.0;
  for (int r : future_binned) {
    best = std::max(best, w * static_cast<double>(r));
    w *= gamma;
  }
  return floor_to_category(best);
}

const SearchState& select_best_node(const SearchTree& tree) {
  if (tree.empty()) throw std::runtime_error("empty tree");
  const SearchState* best = nullptr;
  double best_score = 0.0;
  for (const SearchState& node : tree.nodes()) {
    if (!node.evaluated() || !node.feedback->correct) continue;
    double score = std::pow(tree.gamma(), node.depth - 1) * node.feedback->speedup;
    if (!best || score > best_score) {  // creation order breaks ties
      best = &node;
      best_score = score;
    }
  }
  return best ? *best : tree.root();
}

}  // namespace maxcode
