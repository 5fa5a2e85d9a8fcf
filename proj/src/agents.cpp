#include "maxcode/agents.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <stdexcept>

#include "maxcode/util.hpp"

namespace maxcode {

std::vector<std::string> generate_candidates(PolicyAgent& agent, const AgentRequest& request,
                                             const PromptContext& ctx) {
  if (request.n < 1) throw std::invalid_argument("candidate count n must be >= 1");
  std::vector<std::string> out = agent.generate(request, ctx);
  if (static_cast<int>(out.size()) != request.n)
    throw std::runtime_error("agent " + agent.id() + " returned " + std::to_string(out.size()) +
                             " candidates, expected " + std::to_string(request.n));
  return out;
}

std::string extract_code_block(const std::string& completion) {
  std::size_t open = completion.find("```");
  if (open == std::string::npos) return completion;
  std::size_t body = completion.find('\n', open);
  if (body == std::string::npos) return "";
  ++body;
  std::size_t close = completion.find("```", body);
  if (close == std::string::npos) close = completion.size();
  std::string block = completion.substr(body, close - body);
  while (!block.empty() && block.back() == '\n') block.pop_back();
  return block;
}

namespace {

std::vector<int> context_base_params(const Landscape& landscape, const PromptContext& ctx) {
  if (ctx.best_node) {
    if (auto p = parse_params(ctx.best_node->code, landscape.dim)) return *p;
  }
  if (ctx.current && !ctx.current->is_root()) {
    if (auto p = parse_params(ctx.current->code, landscape.dim)) return *p;
  }
  return landscape.start_params();
}

}  // namespace

std::string scripted_policy_step(const Landscape& landscape, const PromptContext& ctx,
                                 std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  int hi = landscape.range - 1;

  if (!ctx.current || ctx.current->is_root()) {
    // Initial proposal: the landscape's start vector with a small jitter.
    std::vector<int> p = landscape.start_params();
    std::uniform_int_distribution<int> jitter(-2, 2);
    for (int& x : p) x = std::clamp(x + jitter(rng), 0, hi);
    return format_params(p);
  }

  std::vector<int> p = context_base_params(landscape, ctx);
  std::uniform_int_distribution<int> coord(0, landscape.dim - 1);
  std::uniform_int_distribution<int> magnitude(1, 3);
  std::bernoulli_distribution negative(0.5);
  int i = coord(rng);
  int step = magnitude(rng);
  if (negative(rng)) step = -step;
  p[i] = std::clamp(p[i] + step, 0, hi);
  return format_params(p);
}

std::vector<std::string> ScriptedPolicyAgent::generate(const AgentRequest& request,
                                                       const PromptContext& ctx) {
  std::vector<std::string> out;
  out.reserve(request.n);
  std::uint64_t base = request.seed.value_or(0);
  for (int i = 0; i < request.n; ++i) {
    out.push_back(scripted_policy_step(*landscape_, ctx, derive_seed(base, "candidate", i)));
  }
  return out;
}

std::string ScriptedCriticAgent::critique(const AgentRequest& request, const PromptContext& ctx) {
  (void)request;
  if (!ctx.current || !ctx.current->evaluated())
    return "No executed attempt to critique yet; propose an initial parameter vector.";
  const ExecFeedback& fb = *ctx.current->feedback;
  std::ostringstream os;
  if (!fb.compiled) {
    os << "Diagnosis: the attempt does not parse (" << fb.correctness_detail << "). "
       << "Suggestion: emit one integer assignment per parameter, e.g. p0=3; p1=7.";
  } else if (!fb.correct) {
    os << "Diagnosis: the attempt fails the checks (" << fb.correctness_detail << "). "
       << "Suggestion: move to a nearby parameter region; small shifts in one coordinate often "
          "restore correctness.";
  } else {
    os << "Diagnosis: correct at speedup " << fb.speedup << "; best so far u=" << ctx.u_raw
       << ". Suggestion: take small steps around the best-performing parameters to climb "
          "further.";
  }
  return os.str();
}

}  // namespace maxcode
