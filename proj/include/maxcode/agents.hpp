#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "maxcode/core.hpp"
#include "maxcode/landscape.hpp"
#include "maxcode/prompts.hpp"

namespace maxcode {

struct AgentRequest {
  std::string system;
  std::string user;
  double temperature = 0.6;
  int max_tokens = 4096;
  int n = 1;
  std::optional<std::uint64_t> seed;
};

// Policy contract: emits n candidate code texts. Implementations must be
// safe for concurrent calls. Scripted agents read the structured context,
// remote agents read the rendered request.
class PolicyAgent {
 public:
  virtual ~PolicyAgent() = default;
  virtual std::vector<std::string> generate(const AgentRequest& request,
                                            const PromptContext& ctx) = 0;
  virtual std::string id() const = 0;
};

class CriticAgent {
 public:
  virtual ~CriticAgent() = default;
  virtual std::string critique(const AgentRequest& request, const PromptContext& ctx) = 0;
  virtual std::string id() const = 0;
};

// Enforces the n-candidate contract around an agent call.
std::vector<std::string> generate_candidates(PolicyAgent& agent, const AgentRequest& request,
                                             const PromptContext& ctx);

// First fenced code block of a completion, else the whole completion.
std::string extract_code_block(const std::string& completion);

// Deterministic policy step over the simulator grammar. With best-perf
// information in the context the step is hill-climbing-aware (mutates the
// best ancestor's parameters); otherwise it walks from the current node.
std::string scripted_policy_step(const Landscape& landscape, const PromptContext& ctx,
                                 std::uint64_t rng_seed);

class ScriptedPolicyAgent : public PolicyAgent {
 public:
  explicit ScriptedPolicyAgent(const Landscape& landscape) : landscape_(&landscape) {}
  std::vector<std::string> generate(const AgentRequest& request,
                                    const PromptContext& ctx) override;
  std::string id() const override { return "scripted-policy"; }

 private:
  const Landscape* landscape_;
};

// Deterministic diagnosis text derived from the current state's feedback.
class ScriptedCriticAgent : public CriticAgent {
 public:
  std::string critique(const AgentRequest& request, const PromptContext& ctx) override;
  std::string id() const override { return "scripted-critic"; }
};

}  // namespace maxcode
