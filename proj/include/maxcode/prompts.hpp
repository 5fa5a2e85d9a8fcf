#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "maxcode/core.hpp"

namespace maxcode {

// The eight observation compositions a generator prompt can use.
enum class GeneratorVariant {
  Base,
  BestPerf,
  Critique,
  CritiqueBestPerf,
  Traj,
  TrajBestPerf,
  TrajCritique,
  TrajCritiqueBestPerf,
};

struct VariantFlags {
  bool uses_trajectory = false;
  bool uses_best_perf = false;
  bool uses_critique = false;
};

VariantFlags flags_of(GeneratorVariant v);
std::string variant_name(GeneratorVariant v);
GeneratorVariant variant_from_name(const std::string& name);
const std::vector<GeneratorVariant>& all_generator_variants();

// Critic template matching a critique-using generator variant. Throws for
// variants that do not use critiques.
CriticVariant critic_variant_for(GeneratorVariant v);
bool critic_uses_trajectory(CriticVariant v);
bool critic_uses_best_perf(CriticVariant v);
const std::vector<CriticVariant>& all_critic_variants();

// Everything a prompt can draw on: the problem, the node whose context we
// are rendering, its root-to-current ancestor path, the best-performing
// node on that path, and the current best discounted reward.
struct PromptContext {
  const ProblemSpec* problem = nullptr;
  const SearchState* current = nullptr;
  std::vector<const SearchState*> ancestors;  // root -> current, inclusive
  const SearchState* best_node = nullptr;
  double u_raw = 1.0;

  void validate() const;  // path consistency
};

struct RenderedPrompt {
  std::string system;
  std::string user;
  std::string full() const { return system + "\n\n" + user; }
};

// Template set: one editable text file per variant, with a system part and a
// user layout split by a ===USER=== line. Placeholders: {problem}, {best},
// {trajectory}, {attempt}, {critique}, and for the reward template also
// {u_cat} and {remaining_rounds}.
class PromptTemplates {
 public:
  static const PromptTemplates& builtin();
  // Files in `dir` override the builtin set, one by one.
  static PromptTemplates load_dir(const std::filesystem::path& dir);
  // Writes the builtin set out as editable files.
  static void write_builtin(const std::filesystem::path& dir);

  const std::string& generator(GeneratorVariant v) const;
  const std::string& critic(CriticVariant v) const;
  const std::string& reward_model() const { return reward_; }

  static std::string generator_filename(GeneratorVariant v);
  static std::string critic_filename(CriticVariant v);
  static std::string reward_filename() { return "reward_model.txt"; }

 private:
  std::map<GeneratorVariant, std::string> generators_;
  std::map<CriticVariant, std::string> critics_;
  std::string reward_;
};

RenderedPrompt render_generator_prompt(const PromptTemplates& templates, GeneratorVariant variant,
                                       const PromptContext& ctx);
RenderedPrompt render_critic_prompt(const PromptTemplates& templates, CriticVariant variant,
                                    const PromptContext& ctx);

// Reward-model rendering shared by training extraction and search-time
// scoring: evaluated prefix rendered with feedback, the most recent attempt
// rendered without it.
RenderedPrompt render_reward_prompt(const PromptTemplates& templates, const ProblemSpec& problem,
                                    const std::vector<const SearchState*>& evaluated_prefix,
                                    const std::string& pending_code, int u_cat,
                                    int remaining_rounds);

std::uint64_t prompt_hash(const RenderedPrompt& prompt);

// Section markers, exposed so tests and tools can count sections.
inline constexpr const char* kProblemMarker = "## Problem";
inline constexpr const char* kBestMarker = "## Best attempt so far";
inline constexpr const char* kAttemptMarker = "## Attempt";
inline constexpr const char* kCritiqueMarker = "## Critique";

}  // namespace maxcode
