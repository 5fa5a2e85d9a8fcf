#include "maxcode/prompts.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "maxcode/util.hpp"

namespace maxcode {

namespace {

// --- builtin template texts -------------------------------------------------
// Kernel-optimization defaults; the wording is editable per deployment via
// the template files (see PromptTemplates::write_builtin).

const char* kGeneratorPreamble =
    "You write custom CUDA kernels to replace the pytorch operators in the given architecture "
    "to get speedups.\n"
    "You have complete freedom to choose the set of operators you want to replace. You may make "
    "the decision to replace some operators with custom CUDA kernels and leave others unchanged. "
    "You may replace multiple operators with custom implementations, consider operator fusion "
    "opportunities (combining multiple operators into a single kernel, for example, combining "
    "matmul+relu), or algorithmic changes (such as online softmax). You are only limited by your "
    "imagination.\n";

const char* kRefineDirectives =
    "Specifically, if your optimization failed to compile (i.e. 'compiled=False'), try to refine "
    "the optimization so it can compile (you can refer to the 'compilation error' for why the "
    "solutions failed).\n"
    "If your optimization compiled successfully but is incorrect based on input-output test cases "
    "(i.e. 'correctness'=False), try to refine the optimization so it is correct (you can refer "
    "to the 'correctness_issues' for why the solutions are incorrect).\n"
    "If your optimization compiled successfully and is correct, try to further optimize it to "
    "reduce the runtime.\n";

const char* kRefineDirectivesBest =
    "Specifically, if your optimization failed to compile (i.e. 'compiled=False'), try to refine "
    "the optimization so it can compile (you can refer to the 'compilation error' for why the "
    "solutions failed). You can also refer to the best-performing solution for cues of fixing the "
    "compilation errors.\n"
    "If your optimization compiled successfully but is incorrect based on input-output test cases "
    "(i.e. 'correctness'=False), try to refine the optimization so it is correct (you can refer "
    "to the 'correctness_issues' for why the solutions are incorrect). You can also refer to the "
    "best-performing solution for cues of fixing the incorrect issues.\n"
    "If your optimization compiled successfully and is correct, try to further optimize it to "
    "reduce the runtime with the goal of obtaining shorter run time than the best-performing "
    "optimization so far. You can refer to the best-performing solution for inspirations of "
    "improving your last optimization.\n";

const char* kCudaNote =
    "Make sure youre refinement IMPLEMENT CUDA OPERATORS by "
    "'from torch.utils.cpp_extension import load_inline', INSTEAD OF PURE PyTorch.\n";

const char* kGeneratorUserLayout =
    "===USER===\n"
    "{problem}\n"
    "\n"
    "{best}\n"
    "\n"
    "{trajectory}\n"
    "\n"
    "{attempt}\n"
    "\n"
    "{critique}\n"
    "\n"
    "Respond with the complete refined code in a single fenced code block.\n";

std::string generator_template_text(GeneratorVariant v) {
  std::string s = kGeneratorPreamble;
  switch (v) {
    case GeneratorVariant::Base:
      s += "You are provided with the pytorch architecture to optimize, as long as your previous "
           "optimization solution attempt and the execution feedback. Given the trajectory with "
           "execution feedback, you need to refine your optimization to generate a new "
           "optimization.\n";
      s += kRefineDirectives;
      break;
    case GeneratorVariant::BestPerf:
      s += "You are provided with the pytorch architecture to optimize, your best-performing "
           "optimization solution attempt so far and its execution feedback, as well as your last "
           "optimization solution attempt and the execution feedback. Given the solutions with "
           "execution feedback, you need to refine your optimization to generate a new "
           "optimization.\n";
      s += kRefineDirectivesBest;
      s += kCudaNote;
      break;
    case GeneratorVariant::Critique:
      s += "You are provided with the pytorch architecture to optimize, as long as your previous "
           "optimization solution attempt and the execution feedback, and natural language "
           "critique. Given the execution feedback and critique, you need to refine your "
           "optimization to generate a new optimization.\n"
           "Use the information and follow the critique to generate your refinement.\n";
      break;
    case GeneratorVariant::CritiqueBestPerf:
      s += "You are provided with the pytorch architecture to optimize, your best-performing "
           "optimization solution attempt so far and its execution feedback, as well as your last "
           "optimization solution attempt and the execution feedback, and natural language "
           "critique. Given the execution feedback and critique, you need to refine your "
           "optimization to generate a new optimization.\n"
           "Use the information and follow the critique to generate your refinement.\n";
      break;
    case GeneratorVariant::Traj:
      s += "You are provided with the pytorch architecture to optimize, as long as your "
           "trajectory of previous optimization solution attempts and the execution feedback. "
           "Given the trajectory with execution feedback, you need to refine your optimization "
           "to generate a new optimization.\n";
      s += kRefineDirectives;
      s += kCudaNote;
      break;
    case GeneratorVariant::TrajBestPerf:
      s += "You are provided with the pytorch architecture to optimize, your best-performing "
           "optimization solution attempt so far and its execution feedback, as well as your "
           "trajectory of previous optimization solution attempts and the execution feedback. "
           "Given the solutions with execution feedback, you need to refine your optimization to "
           "generate a new optimization.\n";
      s += kRefineDirectivesBest;
      s += kCudaNote;
      break;
    case GeneratorVariant::TrajCritique:
      s += "You are provided with the pytorch architecture to optimize, as long as your "
           "trajectory of previous optimization solution attempts and the execution feedback, "
           "and natural language critiques. Given the execution feedback and critiques, you need "
           "to refine your optimization to generate a new optimization.\n"
           "Use the information and follow the critique to generate your refinement.\n";
      s += kCudaNote;
      break;
    case GeneratorVariant::TrajCritiqueBestPerf:
      s += "You are provided with the pytorch architecture to optimize, your best-performing "
           "optimization solution attempt so far and its execution feedback, as well as your "
           "trajectory of previous optimization solution attempts and the execution feedback, "
           "and natural language critiques. Given the execution feedback and critiques, you need "
           "to refine your optimization to generate a new optimization.\n"
           "Use the information and follow the critique to generate your refinement.\n";
      s += kCudaNote;
      break;
  }
  s += kGeneratorUserLayout;
  return s;
}

const char* kCriticClosing =
    "Respond with your critique as plain text: first the diagnosis, then actionable "
    "suggestions.\n";

const char* kCriticDirectives =
    "Specifically, if the optimization failed to compile (i.e. 'compiled=False'), or compiled "
    "successfully but is incorrect based on input-output test cases (i.e. 'correctness'=False),\n"
    "1) provide diagnosis based on the error messages on why it fails to compile/is incorrect; "
    "2) based on the diagnosis, further provide actionable suggestions that can guide the "
    "refinement of the solution to compile and be correct.\n"
    "If the optimization can compile and is correct, based on the running time information,\n"
    "1) provide diagnosis on what are the potential bottleneck of running time in the solution; "
    "2) based on the diagnosis, futher provide actionable suggestions that can guide the "
    "refinement of the solution to reduce running time.\n";

const char* kCriticDirectivesBest =
    "Specifically, if the optimization failed to compile (i.e. 'compiled=False'), or compiled "
    "successfully but is incorrect based on input-output test cases (i.e. 'correctness'=False),\n"
    "1) provide diagnosis based on the error messages on why it fails to compile/is incorrect; "
    "2) based on the diagnosis, further provide actionable suggestions that can guide the "
    "refinement of the solution to compile and be correct. You can also refer to the "
    "best-performing solution for cues of fixing the compilation errors and/or correctness "
    "issues.\n"
    "If the optimization can compile and is correct, based on the running time information,\n"
    "1) provide diagnosis on what are the potential bottleneck of running time in the solution; "
    "2) based on the diagnosis, futher provide actionable suggestions that can guide the "
    "refinement of the solution to reduce running time with the goal of obtaining shorter run "
    "time than the best-performing optimization so far. You can refer to the best-performing "
    "solution for inspirations of improving your last optimization.\n";

std::string critic_template_text(CriticVariant v) {
  std::string s = kGeneratorPreamble;
  switch (v) {
    case CriticVariant::Critique:
      s += "You are provided with the pytorch architecture to optimize, your previous "
           "optimization solution attempt and the execution feedback. Given the trajectory with "
           "execution feedback and critiques, you need to provide critique for the previous "
           "solution attempt that can guide the refinement of the optimization to generate a new "
           "optimization that aims to overcome the pitfalls in the solution.\n";
      s += kCriticDirectives;
      break;
    case CriticVariant::CritiqueBestPerf:
      s += "You are provided with the pytorch architecture to optimize, your best-performing "
           "optimization solution attempt so far and its execution feedback, as well as your last "
           "optimization solution attempt and the execution feedback. Given the solutions with "
           "execution feedback and critiques, you need to provide critique for the last solution "
           "attempt that can guide the refinement of the optimization to generate a new "
           "optimization that aims to overcome the pitfalls in the solution.\n";
      s += kCriticDirectivesBest;
      break;
    case CriticVariant::TrajCritique:
      s += "You are provided with the pytorch architecture to optimize, as long as your "
           "trajectory of previous optimization solution attempts and the execution feedback, "
           "and natural language critiques. Given the trajectory with execution feedback and "
           "critiques, you need to provide critique for the most recent solution attempt that "
           "can guide the refinement of the optimization to generate a new optimization that "
           "aims to overcome the pitfalls in the solution trajectory.\n";
      s += kCriticDirectives;
      break;
    case CriticVariant::TrajCritiqueBestPerf:
      s += "You are provided with the pytorch architecture to optimize, your best-performing "
           "optimization solution attempt so far and its execution feedback, as well as your "
           "trajectory of previous optimization solution attempts and the execution feedback, "
           "and natural language critiques. Given the solutions with execution feedback and "
           "critiques, you need to provide critique for the most recent solution attempt that "
           "can guide the refinement of the optimization to generate a new optimization that "
           "aims to overcome the pitfalls in the solution trajectory.\n";
      s += kCriticDirectivesBest;
      break;
  }
  s += "===USER===\n"
       "{problem}\n"
       "\n"
       "{best}\n"
       "\n"
       "{trajectory}\n"
       "\n"
       "{attempt}\n"
       "\n";
  s += kCriticClosing;
  return s;
}

std::string reward_template_text() {
  std::string s =
      "You are an expert in writing custom CUDA kernels to replace the PyTorch operators in the "
      "given architecture to get speedups.\n"
      "The task offers complete freedom to choose the set of operators one want to replace. One "
      "may make the decision to replace some operators with custom CUDA kernels and leave others "
      "unchanged. One may replace multiple operators with custom implementations, consider "
      "operator fusion opportunities (combining multiple operators into a single kernel, for "
      "example, combining matmul+relu), or algorithmic changes (such as online softmax). You are "
      "only limited by your imagination.\n"
      "The task provides\n"
      "1) The target PyTorch architecture to optimize, with its running time.\n"
      "2) The trajectory of previous optimization refinement attempts. The trajectory contains "
      "(multiple) rounds of optimization refinement attemps, the corresponding execution "
      "feedback & relative speedup to the target PyTorch implementation, and the natural "
      "language critique that diagnoses the potential issues of the refinement with actionable "
      "suggestions.\n"
      "3) The most recent optimization refinement attempt, if 2) is provided, then the "
      "generation of this attempt is conditioned on all information in 2).\n"
      "Given the trajectory, you need to predict the EXPECTED OVERALL MAXIMUM RELATIVE SPEEDUP "
      "of this trajectory if the refinement iteration of solution-execution feedback (-critique) "
      "WILL BE CONTINUED FOR A FEW MORE ROUNDS IN THE SAME MANNER (you will be provided with how "
      "many remaining future rounds of refinment are allowed).\n"
      "The optimization (and natural language) critics are all generated by an AI system.\n"
      "The EXPECTED OVERALL MAXIMUM RELATIVE SPEEDUP of a to be continued trajectory is defined "
      "with five-way labels:\n"
      "0: NONE of the solutions in the current trajectory or the EXPECTED solutions in your "
      "estimated future rounds of refinement is/will be faster than the original PyTorch "
      "implementation. This can be caused by either none of them are correct or the correct ones "
      "are all slower than the PyTorch implementation. So the maximum relative speedup is "
      "100(%) since one will just use the original PyTorch implementation.\n"
      "1: AT LEAST one of the solution in the current trajectory or the EXPECTED solutions in "
      "your estimated future rounds of refinement is/will be correct AND yield running time "
      "FASTER than the PyTorch architecture, with maximum relative speedup IN THE RANGE OF "
      "(100%, 140%].\n"
      "2: AT LEAST one of the solution in the current trajectory or the EXPECTED solutions in "
      "your estimated future rounds of refinement is/will be correct AND yield running time "
      "FASTER than the PyTorch architecture, with maximum relative speedup IN THE RANGE OF "
      "(140%, 320%].\n"
      "3: AT LEAST one of the solution in the current trajectory or the EXPECTED solutions in "
      "your estimated future rounds of refinement is/will be correct AND yield running time "
      "FASTER than the PyTorch architecture, with maximum relative speedup IN THE RANGE OF "
      "(320%, 475%].\n"
      "4: AT LEAST one of the solution in the current trajectory or the EXPECTED solutions in "
      "your estimated future rounds of refinement is/will be correct AND yield running time "
      "FASTER than the PyTorch architecture, with maximum relative speedup GREATER THAN 475%.\n"
      "Based on the given information, you need to estimate:\n"
      "1) the difficulty of the target optimization problem.\n"
      "2) the AI system's capability of generating optimization solutions that accurately "
      "incoporates the feedback (and critiques) to fix bugs/improve performance. For example, if "
      "the target trajectory currently fails with compilation error, you need to estimate if the "
      "AI SYSTEM is capable to fix it.\n"
      "3) The AI system's capability to provide accurate diagnosis of errors/performance "
      "bottlenecks and the quality and actionabiliy of provided refinement suggestions. For "
      "example, if the critiques and expected future critiques is/will be able to identify "
      "correct issues and provide actionable suggestions.\n"
      "4) Base on 1) 2), and 3), the MOST LIKELY outcome of the EXPECTED OVERALL MAXIMUM "
      "RELATIVE SPEEDUP the current attempt (+ target trajectory) can lead to, if the refinement "
      "will be continued by THE SAME AI SYSTEM for a given number of rounds.\n"
      "BE CAUSIOUS in your estimation, which need to faithfully reflect the difficulties and "
      "capabilities of the AI SYSTEM, WITHOUT OVERESITMATIONS OR UNDERESTIMATIONS.\n"
      "Remember the optimization is and will be performed by THE AI SYSTEM, NOT YOU. So use your "
      "expertise only to predict the capabilities of the AI system, and the EXPECTED OVERALL "
      "MAXIMUM RELATIVE SPEEDUP based on the AI's capabilities.\n"
      "And DO NOT take into consideration your own expertise in the remaining trajectory (i.e. "
      "do not think that you are going to further refine it, it is the system's job).\n"
      "Finally, based on your estimations, provide the EXPECTED OVERALL MAXIMUM RELATIVE SPEEDUP "
      "prediction as a numerical label of 0/1/2/3/4.\n"
      "DO NOT ouput your estimations, just output the final predicted EXPECTED OVERALL MAXIMUM "
      "RELATIVE SPEEDUP score as a single number and NOTING ELSE.\n"
      "===USER===\n"
      "{problem}\n"
      "\n"
      "{trajectory}\n"
      "\n"
      "{attempt}\n"
      "\n"
      "Best discounted reward category achieved so far: {u_cat}\n"
      "Remaining future rounds of refinement: {remaining_rounds}\n"
      "\n"
      "Prediction (a single number, 0-4):\n";
  return s;
}

// --- rendering helpers -------------------------------------------------------

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

std::string feedback_lines(const ExecFeedback& fb) {
  std::string s = "Feedback: compiled=";
  s += fb.compiled ? "True" : "False";
  s += ", correctness=";
  s += fb.correct ? "True" : "False";
  s += ", speedup=" + fmt("%.4f", fb.speedup);
  if (fb.time_ms) s += ", time_ms=" + fmt("%.3f", *fb.time_ms);
  s += "\n";
  if (!fb.compiled) {
    s += "compilation error: " + fb.correctness_detail + "\n";
  } else if (!fb.correct) {
    s += "correctness_issues: " + fb.correctness_detail + "\n";
  } else if (!fb.perf_detail.empty()) {
    s += "performance: " + fb.perf_detail + "\n";
  }
  return s;
}

std::string code_block(const std::string& code) { return "```\n" + code + "\n```\n"; }

std::string attempt_block(const SearchState& s, bool latest) {
  std::string out = std::string(kAttemptMarker) + " " + std::to_string(s.depth);
  if (latest) out += " (latest)";
  out += "\n" + code_block(s.code);
  if (s.feedback) out += feedback_lines(*s.feedback);
  return out;
}

std::string pending_attempt_block(int depth, const std::string& code) {
  std::string out = std::string(kAttemptMarker) + " " + std::to_string(depth) + " (latest)\n";
  out += code_block(code);
  out += "Feedback: (not yet executed)\n";
  return out;
}

std::string critique_block(const SearchState& s) {
  return std::string(kCritiqueMarker) + " " + std::to_string(s.depth) + "\n" +
         s.critique->text + "\n";
}

std::string problem_section(const ProblemSpec& p) {
  std::string s = std::string(kProblemMarker) + "\n";
  std::string desc = trim(p.description);
  if (!desc.empty()) s += desc + "\n";
  s += "Original code:\n" + code_block(p.baseline_code);
  if (p.baseline_time_ms) s += "Baseline time: " + fmt("%.3f", *p.baseline_time_ms) + " ms\n";
  return s;
}

std::string best_section(const SearchState& best, double u_raw) {
  std::string s = std::string(kBestMarker) + "\n";
  s += "Best discounted reward so far (u): " + fmt("%.4f", u_raw) + "\n";
  s += code_block(best.code);
  if (best.feedback) s += feedback_lines(*best.feedback);
  return s;
}

std::string trajectory_section(const PromptContext& ctx, bool with_critiques,
                               bool include_current) {
  std::string s;
  for (const SearchState* node : ctx.ancestors) {
    if (node->is_root()) continue;
    if (!include_current && node == ctx.current) continue;
    s += attempt_block(*node, false);
    if (with_critiques && node->critique) s += critique_block(*node);
    s += "\n";
  }
  return s;
}

std::string substitute_all(std::string text,
                           const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    std::string marker = "{" + key + "}";
    std::size_t pos;
    while ((pos = text.find(marker)) != std::string::npos) {
      text.replace(pos, marker.size(), value);
    }
  }
  return text;
}

std::string squeeze_blank_runs(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  int newlines = 0;
  for (char c : text) {
    if (c == '\n') {
      ++newlines;
      if (newlines <= 2) out += c;
    } else {
      newlines = 0;
      out += c;
    }
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  out += "\n";
  return out;
}

std::pair<std::string, std::string> split_template(const std::string& templ) {
  const std::string marker = "===USER===\n";
  std::size_t pos = templ.find(marker);
  if (pos == std::string::npos)
    throw std::invalid_argument("template missing ===USER=== separator");
  return {trim(templ.substr(0, pos)), templ.substr(pos + marker.size())};
}

RenderedPrompt assemble(const std::string& templ,
                        const std::map<std::string, std::string>& sections) {
  auto [system, user_layout] = split_template(templ);
  RenderedPrompt out;
  out.system = system;
  out.user = squeeze_blank_runs(substitute_all(user_layout, sections));
  return out;
}

std::string read_file_if_exists(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

VariantFlags flags_of(GeneratorVariant v) {
  switch (v) {
    case GeneratorVariant::Base: return {false, false, false};
    case GeneratorVariant::BestPerf: return {false, true, false};
    case GeneratorVariant::Critique: return {false, false, true};
    case GeneratorVariant::CritiqueBestPerf: return {false, true, true};
    case GeneratorVariant::Traj: return {true, false, false};
    case GeneratorVariant::TrajBestPerf: return {true, true, false};
    case GeneratorVariant::TrajCritique: return {true, false, true};
    case GeneratorVariant::TrajCritiqueBestPerf: return {true, true, true};
  }
  throw std::logic_error("unknown generator variant");
}

std::string variant_name(GeneratorVariant v) {
  switch (v) {
    case GeneratorVariant::Base: return "Base";
    case GeneratorVariant::BestPerf: return "BestPerf";
    case GeneratorVariant::Critique: return "Critique";
    case GeneratorVariant::CritiqueBestPerf: return "CritiqueBestPerf";
    case GeneratorVariant::Traj: return "Traj";
    case GeneratorVariant::TrajBestPerf: return "TrajBestPerf";
    case GeneratorVariant::TrajCritique: return "TrajCritique";
    case GeneratorVariant::TrajCritiqueBestPerf: return "TrajCritiqueBestPerf";
  }
  throw std::logic_error("unknown generator variant");
}

GeneratorVariant variant_from_name(const std::string& name) {
  for (GeneratorVariant v : all_generator_variants()) {
    if (variant_name(v) == name) return v;
  }
  throw std::invalid_argument("unknown prompt variant: " + name);
}

const std::vector<GeneratorVariant>& all_generator_variants() {
  static const std::vector<GeneratorVariant> all = {
      GeneratorVariant::Base,
      GeneratorVariant::BestPerf,
      GeneratorVariant::Critique,
      GeneratorVariant::CritiqueBestPerf,
      GeneratorVariant::Traj,
      GeneratorVariant::TrajBestPerf,
      GeneratorVariant::TrajCritique,
      GeneratorVariant::TrajCritiqueBestPerf,
  };
  return all;
}

CriticVariant critic_variant_for(GeneratorVariant v) {
  switch (v) {
    case GeneratorVariant::Critique: return CriticVariant::Critique;
    case GeneratorVariant::CritiqueBestPerf: return CriticVariant::CritiqueBestPerf;
    case GeneratorVariant::TrajCritique: return CriticVariant::TrajCritique;
    case GeneratorVariant::TrajCritiqueBestPerf: return CriticVariant::TrajCritiqueBestPerf;
    default:
      throw std::invalid_argument("variant " + variant_name(v) + " does not use critiques");
  }
}

bool critic_uses_trajectory(CriticVariant v) {
  return v == CriticVariant::TrajCritique || v == CriticVariant::TrajCritiqueBestPerf;
}

bool critic_uses_best_perf(CriticVariant v) {
  return v == CriticVariant::CritiqueBestPerf || v == CriticVariant::TrajCritiqueBestPerf;
}

const std::vector<CriticVariant>& all_critic_variants() {
  static const std::vector<CriticVariant> all = {
      CriticVariant::Critique,
      CriticVariant::CritiqueBestPerf,
      CriticVariant::TrajCritique,
      CriticVariant::TrajCritiqueBestPerf,
  };
  return all;
}

void PromptContext::validate() const {
  if (!problem || !current) throw std::invalid_argument("prompt context missing problem/current");
  if (ancestors.empty() || ancestors.back() != current)
    throw std::invalid_argument("prompt context ancestors must end at current");
  for (std::size_t i = 1; i < ancestors.size(); ++i) {
    if (!ancestors[i]->parent_id || *ancestors[i]->parent_id != ancestors[i - 1]->node_id)
      throw std::invalid_argument("prompt context ancestors are not path-consistent");
  }
}

const PromptTemplates& PromptTemplates::builtin() {
  static const PromptTemplates instance = [] {
    PromptTemplates t;
    for (GeneratorVariant v : all_generator_variants())
      t.generators_[v] = generator_template_text(v);
    for (CriticVariant v : all_critic_variants()) t.critics_[v] = critic_template_text(v);
    t.reward_ = reward_template_text();
    return t;
  }();
  return instance;
}

PromptTemplates PromptTemplates::load_dir(const std::filesystem::path& dir) {
  PromptTemplates t = builtin();
  if (dir.empty()) return t;
  for (GeneratorVariant v : all_generator_variants()) {
    std::string text = read_file_if_exists(dir / generator_filename(v));
    if (!text.empty()) t.generators_[v] = text;
  }
  for (CriticVariant v : all_critic_variants()) {
    std::string text = read_file_if_exists(dir / critic_filename(v));
    if (!text.empty()) t.critics_[v] = text;
  }
  std::string text = read_file_if_exists(dir / reward_filename());
  if (!text.empty()) t.reward_ = text;
  return t;
}

void PromptTemplates::write_builtin(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const PromptTemplates& t = builtin();
  auto write = [&](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
  };
  for (GeneratorVariant v : all_generator_variants())
    write(dir / generator_filename(v), t.generator(v));
  for (CriticVariant v : all_critic_variants()) write(dir / critic_filename(v), t.critic(v));
  write(dir / reward_filename(), t.reward_model());
}

const std::string& PromptTemplates::generator(GeneratorVariant v) const {
  return generators_.at(v);
}

const std::string& PromptTemplates::critic(CriticVariant v) const { return critics_.at(v); }

std::string PromptTemplates::generator_filename(GeneratorVariant v) {
  return "generator_" + variant_name(v) + ".txt";
}

std::string PromptTemplates::critic_filename(CriticVariant v) {
  return "critic_" + critic_variant_name(v) + ".txt";
}

RenderedPrompt render_generator_prompt(const PromptTemplates& templates, GeneratorVariant variant,
                                       const PromptContext& ctx) {
  ctx.validate();
  VariantFlags flags = flags_of(variant);
  bool at_root = ctx.current->is_root();
  if (!at_root) {
    if (flags.uses_critique && !ctx.current->critique)
      throw std::invalid_argument("missing required context field: critique");
    if (flags.uses_best_perf && !ctx.best_node)
      throw std::invalid_argument("missing required context field: best_node");
  }

  std::map<std::string, std::string> sections;
  sections["problem"] = problem_section(*ctx.problem);
  sections["best"] = (flags.uses_best_perf && ctx.best_node && !at_root)
                         ? best_section(*ctx.best_node, ctx.u_raw)
                         : "";
  sections["trajectory"] =
      flags.uses_trajectory ? trajectory_section(ctx, flags.uses_critique, false) : "";
  sections["attempt"] = at_root ? "" : attempt_block(*ctx.current, true);
  sections["critique"] = (flags.uses_critique && ctx.current->critique && !at_root)
                             ? critique_block(*ctx.current)
                             : "";
  return assemble(templates.generator(variant), sections);
}

RenderedPrompt render_critic_prompt(const PromptTemplates& templates, CriticVariant variant,
                                    const PromptContext& ctx) {
  ctx.validate();
  if (ctx.current->is_root() || !ctx.current->evaluated())
    throw std::invalid_argument("critic prompts need an evaluated attempt");
  if (critic_uses_best_perf(variant) && !ctx.best_node)
    throw std::invalid_argument("missing required context field: best_node");

  std::map<std::string, std::string> sections;
  sections["problem"] = problem_section(*ctx.problem);
  sections["best"] =
      critic_uses_best_perf(variant) ? best_section(*ctx.best_node, ctx.u_raw) : "";
  sections["trajectory"] =
      critic_uses_trajectory(variant) ? trajectory_section(ctx, true, false) : "";
  sections["attempt"] = attempt_block(*ctx.current, true);
  sections["critique"] = "";
  return assemble(templates.critic(variant), sections);
}

RenderedPrompt render_reward_prompt(const PromptTemplates& templates, const ProblemSpec& problem,
                                    const std::vector<const SearchState*>& evaluated_prefix,
                                    const std::string& pending_code, int u_cat,
                                    int remaining_rounds) {
  std::map<std::string, std::string> sections;
  sections["problem"] = problem_section(problem);
  std::string traj;
  int last_depth = 0;
  for (const SearchState* node : evaluated_prefix) {
    if (node->is_root()) continue;
    traj += attempt_block(*node, false);
    if (node->critique) traj += critique_block(*node);
    traj += "\n";
    last_depth = node->depth;
  }
  sections["trajectory"] = traj;
  sections["attempt"] = pending_attempt_block(last_depth + 1, pending_code);
  sections["u_cat"] = std::to_string(u_cat);
  sections["remaining_rounds"] = std::to_string(remaining_rounds);
  sections["best"] = "";
  sections["critique"] = "";
  return assemble(templates.reward_model(), sections);
}

std::uint64_t prompt_hash(const RenderedPrompt& prompt) {
  std::uint64_t h = fnv1a(prompt.system);
  h = fnv1a("\x1f", h);
  return fnv1a(prompt.user, h);
}

}  // namespace maxcode
