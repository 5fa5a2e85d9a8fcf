#include "maxcode/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "maxcode/util.hpp"

namespace maxcode {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "mode",          "output_dir",    "templates_dir", "methods",       "seed",
      "gamma",         "bins",          "temperature",   "max_tokens",    "max_evaluations",
      "max_depth",     "beam_width_k",  "repair_cap",    "oversample_m",  "problems_dir",
      "compile_command", "run_command", "warmup_runs",   "timed_runs",    "timeout_ms",
      "workdir_root",  "api_base",      "api_path",      "model",         "critic_model",
      "value_model",   "max_retries",   "sim_problems",  "sim_dim",       "sim_range",
      "sim_optimum",   "sim_threshold", "limit_problems",
  };
  return keys;
}

int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config field '" + key + "': expected integer, got '" + value + "'");
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config field '" + key + "': expected number, got '" + value + "'");
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::map<std::string, std::string> parse_flat_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  int line_no = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (!kv.emplace(key, value).second)
      throw ConfigError("config field '" + key + "' set twice");
  }
  return kv;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return from_map(parse_flat_config(os.str()),
                  path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

RunConfig RunConfig::from_map(const std::map<std::string, std::string>& kv,
                              const std::filesystem::path& base_dir) {
  for (const auto& [key, _] : kv) {
    if (!known_keys().count(key)) throw ConfigError("unknown config field '" + key + "'");
  }
  auto get = [&](const std::string& key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };

  RunConfig c;
  if (const auto* v = get("mode")) {
    if (*v == "simulate")
      c.mode = Mode::Simulate;
    else if (*v == "subprocess")
      c.mode = Mode::Subprocess;
    else
      throw ConfigError("config field 'mode': expected simulate or subprocess, got '" + *v + "'");
  }
  if (const auto* v = get("output_dir")) c.output_dir = resolve(*v);
  if (const auto* v = get("templates_dir")) c.templates_dir = resolve(*v);
  if (const auto* v = get("seed")) {
    c.seed = static_cast<std::uint64_t>(to_int("seed", *v));
    c.seed_set = true;
  }
  if (const auto* v = get("gamma")) c.gamma = to_double("gamma", *v);
  if (const auto* v = get("temperature")) c.temperature = to_double("temperature", *v);
  if (const auto* v = get("max_tokens")) c.max_tokens = to_int("max_tokens", *v);
  if (const auto* v = get("limit_problems")) c.limit_problems = to_int("limit_problems", *v);

  if (const auto* v = get("bins")) {
    std::vector<std::string> parts = split(*v, ',');
    if (parts.size() != 3) throw ConfigError("config field 'bins': expected s1,s2,s3");
    c.bins.s1 = to_double("bins", trim(parts[0]));
    c.bins.s2 = to_double("bins", trim(parts[1]));
    c.bins.s3 = to_double("bins", trim(parts[2]));
  }

  if (const auto* v = get("methods")) {
    for (const std::string& part : split(*v, ',')) {
      std::string name = trim(part);
      if (name.empty()) continue;
      MethodSpec m = MethodSpec::parse(name);
      // A per-method @gamma wins over the global setting.
      if (name.find('@') == std::string::npos) m.gamma = c.gamma;
      c.methods.push_back(m);
    }
  }

  if (const auto* v = get("max_evaluations")) c.budget.max_evaluations = to_int("max_evaluations", *v);
  if (const auto* v = get("max_depth")) c.budget.max_depth = to_int("max_depth", *v);
  if (const auto* v = get("beam_width_k")) c.budget.beam_width_k = to_int("beam_width_k", *v);
  if (const auto* v = get("repair_cap")) c.budget.repair_cap = to_int("repair_cap", *v);
  if (const auto* v = get("oversample_m"))
    c.budget.oversample_m = to_int("oversample_m", *v);
  else
    c.budget.oversample_m = std::max(c.budget.oversample_m, c.budget.beam_width_k);

  if (const auto* v = get("problems_dir")) c.problems_dir = resolve(*v);
  if (const auto* v = get("compile_command")) c.exec.compile_command_template = *v;
  if (const auto* v = get("run_command")) c.exec.run_command_template = *v;
  if (const auto* v = get("warmup_runs")) c.exec.warmup_runs = to_int("warmup_runs", *v);
  if (const auto* v = get("timed_runs")) c.exec.timed_runs = to_int("timed_runs", *v);
  if (const auto* v = get("timeout_ms")) c.exec.timeout_ms = to_int("timeout_ms", *v);
  if (const auto* v = get("workdir_root")) c.exec.workdir_root = resolve(*v);

  if (const auto* v = get("api_base")) c.remote.base_url = *v;
  if (const char* env = std::getenv("MAXCODE_API_BASE"); env && *env) c.remote.base_url = env;
  if (const char* env = std::getenv("MAXCODE_API_KEY"); env && *env) c.remote.api_key = env;
  if (const auto* v = get("api_path")) c.remote.api_path = *v;
  if (const auto* v = get("model")) c.remote.model = *v;
  if (const auto* v = get("critic_model")) c.critic_model = *v;
  if (const auto* v = get("value_model")) c.value_model = *v;
  if (const auto* v = get("max_retries")) c.remote.max_retries = to_int("max_retries", *v);

  if (const auto* v = get("sim_problems")) c.sim_problems = to_int("sim_problems", *v);
  if (const auto* v = get("sim_dim")) c.sim_dim = to_int("sim_dim", *v);
  if (const auto* v = get("sim_range")) c.sim_range = to_int("sim_range", *v);
  if (const auto* v = get("sim_optimum")) c.sim_optimum = to_double("sim_optimum", *v);
  if (const auto* v = get("sim_threshold")) c.sim_threshold = to_double("sim_threshold", *v);

  // Mutual exclusion between the two executor modes.
  bool has_subprocess_keys = get("problems_dir") || get("compile_command") || get("run_command") ||
                             get("warmup_runs") || get("timed_runs") || get("workdir_root");
  bool has_sim_keys = get("sim_problems") || get("sim_dim") || get("sim_range") ||
                      get("sim_optimum") || get("sim_threshold");
  if (c.mode == Mode::Simulate && has_subprocess_keys)
    throw ConfigError("simulate mode forbids subprocess settings (problems_dir, compile_command, ...)");
  if (c.mode == Mode::Subprocess && has_sim_keys)
    throw ConfigError("subprocess mode forbids sim_* settings");

  c.validate();
  return c;
}

void RunConfig::validate() const {
  if (methods.empty()) throw ConfigError("config field 'methods': at least one method required");
  if (!bins.valid()) throw ConfigError("config field 'bins': need 100 < s1 < s2 < s3");
  if (gamma <= 0.0 || gamma > 1.0) throw ConfigError("config field 'gamma': must be in (0, 1]");
  budget.validate();
  if (mode == Mode::Simulate) {
    if (!seed_set) throw ConfigError("config field 'seed': required in simulate mode");
    if (sim_problems < 1) throw ConfigError("config field 'sim_problems': must be >= 1");
    if (sim_dim < 1) throw ConfigError("config field 'sim_dim': must be >= 1");
    if (sim_range < 2) throw ConfigError("config field 'sim_range': must be >= 2");
    if (sim_optimum <= 0) throw ConfigError("config field 'sim_optimum': must be positive");
  } else {
    if (problems_dir.empty()) throw ConfigError("config field 'problems_dir': required in subprocess mode");
    exec.validate();
  }
  for (const MethodSpec& m : methods) {
    m.validate();
    if (m.algorithm == MethodSpec::Algorithm::ValueGuided && mode == Mode::Subprocess &&
        value_model.empty())
      throw ConfigError("config field 'value_model': required for value-guided methods");
  }
}

std::map<std::string, std::string> RunConfig::canonical_map() const {
  std::map<std::string, std::string> m;
  m["mode"] = mode == Mode::Simulate ? "simulate" : "subprocess";
  m["output_dir"] = output_dir.string();
  m["templates_dir"] = templates_dir.string();
  std::string method_list;
  for (const MethodSpec& spec : methods) {
    if (!method_list.empty()) method_list += ", ";
    method_list += spec.name();
  }
  m["methods"] = method_list;
  m["seed"] = std::to_string(seed);
  m["gamma"] = fmt_double(gamma);
  m["bins"] = fmt_double(bins.s1) + "," + fmt_double(bins.s2) + "," + fmt_double(bins.s3);
  m["temperature"] = fmt_double(temperature);
  m["max_tokens"] = std::to_string(max_tokens);
  m["limit_problems"] = std::to_string(limit_problems);
  m["max_evaluations"] = std::to_string(budget.max_evaluations);
  m["max_depth"] = std::to_string(budget.max_depth);
  m["beam_width_k"] = std::to_string(budget.beam_width_k);
  m["repair_cap"] = std::to_string(budget.repair_cap);
  m["oversample_m"] = std::to_string(budget.oversample_m);
  if (mode == Mode::Subprocess) {
    m["problems_dir"] = problems_dir.string();
    m["compile_command"] = exec.compile_command_template;
    m["run_command"] = exec.run_command_template;
    m["warmup_runs"] = std::to_string(exec.warmup_runs);
    m["timed_runs"] = std::to_string(exec.timed_runs);
    m["timeout_ms"] = std::to_string(exec.timeout_ms);
    m["workdir_root"] = exec.workdir_root.string();
    m["api_base"] = remote.base_url;
    m["api_path"] = remote.api_path;
    m["model"] = remote.model;
    m["critic_model"] = critic_model;
    m["value_model"] = value_model;
    m["max_retries"] = std::to_string(remote.max_retries);
  } else {
    m["sim_problems"] = std::to_string(sim_problems);
    m["sim_dim"] = std::to_string(sim_dim);
    m["sim_range"] = std::to_string(sim_range);
    m["sim_optimum"] = fmt_double(sim_optimum);
    m["sim_threshold"] = fmt_double(sim_threshold);
  }
  return m;
}

std::uint64_t RunConfig::config_hash() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& [key, value] : canonical_map()) {
    h = fnv1a(key, h);
    h = fnv1a("=", h);
    h = fnv1a(value, h);
    h = fnv1a("\n", h);
  }
  return h;
}

}  // namespace maxcode
