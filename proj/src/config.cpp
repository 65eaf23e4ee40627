#include "optlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>

#include "json.hpp"

#include "optlab/error.hpp"
#include "optlab/presets.hpp"

namespace optlab {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_real(std::string_view v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

std::int64_t parse_int(std::string_view v) {
  std::int64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

std::size_t parse_count(std::string_view v) {
  const std::int64_t n = parse_int(v);
  if (n < 0) throw ConfigError("expected a non-negative integer, got '" + std::string(v) + "'");
  return static_cast<std::size_t>(n);
}

std::uint64_t parse_u64(std::string_view v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("expected an unsigned integer, got '" + std::string(v) + "'");
  }
  return out;
}

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  throw ConfigError("expected true/false, got '" + std::string(v) + "'");
}

std::string show(double v) { return format_double(v); }
std::string show(bool v) { return v ? "true" : "false"; }
template <class I>
  requires std::is_integral_v<I>
std::string show(I v) { return std::to_string(v); }

struct Field {
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define OPTLAB_REAL(path) \
  Field { [](RunConfig& c, std::string_view v) { c.path = parse_real(v); }, [](const RunConfig& c) { return show(c.path); } }
#define OPTLAB_INT(path) \
  Field { [](RunConfig& c, std::string_view v) { c.path = parse_int(v); }, [](const RunConfig& c) { return show(c.path); } }
#define OPTLAB_COUNT(path) \
  Field { [](RunConfig& c, std::string_view v) { c.path = parse_count(v); }, [](const RunConfig& c) { return show(c.path); } }
#define OPTLAB_BOOL(path) \
  Field { [](RunConfig& c, std::string_view v) { c.path = parse_bool(v); }, [](const RunConfig& c) { return show(c.path); } }

// Order here is the order of the resolved dump.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"optimizer.name",
       {[](RunConfig& c, std::string_view v) { c.optimizer = OptimizerConfig::defaults_for(parse_optimizer_kind(v)); },
        [](const RunConfig& c) { return std::string(to_string(c.optimizer.kind)); }}},
      {"optimizer.lr", OPTLAB_REAL(optimizer.lr)},
      {"optimizer.matrix_lr", OPTLAB_REAL(optimizer.matrix_lr)},
      {"optimizer.weight_decay", OPTLAB_REAL(optimizer.weight_decay)},
      {"optimizer.matrix_weight_decay", OPTLAB_REAL(optimizer.matrix_weight_decay)},
      {"optimizer.epsilon", OPTLAB_REAL(optimizer.epsilon)},
      {"optimizer.beta1", OPTLAB_REAL(optimizer.beta1)},
      {"optimizer.beta2", OPTLAB_REAL(optimizer.beta2)},
      {"optimizer.adam_beta1", OPTLAB_REAL(optimizer.adam_beta1)},
      {"optimizer.adam_beta2", OPTLAB_REAL(optimizer.adam_beta2)},
      {"optimizer.beta3", OPTLAB_REAL(optimizer.beta3)},
      {"optimizer.beta_start", OPTLAB_REAL(optimizer.beta_start)},
      {"optimizer.alpha", OPTLAB_REAL(optimizer.alpha)},
      {"optimizer.ema_horizon", OPTLAB_INT(optimizer.ema_horizon)},
      {"optimizer.momentum", OPTLAB_REAL(optimizer.momentum)},
      {"optimizer.signum_variant",
       {[](RunConfig& c, std::string_view v) { c.optimizer.signum_variant = parse_signum_variant(v); },
        [](const RunConfig& c) { return std::string(to_string(c.optimizer.signum_variant)); }}},
      {"optimizer.dampening", OPTLAB_REAL(optimizer.dampening)},
      {"optimizer.coupled_weight_decay", OPTLAB_BOOL(optimizer.coupled_weight_decay)},
      {"optimizer.ns_iters",
       {[](RunConfig& c, std::string_view v) { c.optimizer.ns_iters = static_cast<int>(parse_int(v)); },
        [](const RunConfig& c) { return show(c.optimizer.ns_iters); }}},
      {"optimizer.ns_a", OPTLAB_REAL(optimizer.ns_coeffs.a)},
      {"optimizer.ns_b", OPTLAB_REAL(optimizer.ns_coeffs.b)},
      {"optimizer.ns_c", OPTLAB_REAL(optimizer.ns_coeffs.c)},
      {"optimizer.rms_scale", OPTLAB_REAL(optimizer.rms_scale)},
      {"optimizer.precond_freq", OPTLAB_INT(optimizer.precond_freq)},
      {"optimizer.max_precond_dim", OPTLAB_COUNT(optimizer.max_precond_dim)},
      {"optimizer.identity_init", OPTLAB_BOOL(optimizer.identity_init)},
      {"optimizer.bias_correction", OPTLAB_BOOL(optimizer.bias_correction)},
      {"optimizer.rho", OPTLAB_REAL(optimizer.rho)},
      {"optimizer.estimator_freq", OPTLAB_INT(optimizer.estimator_freq)},
      {"optimizer.sf_warmup_steps", OPTLAB_INT(optimizer.sf_warmup_steps)},
      {"optimizer.d0", OPTLAB_REAL(optimizer.d0)},
      {"optimizer.eta", OPTLAB_REAL(optimizer.eta)},
      {"schedule.family",
       {[](RunConfig& c, std::string_view v) { c.schedule.family = parse_schedule_family(v); },
        [](const RunConfig& c) { return std::string(to_string(c.schedule.family)); }}},
      {"schedule.warmup_steps", OPTLAB_INT(schedule.warmup_steps)},
      {"schedule.final_lr_factor", OPTLAB_REAL(schedule.final_lr_factor)},
      {"schedule.cooldown_fraction", OPTLAB_REAL(schedule.wsd_cooldown_fraction)},
      {"problem.kind",
       {[](RunConfig& c, std::string_view v) { c.problem.kind = parse_problem_kind(v); },
        [](const RunConfig& c) { return std::string(to_string(c.problem.kind)); }}},
      {"problem.dim", OPTLAB_COUNT(problem.dim)},
      {"problem.condition", OPTLAB_REAL(problem.condition)},
      {"problem.noise", OPTLAB_REAL(problem.noise)},
      {"problem.batch_size", OPTLAB_COUNT(problem.batch_size)},
      {"problem.matrix_rows", OPTLAB_COUNT(problem.matrix_rows)},
      {"problem.in_dim", OPTLAB_COUNT(problem.in_dim)},
      {"problem.hidden", OPTLAB_COUNT(problem.hidden)},
      {"problem.classes", OPTLAB_COUNT(problem.classes)},
      {"problem.samples", OPTLAB_COUNT(problem.samples)},
      {"problem.separation", OPTLAB_REAL(problem.separation)},
      {"problem.output_init", OPTLAB_REAL(problem.output_init)},
      {"problem.seed",
       {[](RunConfig& c, std::string_view v) { c.problem.seed = parse_u64(v); },
        [](const RunConfig& c) { return std::to_string(c.problem.seed); }}},
      {"run.steps", OPTLAB_INT(steps)},
      {"run.clip",
       {[](RunConfig& c, std::string_view v) {
          if (v == "none") {
            c.clip_threshold.reset();
          } else {
            c.clip_threshold = parse_real(v);
          }
        },
        [](const RunConfig& c) { return c.clip_threshold ? show(*c.clip_threshold) : std::string("none"); }}},
      {"run.seed",
       {[](RunConfig& c, std::string_view v) { c.seed = parse_u64(v); },
        [](const RunConfig& c) { return std::to_string(c.seed); }}},
      {"run.log_every", OPTLAB_INT(log_every)},
      {"run.coupled_wd_demo", OPTLAB_BOOL(coupled_wd_demo)},
      {"run.timing", OPTLAB_BOOL(timing)},
  };
  return table;
}

#undef OPTLAB_REAL
#undef OPTLAB_INT
#undef OPTLAB_COUNT
#undef OPTLAB_BOOL

const Field* find_field(std::string_view key) {
  for (const auto& [name, field] : fields()) {
    if (name == key) return &field;
  }
  return nullptr;
}

std::string where(const ConfigEntry& e) {
  return e.line > 0 ? e.source + ":" + std::to_string(e.line) + ": " : e.source + ": ";
}

const Preset& require_preset(const ConfigEntry& e) {
  const Preset* p = find_preset(e.value);
  if (p == nullptr) throw ConfigError(where(e) + "unknown preset '" + e.value + "' (list them with `optlab presets`)");
  return *p;
}

std::string preset_optimizer(const Preset& p) {
  for (const auto& e : p.entries) {
    if (canonical_key(e.key) == "optimizer.name") return e.value;
  }
  return "";
}

void apply_entry(RunConfig& config, const ConfigEntry& e) {
  try {
    apply_config_key(config, e.key, e.value);
  } catch (const ConfigError& err) {
    throw ConfigError(where(e) + err.what());
  }
}

}  // namespace

std::vector<ConfigEntry> parse_assignments(std::string_view text, std::string_view source) {
  std::vector<ConfigEntry> out;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string prefix = std::string(source) + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') throw ConfigError(prefix + "section headers are not allowed; use dotted keys");
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(prefix + "expected 'key = value'");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(prefix + "missing key");
    if (value.empty()) throw ConfigError(prefix + "missing value for '" + std::string(key) + "'");
    out.push_back({std::string(key), std::string(value), std::string(source), line_no});
  }
  return out;
}

std::vector<ConfigEntry> parse_config_text(std::string_view text, std::string_view source) {
  auto out = parse_assignments(text, source);
  for (const auto& e : out) {
    if (!is_known_config_key(e.key)) throw ConfigError(where(e) + "unknown key '" + e.key + "'");
  }
  return out;
}

std::vector<ConfigEntry> parse_config_json(std::string_view text, std::string_view source) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string(source) + ": invalid JSON: " + e.what());
  }
  if (doc.is_object() && doc.contains("config")) doc = doc["config"];
  if (!doc.is_object()) throw ConfigError(std::string(source) + ": expected a JSON object");
  std::vector<ConfigEntry> out;
  int index = 0;
  for (const auto& [key, value] : doc.items()) {
    ++index;
    std::string text_value;
    if (value.is_string()) {
      text_value = value.get<std::string>();
    } else if (value.is_boolean()) {
      text_value = value.get<bool>() ? "true" : "false";
    } else if (value.is_number_integer()) {
      text_value = value.dump();
    } else if (value.is_number()) {
      text_value = format_double(value.get<double>());
    } else if (value.is_null()) {
      text_value = "none";
    } else {
      throw ConfigError(std::string(source) + ": field '" + key + "' must be a scalar");
    }
    if (!is_known_config_key(key)) throw ConfigError(std::string(source) + ": unknown key '" + key + "'");
    out.push_back({key, text_value, std::string(source), index});
  }
  return out;
}

std::vector<ConfigEntry> parse_config_any(std::string_view text, std::string_view source) {
  const std::string_view t = trim(text);
  if (!t.empty() && t.front() == '{') return parse_config_json(text, source);
  return parse_config_text(text, source);
}

ConfigEntry parse_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("--set: expected KEY=VALUE, got '" + std::string(assignment) + "'");
  }
  ConfigEntry e{std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))), "--set", 0};
  if (!is_known_config_key(e.key)) throw ConfigError("--set: unknown key '" + e.key + "'");
  return e;
}

std::string canonical_key(std::string_view key) {
  if (key == "preset" || key.find('.') != std::string_view::npos) return std::string(key);
  return "optimizer." + std::string(key);
}

bool is_known_config_key(std::string_view key) {
  const std::string k = canonical_key(key);
  return k == "preset" || find_field(k) != nullptr;
}

std::vector<std::string> known_config_keys() {
  std::vector<std::string> out{"preset"};
  for (const auto& [name, field] : fields()) out.push_back(name);
  return out;
}

void apply_config_key(RunConfig& config, std::string_view key, std::string_view value) {
  const std::string k = canonical_key(key);
  if (k == "preset") {
    const Preset* p = find_preset(value);
    if (p == nullptr) throw ConfigError("unknown preset '" + std::string(value) + "'");
    for (const auto& e : p->entries) apply_config_key(config, e.key, e.value);
    return;
  }
  const Field* f = find_field(k);
  if (f == nullptr) throw ConfigError("unknown key '" + std::string(key) + "'");
  try {
    f->set(config, trim(value));
  } catch (const ConfigError& e) {
    throw ConfigError(k + ": " + e.what());
  }
}

RunConfig resolve_config(const std::vector<ConfigEntry>& entries) {
  const ConfigEntry* name = nullptr;
  const ConfigEntry* preset_entry = nullptr;
  bool final_factor_set = false;
  for (const auto& e : entries) {
    const std::string k = canonical_key(e.key);
    if (k == "optimizer.name") name = &e;
    if (k == "preset") preset_entry = &e;
    if (k == "schedule.final_lr_factor") final_factor_set = true;
  }
  const Preset* preset = preset_entry ? &require_preset(*preset_entry) : nullptr;

  RunConfig config;
  if (name != nullptr) {
    apply_entry(config, *name);
  } else if (preset != nullptr) {
    config.optimizer = OptimizerConfig::defaults_for(parse_optimizer_kind(preset_optimizer(*preset)));
  }
  if (preset != nullptr) {
    const std::string owner = preset_optimizer(*preset);
    if (parse_optimizer_kind(owner) != config.optimizer.kind) {
      throw ConfigError(where(*preset_entry) + "preset '" + preset->name + "' is for " + owner + ", not " +
                        std::string(to_string(config.optimizer.kind)));
    }
    for (const auto& e : preset->entries) {
      const std::string k = canonical_key(e.key);
      if (k == "optimizer.name") continue;
      if (k == "schedule.final_lr_factor") final_factor_set = true;
      apply_entry(config, e);
    }
  }
  for (const auto& e : entries) {
    const std::string k = canonical_key(e.key);
    if (k == "optimizer.name" || k == "preset") continue;
    apply_entry(config, e);
  }
  if (!final_factor_set) config.schedule.final_lr_factor = default_final_lr_factor(config.schedule.family);
  config.validate();
  return config;
}

KeyValues to_key_values(const RunConfig& config) {
  KeyValues out;
  for (const auto& [name, field] : fields()) out.emplace_back(name, field.get(config));
  return out;
}

std::string to_config_text(const RunConfig& config) {
  std::string out;
  for (const auto& [k, v] : to_key_values(config)) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_config_text(config)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_json_summary(const RunRecord& record, const std::vector<std::string>& overrides) {
  nlohmann::ordered_json doc;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : to_key_values(record.config)) cfg[k] = v;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(record.config)));
  doc["config_hash"] = hash;
  doc["config"] = cfg;
  doc["overrides"] = overrides;
  const RunSummary& s = record.summary;
  nlohmann::ordered_json sum;
  auto real = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return format_double(v);
  };
  sum["final_loss"] = real(s.final_loss);
  sum["initial_loss"] = real(s.initial_loss);
  sum["final_param_norm"] = real(s.final_param_norm);
  sum["mean_step_time_ns"] = s.mean_step_time_ns;
  sum["steps_completed"] = s.steps_completed;
  sum["rows"] = record.rows.size();
  sum["diverged"] = s.diverged;
  sum["divergence_step"] = s.divergence_step ? nlohmann::ordered_json(*s.divergence_step) : nullptr;
  sum["divergence_reason"] = s.divergence_reason;
  doc["summary"] = sum;
  return doc.dump(2) + "\n";
}

}  // namespace optlab
