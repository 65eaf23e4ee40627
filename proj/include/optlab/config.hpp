#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "optlab/harness.hpp"

namespace optlab {

/// One `key = value` assignment with where it came from, for diagnostics.
struct ConfigEntry {
  std::string key;
  std::string value;
  std::string source;
  int line = 0;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Splits `key = value` lines without checking the keys.
std::vector<ConfigEntry> parse_assignments(std::string_view text, std::string_view source);

/// Parses the flat dotted text format. `#` starts a comment, blank lines are
/// ignored, `[name]` headers are rejected. Throws ConfigError "source:line: ...".
std::vector<ConfigEntry> parse_config_text(std::string_view text, std::string_view source = "<config>");

/// Accepts a flat JSON object, or a run summary with a "config" object.
std::vector<ConfigEntry> parse_config_json(std::string_view text, std::string_view source = "<json>");

/// Dispatches on the first non-space character: `{` means JSON.
std::vector<ConfigEntry> parse_config_any(std::string_view text, std::string_view source);

/// Parses a single `key=value` override as given on the command line.
ConfigEntry parse_override(std::string_view assignment);

/// Bare keys (`lr`) address the optimizer section (`optimizer.lr`).
std::string canonical_key(std::string_view key);

bool is_known_config_key(std::string_view key);
std::vector<std::string> known_config_keys();

/// Sets one field. Throws ConfigError naming the key for unknown keys or bad values.
void apply_config_key(RunConfig& config, std::string_view key, std::string_view value);

/// Resolution: defaults for optimizer.name, then the preset's entries, then
/// every other entry in order. schedule.final_lr_factor falls back to the
/// family default when nobody sets it. The result is validated.
RunConfig resolve_config(const std::vector<ConfigEntry>& entries);

/// Fully resolved config as ordered key/value text; resolve_config of this
/// reproduces the same config.
KeyValues to_key_values(const RunConfig& config);
std::string to_config_text(const RunConfig& config);

/// Stable FNV-1a hash of the resolved key/value text.
std::uint64_t config_hash(const RunConfig& config);

/// JSON summary document: resolved config, the overrides that were applied
/// on top of the config file, and the RunSummary.
std::string to_json_summary(const RunRecord& record, const std::vector<std::string>& overrides = {});

}  // namespace optlab
