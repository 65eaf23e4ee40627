#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "optlab/config.hpp"

namespace optlab {

struct Preset {
  std::string name;  // "<optimizer>/<setting>"
  std::string description;
  std::vector<ConfigEntry> entries;
};

/// Registry parsed from the embedded presets file.
const std::vector<Preset>& builtin_presets();

/// Parses the registry format: `[name]` headers followed by `key = value`
/// lines; a `# ` comment directly after the header is its description.
std::vector<Preset> parse_presets(std::string_view text, std::string_view source);

/// nullptr when absent.
const Preset* find_preset(std::string_view name);

}  // namespace optlab
