#include "optlab/presets.hpp"

#include <algorithm>
#include <cctype>

#include "optlab/error.hpp"

namespace optlab {

extern const char* const kEmbeddedPresets;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<Preset> parse_presets(std::string_view text, std::string_view source) {
  std::vector<Preset> out;
  int line_no = 0;
  bool expect_description = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view raw = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    const std::string prefix = std::string(source) + ":" + std::to_string(line_no) + ": ";
    if (!raw.empty() && raw.front() == '[') {
      if (raw.back() != ']' || raw.size() < 3) throw ConfigError(prefix + "malformed preset header");
      Preset p;
      p.name = std::string(trim(raw.substr(1, raw.size() - 2)));
      if (std::any_of(out.begin(), out.end(), [&](const Preset& q) { return q.name == p.name; })) {
        throw ConfigError(prefix + "duplicate preset '" + p.name + "'");
      }
      out.push_back(std::move(p));
      expect_description = true;
      continue;
    }
    if (!raw.empty() && raw.front() == '#') {
      if (expect_description) out.back().description = std::string(trim(raw.substr(1)));
      expect_description = false;
      continue;
    }
    expect_description = false;
    if (raw.empty()) continue;
    if (out.empty()) throw ConfigError(prefix + "assignment outside a preset section");
    auto entries = parse_config_text(raw, source);
    for (auto& e : entries) {
      e.line = line_no;
      if (canonical_key(e.key) == "preset") throw ConfigError(prefix + "presets cannot include presets");
      out.back().entries.push_back(std::move(e));
    }
  }
  for (const auto& p : out) {
    const bool named = std::any_of(p.entries.begin(), p.entries.end(),
                                   [](const ConfigEntry& e) { return canonical_key(e.key) == "optimizer.name"; });
    if (!named) throw ConfigError(std::string(source) + ": preset '" + p.name + "' does not set optimizer.name");
  }
  return out;
}

const std::vector<Preset>& builtin_presets() {
  static const std::vector<Preset> presets = parse_presets(kEmbeddedPresets, "presets.txt");
  return presets;
}

const Preset* find_preset(std::string_view name) {
  for (const auto& p : builtin_presets()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

}  // namespace optlab
