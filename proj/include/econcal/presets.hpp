#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace econcal {

struct PresetInfo {
  std::string name;
  std::string description;
};

std::vector<PresetInfo> list_presets();

/// Complete runnable config. Throws ConfigError for an unknown name.
nlohmann::json emit_preset(const std::string& name);

}  // namespace econcal
