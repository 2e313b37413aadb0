#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "json.hpp"
#include "pcd/distill.hpp"
#include "pcd/evalh.hpp"
#include "pcd/pcdata.hpp"

namespace pcd {

inline constexpr std::string_view kToolVersion = "1.0.0";

// Flat `key = value` configuration with `#` comments.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(std::string_view text);
std::string format_config(const ConfigMap& cfg);
// Later entries win.
ConfigMap merge(ConfigMap base, const ConfigMap& overlay);

// Apply keys to the typed configs. Every key must be consumed by one of the
// targets; anything left over is rejected as unknown.
void apply_config(const ConfigMap& cfg, ToySpec* toy, DistillConfig* distill, EvalConfig* eval);

// Fully materialized key sets (every default spelled out).
ConfigMap to_config_map(const ToySpec& toy);
ConfigMap to_config_map(const DistillConfig& distill);
ConfigMap to_config_map(const EvalConfig& eval);

// Shortest text that parses back to the same double.
std::string format_double(double v);

std::uint64_t fnv1a64(std::string_view bytes);
std::string digest_hex(std::string_view bytes);

struct RunManifest {
  std::string command;
  ConfigMap config;
  nlohmann::json inputs = nlohmann::json::object();   // path -> digest
  nlohmann::json outputs = nlohmann::json::object();  // path -> digest
  nlohmann::json extra = nlohmann::json::object();
  double wall_seconds = 0.0;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

}  // namespace pcd
