#include <cstdio>

#include "pcd/cli.hpp"

namespace pcd {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string digest_hex(std::string_view bytes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["tool"] = "pcdistill";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["config"] = config;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  for (const auto& [k, v] : extra.items()) j[k] = v;
  j["wall_seconds"] = wall_seconds;
  return j;
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config = j.at("config").get<ConfigMap>();
  if (j.contains("inputs")) m.inputs = j["inputs"];
  if (j.contains("outputs")) m.outputs = j["outputs"];
  if (j.contains("wall_seconds")) m.wall_seconds = j["wall_seconds"].get<double>();
  for (const auto& [k, v] : j.items())
    if (k != "tool" && k != "version" && k != "command" && k != "config" && k != "inputs" && k != "outputs" &&
        k != "wall_seconds")
      m.extra[k] = v;
  return m;
}

}  // namespace pcd
