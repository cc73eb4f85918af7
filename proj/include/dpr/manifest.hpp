#pragma once

// Reproducibility envelope written next to every artifact as <artifact>.manifest.json.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "dpr/error.hpp"
#include "dpr/io.hpp"

namespace dpr {

class StaleInput : public Error {
 public:
  using Error::Error;
};

struct RunManifest {
  std::string command;
  nlohmann::ordered_json config_snapshot = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_checksums;  // path -> checksum
  std::string tool_version;
  std::string created_at;
  std::optional<std::string> output_checksum;  // filled once the artifact is on disk
};

inline std::filesystem::path manifest_path(const std::filesystem::path& artifact) {
  auto p = artifact;
  p += ".manifest.json";
  return p;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::ordered_json manifest_to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["config"] = m.config_snapshot;
  j["seed"] = m.seed;
  j["input_checksums"] = m.input_checksums;
  j["tool_version"] = m.tool_version;
  j["created_at"] = m.created_at;
  j["output_checksum"] = m.output_checksum ? nlohmann::ordered_json(*m.output_checksum) : nullptr;
  return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.config_snapshot = j.at("config");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.input_checksums = j.at("input_checksums").get<std::map<std::string, std::string>>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.created_at = j.at("created_at").get<std::string>();
    if (!j.at("output_checksum").is_null()) m.output_checksum = j["output_checksum"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

inline void write_manifest(const std::filesystem::path& artifact, const RunManifest& m) {
  io::write_file(manifest_path(artifact), manifest_to_json(m).dump(2) + "\n");
}

inline std::optional<RunManifest> read_manifest(const std::filesystem::path& artifact) {
  const auto path = manifest_path(artifact);
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    return manifest_from_json(nlohmann::json::parse(io::read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("malformed manifest '" + path.string() + "': " + e.what());
  }
}

// Raises StaleInput when the artifact changed after its manifest was sealed, or
// when one of its recorded inputs has since changed on disk.
inline void verify_artifact(const std::filesystem::path& artifact) {
  const auto m = read_manifest(artifact);
  if (!m) return;
  if (m->output_checksum && *m->output_checksum != io::file_checksum(artifact)) {
    throw StaleInput("stale input: '" + artifact.string() + "' was modified after it was produced");
  }
  for (const auto& [path, sum] : m->input_checksums) {
    if (std::filesystem::exists(path) && io::file_checksum(path) != sum) {
      throw StaleInput("stale input: '" + artifact.string() + "' was built from '" + path +
                       "', which has changed since");
    }
  }
}

}  // namespace dpr
