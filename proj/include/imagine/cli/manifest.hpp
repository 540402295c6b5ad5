#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace imagine::cli {

struct ArtifactRef {
  std::string path;    // outputs: relative to the manifest's directory
  std::string sha256;
};

struct RunManifest {
  std::string subcommand;
  std::string version;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> config;
  std::vector<ArtifactRef> inputs;
  std::vector<ArtifactRef> outputs;

  const std::string& config_value(const std::string& key) const;  // throws ConfigError
};

inline constexpr const char* kManifestName = "manifest.json";

std::string version_string();

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const std::string& text);

// Digests every listed output relative to `dir` and writes dir/manifest.json.
void write_manifest(const std::filesystem::path& dir, RunManifest manifest, const std::vector<std::string>& outputs);

// Reads dir/manifest.json and verifies the output digests. Throws MissingArtifact
// (naming `producer`) when the directory or manifest is absent, IoError on mismatch.
RunManifest load_verified_manifest(const std::filesystem::path& dir, const std::string& producer);

ArtifactRef input_ref(const std::filesystem::path& path);

}  // namespace imagine::cli
