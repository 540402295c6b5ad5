#include "imagine/cli/manifest.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "imagine/core/binary_io.hpp"
#include "imagine/core/digest.hpp"
#include "imagine/core/errors.hpp"

#ifndef IMAGINE_RL_VERSION
#define IMAGINE_RL_VERSION "0.1.0"
#endif

namespace imagine::cli {

using nlohmann::json;

namespace {

json refs_to_json(const std::vector<ArtifactRef>& refs) {
  json out = json::array();
  for (const auto& r : refs) out.push_back({{"path", r.path}, {"sha256", r.sha256}});
  return out;
}

std::vector<ArtifactRef> refs_from_json(const json& j) {
  std::vector<ArtifactRef> out;
  for (const auto& r : j) out.push_back({r.at("path").get<std::string>(), r.at("sha256").get<std::string>()});
  return out;
}

}  // namespace

const std::string& RunManifest::config_value(const std::string& key) const {
  const auto it = config.find(key);
  if (it == config.end()) throw ConfigError("manifest for '" + subcommand + "' lacks config key '" + key + "'");
  return it->second;
}

std::string version_string() { return IMAGINE_RL_VERSION; }

std::string manifest_to_json(const RunManifest& m) {
  json j;
  j["subcommand"] = m.subcommand;
  j["version"] = m.version;
  j["seed"] = m.seed;
  j["config"] = m.config;
  j["inputs"] = refs_to_json(m.inputs);
  j["outputs"] = refs_to_json(m.outputs);
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    RunManifest m;
    m.subcommand = j.at("subcommand").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config = j.at("config").get<std::map<std::string, std::string>>();
    m.inputs = refs_from_json(j.at("inputs"));
    m.outputs = refs_from_json(j.at("outputs"));
    return m;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed manifest: ") + e.what());
  }
}

void write_manifest(const std::filesystem::path& dir, RunManifest manifest, const std::vector<std::string>& outputs) {
  manifest.outputs.clear();
  for (const auto& rel : outputs) manifest.outputs.push_back({rel, sha256_file(dir / rel)});
  const std::string text = manifest_to_json(manifest);
  write_file_bytes(dir / kManifestName, std::as_bytes(std::span(text.data(), text.size())));
}

RunManifest load_verified_manifest(const std::filesystem::path& dir, const std::string& producer) {
  const auto path = dir / kManifestName;
  if (!std::filesystem::exists(path)) throw MissingArtifact(path.string(), producer);
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  RunManifest m = manifest_from_json(buffer.str());
  for (const auto& out : m.outputs) {
    const auto file = dir / out.path;
    if (!std::filesystem::exists(file)) throw MissingArtifact(file.string(), producer);
    if (sha256_file(file) != out.sha256) {
      throw IoError("digest mismatch for '" + file.string() + "'; the artifact changed after " + producer +
                    " wrote it");
    }
  }
  return m;
}

ArtifactRef input_ref(const std::filesystem::path& path) { return {path.string(), sha256_file(path)}; }

}  // namespace imagine::cli
