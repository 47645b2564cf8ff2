#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace spdelab {

using Json = nlohmann::json;

/// FNV-1a 64-bit hash of a byte string.
std::uint64_t fnv1a(const std::string& data);

/// Hash of a JSON value's canonical dump (object keys are sorted, so the
/// hash does not depend on field order in the source file).
std::uint64_t config_hash(const Json& j);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// Strict-schema helper: throws std::invalid_argument naming the offending
/// key if `j` contains a key outside `allowed`.
void require_keys(const Json& j, const std::vector<std::string>& allowed,
                  const std::string& context);

/// Self-describing record of one run: enough to reproduce it byte for byte.
struct RunManifest {
    std::string command;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string artifact_version;
    std::vector<std::string> outputs;
    double wall_seconds = 0.0;
    Json diagnostics;

    Json to_json() const;
};

/// Writes `<out_dir>/manifest.json`; verifies every listed output exists.
void write_manifest(const std::string& out_dir, const RunManifest& manifest);

} // namespace spdelab
