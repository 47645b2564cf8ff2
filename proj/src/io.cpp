#include "spdelab/io.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace spdelab {

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t config_hash(const Json& j) { return fnv1a(j.dump()); }

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

void require_keys(const Json& j, const std::vector<std::string>& allowed,
                  const std::string& context) {
    if (!j.is_object())
        throw std::invalid_argument(context + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const auto& k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw std::invalid_argument(context + ": unknown key '" + it.key() + "'");
    }
}

Json RunManifest::to_json() const {
    Json j;
    j["command"] = command;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["artifact_version"] = artifact_version;
    j["outputs"] = outputs;
    j["wall_seconds"] = wall_seconds;
    j["diagnostics"] = diagnostics;
    return j;
}

void write_manifest(const std::string& out_dir, const RunManifest& manifest) {
    for (const auto& f : manifest.outputs) {
        std::filesystem::path p = std::filesystem::path(out_dir) / f;
        if (!std::filesystem::exists(p))
            throw std::runtime_error("manifest lists a missing output: " + p.string());
    }
    std::filesystem::path p = std::filesystem::path(out_dir) / "manifest.json";
    write_text_file(p.string(), manifest.to_json().dump(2) + "\n");
}

} // namespace spdelab
