#pragma once

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rclb/core.hpp"

namespace rclb {

inline std::string sha256_hex(const unsigned char* data, std::size_t size) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data, size, digest, &len, EVP_sha256(), nullptr))
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

inline std::string sha256_hex(const std::string& s) {
    return sha256_hex(reinterpret_cast<const unsigned char*>(s.data()), s.size());
}

inline std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error("cannot open " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_hex(data);
}

/// Artifact manifest: every output file with its content hash, plus the
/// config hash and code version. No timestamps, so identical runs produce
/// identical manifests.
struct Manifest {
    std::string config_hash;
    std::map<std::string, std::string> files;  // relative path -> sha256

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["schema"] = "rclb.manifest/1";
        j["code_version"] = kVersion;
        j["config_hash"] = config_hash;
        j["files"] = files;
        return j;
    }

    void write(const std::filesystem::path& dir) const {
        std::ofstream out(dir / "manifest.json", std::ios::binary);
        out << to_json().dump(2) << "\n";
    }

    static Manifest scan(const std::filesystem::path& dir, const std::string& config_hash) {
        Manifest m;
        m.config_hash = config_hash;
        for (auto it = std::filesystem::recursive_directory_iterator(dir);
             it != std::filesystem::recursive_directory_iterator(); ++it) {
            if (!it->is_regular_file()) continue;
            auto rel = std::filesystem::relative(it->path(), dir).generic_string();
            if (rel == "manifest.json") continue;
            if (rel.rfind("plots/", 0) == 0) continue;  // derived, not manifest-covered
            m.files[rel] = sha256_file(it->path());
        }
        return m;
    }

    static Manifest read(const std::filesystem::path& dir) {
        std::ifstream in(dir / "manifest.json");
        if (!in) throw parse_error("no manifest.json in " + dir.string());
        nlohmann::json j = nlohmann::json::parse(in);
        Manifest m;
        m.config_hash = j.at("config_hash").get<std::string>();
        for (const auto& [k, v] : j.at("files").items()) m.files[k] = v.get<std::string>();
        return m;
    }
};

/// Recomputes every listed hash; returns mismatches / missing / unlisted.
inline std::vector<std::string> verify_manifest(const std::filesystem::path& dir) {
    Manifest stored = Manifest::read(dir);
    std::vector<std::string> problems;
    for (const auto& [rel, hash] : stored.files) {
        auto p = dir / rel;
        if (!std::filesystem::exists(p)) {
            problems.push_back("missing: " + rel);
            continue;
        }
        if (sha256_file(p) != hash) problems.push_back("hash mismatch: " + rel);
    }
    auto rescanned = Manifest::scan(dir, stored.config_hash);
    for (const auto& [rel, hash] : rescanned.files)
        if (!stored.files.count(rel)) problems.push_back("unlisted file: " + rel);
    return problems;
}

}  // namespace rclb
