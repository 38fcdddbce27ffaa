#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "tnfcm/common.hpp"

namespace tnfcm::cli {

/// Hex SHA-256 of a file's bytes.
inline std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path.string() + " for hashing");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
        EVP_MD_CTX_free(ctx);
        throw Error("SHA-256 unavailable");
    }
    std::vector<char> buf(1 << 16);
    while (is) {
        is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (is.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(is.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

/// Writes `text` to `path` via a temporary file and a rename.
inline void write_atomically(const std::filesystem::path& path, const std::string& text) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot open " + tmp.string() + " for writing");
        os << text;
        if (!os) throw Error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

struct RunManifest {
    std::string command;
    nlohmann::ordered_json flags = nlohmann::ordered_json::object();
    nlohmann::ordered_json seeds = nlohmann::ordered_json::object();
    std::vector<std::filesystem::path> inputs;
    std::vector<std::filesystem::path> outputs;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["command"] = command;
        j["flags"] = flags;
        j["seeds"] = seeds;
        auto in = nlohmann::ordered_json::array();
        for (const auto& p : inputs) in.push_back(p.string());
        j["inputs"] = in;
        auto out = nlohmann::ordered_json::array();
        auto digests = nlohmann::ordered_json::object();
        for (const auto& p : outputs) {
            out.push_back(p.string());
            digests[p.string()] = sha256_file(p);
        }
        j["outputs"] = out;
        j["digests"] = digests;
        j["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        return j;
    }

    void write(const std::filesystem::path& path) const { write_atomically(path, to_json().dump(2) + "\n"); }
};

}  // namespace tnfcm::cli
