#include <openssl/evp.h>

#include <fstream>
#include <stdexcept>

#include "hlt/cli/cli.hpp"
#include "hlt/errors.hpp"

namespace hlt::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string git_blob_hash(const std::string& content) {
    const std::string header = "blob " + std::to_string(content.size()) + std::string(1, '\0');
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr) throw std::runtime_error("EVP_MD_CTX_new failed");
    const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                    EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                    EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                    EVP_DigestFinal_ex(ctx, digest, &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw std::runtime_error("SHA-1 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

json RunManifest::to_json() const {
    return {{"format", "hlt-run"},
            {"seed", seed},
            {"started_at", started_at},
            {"finished_at", finished_at},
            {"config_hash", config_hash},
            {"config", config},
            {"artifacts", artifacts}};
}

RunManifest RunManifest::from_json(const json& j) {
    try {
        if (j.at("format") != "hlt-run") throw CorruptArtifactError("not a run manifest");
        RunManifest m;
        m.seed = j.at("seed").get<std::uint64_t>();
        m.started_at = j.at("started_at").get<std::string>();
        m.finished_at = j.at("finished_at").get<std::string>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.config = j.at("config");
        m.artifacts = j.at("artifacts").get<std::vector<std::string>>();
        return m;
    } catch (const json::exception& e) {
        throw CorruptArtifactError(std::string("malformed run manifest: ") + e.what());
    }
}

void write_manifest(const fs::path& run_dir, const RunManifest& manifest) {
    const auto tmp = run_dir / "manifest.json.tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << manifest.to_json().dump(2) << "\n";
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, run_dir / "manifest.json");
}

RunManifest read_manifest(const fs::path& run_dir) {
    std::ifstream in(run_dir / "manifest.json", std::ios::binary);
    if (!in) throw CorruptArtifactError("missing " + (run_dir / "manifest.json").string());
    try {
        return RunManifest::from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw CorruptArtifactError(std::string("malformed run manifest: ") + e.what());
    }
}

fs::path default_analysis_dir(const fs::path& run_dir) {
    auto norm = fs::absolute(run_dir).lexically_normal();
    if (!norm.has_filename()) norm = norm.parent_path();
    return norm.parent_path() / (norm.filename().string() + "-analysis");
}

}  // namespace hlt::cli
