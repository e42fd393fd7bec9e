#pragma once

// Pipeline manifest: one JSON file per output directory recording, for every
// stage run, its configuration, seed, input/output checksums and timing.
// Later stages compare recorded checksums against the files they read and
// flag stale artifacts.

#include <chrono>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "reportvec/errors.hpp"

namespace rvec {

inline std::uint64_t fnv1a_file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path + " for checksum");
    std::uint64_t hash = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 0x100000001b3ull;
        }
        if (!in) break;
    }
    return hash;
}

inline std::string checksum_hex(std::uint64_t hash) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

class PipelineManifest {
public:
    explicit PipelineManifest(std::string path) : path_(std::move(path)) {
        std::ifstream in(path_);
        if (in) {
            try {
                in >> doc_;
            } catch (const nlohmann::json::exception&) {
                doc_ = nlohmann::ordered_json::object(); // corrupt manifests start over
            }
        }
        if (!doc_.is_object()) doc_ = nlohmann::ordered_json::object();
        if (!doc_.contains("stages")) doc_["stages"] = nlohmann::ordered_json::object();
    }

    // Checksum mismatch between a recorded artifact and the file now on disk.
    std::vector<std::string> stale_inputs(const std::vector<std::string>& input_paths) const {
        std::vector<std::string> stale;
        for (const auto& path : input_paths) {
            const auto recorded = recorded_checksum(path);
            if (recorded.empty()) continue;
            if (recorded != checksum_hex(fnv1a_file_checksum(path))) stale.push_back(path);
        }
        return stale;
    }

    void record_stage(const std::string& stage, const nlohmann::ordered_json& config,
                      std::uint64_t seed, const std::vector<std::string>& input_paths,
                      const std::vector<std::string>& output_paths, double elapsed_ms) {
        nlohmann::ordered_json entry;
        entry["seed"] = seed;
        entry["config"] = config;
        entry["inputs"] = nlohmann::ordered_json::object();
        for (const auto& p : input_paths) {
            entry["inputs"][p] = checksum_hex(fnv1a_file_checksum(p));
        }
        entry["outputs"] = nlohmann::ordered_json::object();
        for (const auto& p : output_paths) {
            entry["outputs"][p] = checksum_hex(fnv1a_file_checksum(p));
        }
        entry["elapsed_ms"] = elapsed_ms;
        doc_["stages"][stage] = std::move(entry);
    }

    void save() const {
        std::ofstream out(path_, std::ios::binary);
        if (!out) throw io_error("cannot write " + path_);
        out << doc_.dump(2) << '\n';
    }

private:
    std::string recorded_checksum(const std::string& path) const {
        for (const auto& [name, entry] : doc_["stages"].items()) {
            if (entry.contains("outputs") && entry["outputs"].contains(path)) {
                return entry["outputs"][path].get<std::string>();
            }
        }
        return "";
    }

    std::string path_;
    nlohmann::ordered_json doc_;
};

} // namespace rvec
