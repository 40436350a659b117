#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "activeseg/sampling.hpp"

namespace activeseg {

enum class Split { pool, val, test };

const char* split_name(Split s) noexcept;
Split parse_split(const std::string& name);

struct ManifestEntry {
    std::size_t id = 0; // index within its split
    std::string name;
    Split split = Split::pool;
    std::string image; // paths relative to the manifest's directory
    std::string label;
    std::uint64_t seed = 0;
    bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
    std::uint64_t seed = 0;
    std::vector<ManifestEntry> volumes;

    std::vector<ManifestEntry> in_split(Split s) const;
    bool operator==(const Manifest&) const = default;
};

nlohmann::json manifest_to_json(const Manifest& m);
/// Throws ParseError naming the offending field.
Manifest manifest_from_json(const nlohmann::json& j);
void save_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest load_manifest(const std::filesystem::path& path);

/// Annotation state of one strategy arm at an iteration boundary.
nlohmann::json pool_state_to_json(const PoolState& pool, const std::string& strategy, std::size_t iteration);

struct RestoredPoolState {
    std::string strategy;
    std::size_t iteration = 0;
};

/// Replays a saved annotation state onto a fresh pool built from the same
/// references. Throws ParseError if the file does not match the pool or the
/// stored ledger disagrees with the replayed one.
RestoredPoolState restore_pool_state(const nlohmann::json& j, PoolState& fresh_pool);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

} // namespace activeseg
