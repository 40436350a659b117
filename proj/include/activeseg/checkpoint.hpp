#pragma once

#include <filesystem>
#include <string>

#include "activeseg/features.hpp"
#include "activeseg/mlp.hpp"

namespace activeseg {

struct Checkpoint {
    MlpParams params;
    FeatureConfig features;
    bool operator==(const Checkpoint&) const = default;
};

inline constexpr int checkpoint_version = 1;

/// JSON container: {"format", "version", "layer_sizes", "dropout_f64le",
/// "features", "parameters_f64le"}. Real values are stored as hex strings of
/// their little-endian IEEE-754 bytes so reads are bit-exact.
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Lowercase hex of the little-endian bytes of each double.
std::string f64le_hex(std::span<const double> values);
std::vector<double> f64le_unhex(const std::string& hex, const std::string& field);

} // namespace activeseg
