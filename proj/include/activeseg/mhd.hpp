#pragma once

#include <filesystem>

#include "activeseg/volume.hpp"

namespace activeseg {

// MetaImage reader/writer. Files are written as a single file with
// ElementDataFile = LOCAL (header followed by the raw payload); detached
// header/payload pairs are accepted on read. Payload is little-endian,
// x-fastest.

enum class ElementType { uchar, float32, float64 };

const char* element_type_name(ElementType t) noexcept;

/// Scalar volumes default to MET_FLOAT (32-bit). Use float64 for a lossless
/// round trip of arbitrary doubles.
void write_mhd(const std::filesystem::path& path, const ScalarVolume& v, ElementType type = ElementType::float32);
void write_mhd(const std::filesystem::path& path, const LabelVolume& v);

/// Accepts MET_FLOAT, MET_DOUBLE and MET_UCHAR payloads.
ScalarVolume read_mhd_scalar(const std::filesystem::path& path);

/// Accepts MET_UCHAR only; every voxel must be 0 or 1.
LabelVolume read_mhd_label(const std::filesystem::path& path);

} // namespace activeseg
