#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "activeseg/volume.hpp"

namespace activeseg {

/// Row-major dense matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) noexcept { return values[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return values[r * cols + c]; }
    std::span<double> row(std::size_t r) noexcept { return std::span<double>(values).subspan(r * cols, cols); }
    std::span<const double> row(std::size_t r) const noexcept {
        return std::span<const double>(values).subspan(r * cols, cols);
    }
};

/// Hand-crafted per-voxel features standing in for learned convolutions.
struct FeatureConfig {
    /// Odd box-window sizes in voxels; window 1 is the voxel itself.
    std::vector<std::size_t> box_scales{1, 3, 7, 15};
    bool include_raw = false;
    bool include_z = false;
    /// Intensities are mapped to (x - shift) / scale before use.
    double shift = 75.0;
    double scale = 50.0;

    void validate() const;
    std::size_t width() const noexcept;
    bool operator==(const FeatureConfig&) const = default;
};

/**
 * Per-voxel feature rows for one volume:
 *   [normalized raw?] [box mean at each scale...] [z / nz?]
 *
 * Box means are taken over the window clipped to the volume, via a summed
 * volume table so each row costs O(#scales) regardless of window size.
 */
class FeatureExtractor {
public:
    FeatureExtractor(const ScalarVolume& v, FeatureConfig cfg);

    std::size_t width() const noexcept { return width_; }
    std::size_t voxel_count() const noexcept { return dims_.size(); }
    const FeatureConfig& config() const noexcept { return cfg_; }

    void row(std::size_t voxel, std::span<double> out) const;
    Matrix rows(std::span<const std::size_t> voxels) const;
    /// Every voxel in storage order.
    Matrix dense() const;

private:
    double box_mean(std::size_t i, std::size_t j, std::size_t k, std::size_t half) const noexcept;

    FeatureConfig cfg_;
    Dims dims_;
    std::size_t width_;
    std::vector<double> raw_;
    std::vector<double> table_; // (nx+1)(ny+1)(nz+1) inclusive prefix sums
};

Matrix extract_features(const ScalarVolume& v, const FeatureConfig& cfg, std::span<const std::size_t> voxels);

} // namespace activeseg
