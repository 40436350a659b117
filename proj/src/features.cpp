#include "activeseg/features.hpp"

#include <algorithm>
#include <string>

#include "activeseg/parallel.hpp"

namespace activeseg {

void FeatureConfig::validate() const {
    for (std::size_t s : box_scales)
        if (s == 0 || s % 2 == 0)
            throw InvalidArgument("feature config: box window size " + std::to_string(s) + " must be odd and >= 1");
    if (scale == 0.0) throw InvalidArgument("feature config: normalization scale must be nonzero");
    if (width() == 0) throw InvalidArgument("feature config: no features enabled");
}

std::size_t FeatureConfig::width() const noexcept {
    return box_scales.size() + (include_raw ? 1 : 0) + (include_z ? 1 : 0);
}

FeatureExtractor::FeatureExtractor(const ScalarVolume& v, FeatureConfig cfg)
    : cfg_(std::move(cfg)), dims_(v.dims()), width_(cfg_.width()), raw_(v.values()) {
    cfg_.validate();
    const std::size_t sx = dims_.nx + 1, sy = dims_.ny + 1, sz = dims_.nz + 1;
    table_.assign(sx * sy * sz, 0.0);
    auto at = [&](std::size_t i, std::size_t j, std::size_t k) -> double& { return table_[i + sx * (j + sy * k)]; };
    for (std::size_t k = 1; k < sz; ++k)
        for (std::size_t j = 1; j < sy; ++j)
            for (std::size_t i = 1; i < sx; ++i) {
                at(i, j, k) = v(i - 1, j - 1, k - 1) + at(i - 1, j, k) + at(i, j - 1, k) + at(i, j, k - 1) -
                              at(i - 1, j - 1, k) - at(i - 1, j, k - 1) - at(i, j - 1, k - 1) +
                              at(i - 1, j - 1, k - 1);
            }
}

double FeatureExtractor::box_mean(std::size_t i, std::size_t j, std::size_t k, std::size_t half) const noexcept {
    const std::size_t x0 = i >= half ? i - half : 0, x1 = std::min(dims_.nx, i + half + 1);
    const std::size_t y0 = j >= half ? j - half : 0, y1 = std::min(dims_.ny, j + half + 1);
    const std::size_t z0 = k >= half ? k - half : 0, z1 = std::min(dims_.nz, k + half + 1);
    const std::size_t sx = dims_.nx + 1, sy = dims_.ny + 1;
    auto at = [&](std::size_t a, std::size_t b, std::size_t c) { return table_[a + sx * (b + sy * c)]; };
    const double sum = at(x1, y1, z1) - at(x0, y1, z1) - at(x1, y0, z1) - at(x1, y1, z0) + at(x0, y0, z1) +
                       at(x0, y1, z0) + at(x1, y0, z0) - at(x0, y0, z0);
    const auto count = static_cast<double>((x1 - x0) * (y1 - y0) * (z1 - z0));
    return sum / count;
}

void FeatureExtractor::row(std::size_t voxel, std::span<double> out) const {
    if (voxel >= raw_.size()) throw InvalidArgument("extract_features: voxel index out of range");
    if (out.size() != width_) throw InvalidArgument("extract_features: output row has wrong width");
    const std::size_t i = voxel % dims_.nx;
    const std::size_t j = (voxel / dims_.nx) % dims_.ny;
    const std::size_t k = voxel / dims_.slice_size();
    std::size_t c = 0;
    auto norm = [this](double x) { return (x - cfg_.shift) / cfg_.scale; };
    if (cfg_.include_raw) out[c++] = norm(raw_[voxel]);
    for (std::size_t s : cfg_.box_scales) out[c++] = norm(s == 1 ? raw_[voxel] : box_mean(i, j, k, s / 2));
    if (cfg_.include_z) out[c++] = static_cast<double>(k) / static_cast<double>(dims_.nz);
}

Matrix FeatureExtractor::rows(std::span<const std::size_t> voxels) const {
    Matrix m(voxels.size(), width_);
    for (std::size_t r = 0; r < voxels.size(); ++r) row(voxels[r], m.row(r));
    return m;
}

Matrix FeatureExtractor::dense() const {
    Matrix m(raw_.size(), width_);
    parallel_chunks(raw_.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t v = b; v < e; ++v) row(v, m.row(v));
    });
    return m;
}

Matrix extract_features(const ScalarVolume& v, const FeatureConfig& cfg, std::span<const std::size_t> voxels) {
    return FeatureExtractor(v, cfg).rows(voxels);
}

} // namespace activeseg
