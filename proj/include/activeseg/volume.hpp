#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "activeseg/error.hpp"

namespace activeseg {

/// Physical voxel size in millimeters.
struct Spacing {
    double dx = 1.0;
    double dy = 1.0;
    double dz = 1.0;

    bool valid() const noexcept { return dx > 0.0 && dy > 0.0 && dz > 0.0; }
    double voxel_volume() const noexcept { return dx * dy * dz; }
    double operator[](std::size_t axis) const noexcept { return axis == 0 ? dx : axis == 1 ? dy : dz; }
    bool operator==(const Spacing&) const = default;
};

struct Dims {
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::size_t nz = 0;

    std::size_t size() const noexcept { return nx * ny * nz; }
    std::size_t slice_size() const noexcept { return nx * ny; }
    std::size_t operator[](std::size_t axis) const noexcept { return axis == 0 ? nx : axis == 1 ? ny : nz; }
    bool operator==(const Dims&) const = default;
};

/// Dense 3D grid stored x-fastest, z-slowest.
template <typename T>
class Volume {
public:
    using value_type = T;

    Volume() = default;

    Volume(Dims dims, Spacing spacing, T fill = T{})
        : dims_(dims), spacing_(spacing), data_(dims.size(), fill) {
        check_geometry();
    }

    Volume(Dims dims, Spacing spacing, std::vector<T> data)
        : dims_(dims), spacing_(spacing), data_(std::move(data)) {
        check_geometry();
        if (data_.size() != dims_.size()) throw InvalidArgument("volume data length does not match dims");
    }

    const Dims& dims() const noexcept { return dims_; }
    const Spacing& spacing() const noexcept { return spacing_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    const std::vector<T>& values() const noexcept { return data_; }

    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return i + dims_.nx * (j + dims_.ny * k);
    }
    std::array<std::size_t, 3> coords(std::size_t idx) const noexcept {
        const std::size_t i = idx % dims_.nx;
        const std::size_t j = (idx / dims_.nx) % dims_.ny;
        return {i, j, idx / dims_.slice_size()};
    }

    T& operator()(std::size_t i, std::size_t j, std::size_t k) noexcept { return data_[index(i, j, k)]; }
    const T& operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept { return data_[index(i, j, k)]; }
    T& operator[](std::size_t idx) noexcept { return data_[idx]; }
    const T& operator[](std::size_t idx) const noexcept { return data_[idx]; }

    /// Values of z-slice k.
    std::span<const T> slice(std::size_t k) const noexcept {
        return std::span<const T>(data_).subspan(k * dims_.slice_size(), dims_.slice_size());
    }

    bool same_geometry(const Volume<T>& o) const noexcept { return dims_ == o.dims_ && spacing_ == o.spacing_; }
    template <typename U>
    bool same_geometry(const Volume<U>& o) const noexcept {
        return dims_ == o.dims() && spacing_ == o.spacing();
    }

    bool operator==(const Volume&) const = default;

private:
    void check_geometry() const {
        if (dims_.nx == 0 || dims_.ny == 0 || dims_.nz == 0) throw InvalidArgument("volume dims must be positive");
        if (!spacing_.valid()) throw InvalidArgument("volume spacing must be positive");
    }

    Dims dims_{};
    Spacing spacing_{};
    std::vector<T> data_;
};

using ScalarVolume = Volume<double>;
/// Binary mask: 0 background, 1 foreground.
using LabelVolume = Volume<std::uint8_t>;

struct Radius3 {
    std::size_t rx = 0;
    std::size_t ry = 0;
    std::size_t rz = 0;
};

/// Throws InvalidArgument if any voxel is not 0 or 1.
void require_binary(const LabelVolume& l, const char* what = "label volume");
bool all_finite(const ScalarVolume& v) noexcept;
std::size_t count_foreground(const LabelVolume& l) noexcept;

/// Output dims along one axis: round(n * in / out), at least 1.
std::size_t resampled_extent(std::size_t n, double in_spacing, double out_spacing);

/// Trilinear resampling on the voxel-center grid; out-of-range samples clamp to the edge.
ScalarVolume resample_trilinear(const ScalarVolume& v, const Spacing& target);

/// Nearest-neighbor resampling: each output center takes the input voxel that contains it.
LabelVolume resample_labels_nearest(const LabelVolume& v, const Spacing& target);

/// Box dilation with window (2rx+1) x (2ry+1) x (2rz+1).
LabelVolume dilate(const LabelVolume& l, Radius3 radius);

/// Mirror padding without repeating the edge sample: [a,b,c] pad 1 -> [b,a,b,c,b].
ScalarVolume pad_reflect(const ScalarVolume& v, std::array<std::size_t, 3> pads);

/// p >= threshold -> 1.
LabelVolume threshold(const ScalarVolume& v, double level = 0.5);

} // namespace activeseg
