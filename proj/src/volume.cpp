#include "activeseg/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace activeseg {

void require_binary(const LabelVolume& l, const char* what) {
    for (std::size_t idx = 0; idx < l.size(); ++idx) {
        if (l[idx] > 1) {
            const auto c = l.coords(idx);
            throw InvalidArgument(std::string(what) + ": voxel (" + std::to_string(c[0]) + "," +
                                  std::to_string(c[1]) + "," + std::to_string(c[2]) + ") has value " +
                                  std::to_string(l[idx]) + ", expected 0 or 1");
        }
    }
}

bool all_finite(const ScalarVolume& v) noexcept {
    return std::all_of(v.data().begin(), v.data().end(), [](double x) { return std::isfinite(x); });
}

std::size_t count_foreground(const LabelVolume& l) noexcept {
    return static_cast<std::size_t>(std::count(l.data().begin(), l.data().end(), std::uint8_t{1}));
}

std::size_t resampled_extent(std::size_t n, double in_spacing, double out_spacing) {
    const double extent = static_cast<double>(n) * in_spacing / out_spacing;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(extent)));
}

namespace {

void check_target(const Spacing& target) {
    if (!target.valid()) throw InvalidArgument("resample: target spacing must be positive");
}

Dims target_dims(const Dims& d, const Spacing& in, const Spacing& out) {
    return {resampled_extent(d.nx, in.dx, out.dx), resampled_extent(d.ny, in.dy, out.dy),
            resampled_extent(d.nz, in.dz, out.dz)};
}

// Interpolation stencil along one axis: lower index, upper index and fraction.
struct Tap {
    std::size_t lo;
    std::size_t hi;
    double t;
};

std::vector<Tap> linear_taps(std::size_t n_out, double out_spacing, std::size_t n_in, double in_spacing) {
    std::vector<Tap> taps(n_out);
    const double last = static_cast<double>(n_in - 1);
    for (std::size_t i = 0; i < n_out; ++i) {
        const double phys = (static_cast<double>(i) + 0.5) * out_spacing;
        const double pos = std::clamp(phys / in_spacing - 0.5, 0.0, last);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, n_in - 1);
        taps[i] = {lo, hi, pos - static_cast<double>(lo)};
    }
    return taps;
}

std::vector<std::size_t> nearest_taps(std::size_t n_out, double out_spacing, std::size_t n_in, double in_spacing) {
    std::vector<std::size_t> taps(n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
        const double phys = (static_cast<double>(i) + 0.5) * out_spacing;
        const double cell = std::floor(phys / in_spacing);
        taps[i] = static_cast<std::size_t>(std::clamp(cell, 0.0, static_cast<double>(n_in - 1)));
    }
    return taps;
}

// a + t(b - a) keeps constant fields exact.
inline double lerp(double a, double b, double t) { return a + t * (b - a); }

} // namespace

ScalarVolume resample_trilinear(const ScalarVolume& v, const Spacing& target) {
    check_target(target);
    if (v.empty()) throw InvalidArgument("resample: empty volume");
    if (v.spacing() == target) return v;

    const Dims in = v.dims();
    const Dims out = target_dims(in, v.spacing(), target);
    const auto tx = linear_taps(out.nx, target.dx, in.nx, v.spacing().dx);
    const auto ty = linear_taps(out.ny, target.dy, in.ny, v.spacing().dy);
    const auto tz = linear_taps(out.nz, target.dz, in.nz, v.spacing().dz);

    ScalarVolume r(out, target);
    for (std::size_t k = 0; k < out.nz; ++k) {
        const Tap& z = tz[k];
        for (std::size_t j = 0; j < out.ny; ++j) {
            const Tap& y = ty[j];
            for (std::size_t i = 0; i < out.nx; ++i) {
                const Tap& x = tx[i];
                const double c00 = lerp(v(x.lo, y.lo, z.lo), v(x.hi, y.lo, z.lo), x.t);
                const double c10 = lerp(v(x.lo, y.hi, z.lo), v(x.hi, y.hi, z.lo), x.t);
                const double c01 = lerp(v(x.lo, y.lo, z.hi), v(x.hi, y.lo, z.hi), x.t);
                const double c11 = lerp(v(x.lo, y.hi, z.hi), v(x.hi, y.hi, z.hi), x.t);
                r(i, j, k) = lerp(lerp(c00, c10, y.t), lerp(c01, c11, y.t), z.t);
            }
        }
    }
    return r;
}

LabelVolume resample_labels_nearest(const LabelVolume& v, const Spacing& target) {
    check_target(target);
    if (v.empty()) throw InvalidArgument("resample: empty volume");
    if (v.spacing() == target) return v;

    const Dims in = v.dims();
    const Dims out = target_dims(in, v.spacing(), target);
    const auto tx = nearest_taps(out.nx, target.dx, in.nx, v.spacing().dx);
    const auto ty = nearest_taps(out.ny, target.dy, in.ny, v.spacing().dy);
    const auto tz = nearest_taps(out.nz, target.dz, in.nz, v.spacing().dz);

    LabelVolume r(out, target);
    for (std::size_t k = 0; k < out.nz; ++k)
        for (std::size_t j = 0; j < out.ny; ++j)
            for (std::size_t i = 0; i < out.nx; ++i) r(i, j, k) = v(tx[i], ty[j], tz[k]);
    return r;
}

LabelVolume dilate(const LabelVolume& l, Radius3 radius) {
    // Separable: a box OR equals three successive 1D running ORs.
    LabelVolume cur = l;
    const Dims d = l.dims();
    const std::array<std::size_t, 3> r{radius.rx, radius.ry, radius.rz};
    const std::array<std::size_t, 3> stride{1, d.nx, d.nx * d.ny};

    for (std::size_t axis = 0; axis < 3; ++axis) {
        if (r[axis] == 0) continue;
        const std::size_t n = d[axis];
        const std::size_t s = stride[axis];
        LabelVolume next(d, l.spacing());
        std::vector<std::size_t> prefix(n + 1);
        for (std::size_t base = 0; base < cur.size(); ++base) {
            if ((base / s) % n != 0) continue; // base must be the first element of a line
            prefix[0] = 0;
            for (std::size_t t = 0; t < n; ++t) prefix[t + 1] = prefix[t] + cur[base + t * s];
            for (std::size_t t = 0; t < n; ++t) {
                const std::size_t lo = t >= r[axis] ? t - r[axis] : 0;
                const std::size_t hi = std::min(n, t + r[axis] + 1);
                next[base + t * s] = prefix[hi] - prefix[lo] > 0 ? 1 : 0;
            }
        }
        cur = std::move(next);
    }
    return cur;
}

ScalarVolume pad_reflect(const ScalarVolume& v, std::array<std::size_t, 3> pads) {
    const Dims d = v.dims();
    for (std::size_t a = 0; a < 3; ++a)
        if (pads[a] >= d[a]) throw InvalidArgument("pad_reflect: pad must be smaller than the dimension");

    const Dims out{d.nx + 2 * pads[0], d.ny + 2 * pads[1], d.nz + 2 * pads[2]};
    auto source = [](std::size_t o, std::size_t pad, std::size_t n) {
        const auto p = static_cast<std::ptrdiff_t>(o) - static_cast<std::ptrdiff_t>(pad);
        const auto last = static_cast<std::ptrdiff_t>(n) - 1;
        if (p < 0) return static_cast<std::size_t>(-p);
        if (p > last) return static_cast<std::size_t>(2 * last - p);
        return static_cast<std::size_t>(p);
    };

    ScalarVolume r(out, v.spacing());
    for (std::size_t k = 0; k < out.nz; ++k) {
        const std::size_t sk = source(k, pads[2], d.nz);
        for (std::size_t j = 0; j < out.ny; ++j) {
            const std::size_t sj = source(j, pads[1], d.ny);
            for (std::size_t i = 0; i < out.nx; ++i) r(i, j, k) = v(source(i, pads[0], d.nx), sj, sk);
        }
    }
    return r;
}

LabelVolume threshold(const ScalarVolume& v, double level) {
    LabelVolume r(v.dims(), v.spacing());
    for (std::size_t idx = 0; idx < v.size(); ++idx) r[idx] = v[idx] >= level ? 1 : 0;
    return r;
}

} // namespace activeseg
