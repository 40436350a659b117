#include "activeseg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "activeseg/rng.hpp"

namespace activeseg {

namespace {

constexpr double organ_margin = 2.0;

void check_range(const RealRange& r, double min_lo, const char* name) {
    if (!(r.lo >= min_lo) || !(r.hi >= r.lo)) throw InvalidArgument(std::string("phantom: invalid range ") + name);
}

struct Ellipsoid {
    double cx, cy, cz;
    double a, b, c;
};

} // namespace

void PhantomSpec::validate() const {
    if (dims.nx == 0 || dims.ny == 0 || dims.nz == 0) throw InvalidArgument("phantom: dims must be positive");
    if (!spacing.valid()) throw InvalidArgument("phantom: spacing must be positive");
    if (organ_count_min < 1 || organ_count_max < organ_count_min)
        throw InvalidArgument("phantom: organ count range must satisfy 1 <= min <= max");
    if (lesion_count_max < lesion_count_min) throw InvalidArgument("phantom: lesion count range inverted");
    check_range(semi_axis_x, 1.0, "semi_axis_x");
    check_range(semi_axis_y, 1.0, "semi_axis_y");
    check_range(semi_axis_z, 1.0, "semi_axis_z");
    check_range(lesion_radius, 0.0, "lesion_radius");
    const RealRange* axes[3] = {&semi_axis_x, &semi_axis_y, &semi_axis_z};
    for (std::size_t a = 0; a < 3; ++a) {
        // Center range [hi + margin, n - 1 - hi - margin] must be nonempty.
        if (2.0 * (axes[a]->hi + organ_margin) > static_cast<double>(dims[a]) - 1.0)
            throw InvalidArgument("phantom: organ does not fit inside dims with a 2-voxel margin");
    }
    if (background_sd < 0 || organ_sd < 0 || lesion_sd < 0) throw InvalidArgument("phantom: negative SD");
    if (smoothing_sigma < 0) throw InvalidArgument("phantom: negative smoothing sigma");
    if (intensity_jitter < 0) throw InvalidArgument("phantom: negative intensity jitter");
}

ScalarVolume gaussian_smooth(const ScalarVolume& v, double sigma) {
    if (sigma <= 0.0) return v;
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
        const double w = std::exp(-0.5 * static_cast<double>(t * t) / (sigma * sigma));
        kernel[static_cast<std::size_t>(t + radius)] = w;
        total += w;
    }
    for (double& w : kernel) w /= total;

    const Dims d = v.dims();
    const std::size_t stride[3] = {1, d.nx, d.nx * d.ny};
    ScalarVolume cur = v;
    for (std::size_t axis = 0; axis < 3; ++axis) {
        const auto n = static_cast<std::ptrdiff_t>(d[axis]);
        const std::size_t s = stride[axis];
        ScalarVolume next(d, v.spacing());
        for (std::size_t idx = 0; idx < cur.size(); ++idx) {
            const auto pos = static_cast<std::ptrdiff_t>((idx / s) % d[axis]);
            const std::size_t base = idx - static_cast<std::size_t>(pos) * s;
            double acc = 0.0;
            for (std::ptrdiff_t t = -radius; t <= radius; ++t) {
                const std::ptrdiff_t p = std::clamp<std::ptrdiff_t>(pos + t, 0, n - 1);
                acc += kernel[static_cast<std::size_t>(t + radius)] * cur[base + static_cast<std::size_t>(p) * s];
            }
            next[idx] = acc;
        }
        cur = std::move(next);
    }
    return cur;
}

Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed) {
    spec.validate();
    const Dims d = spec.dims;
    RngStream organ_rng = derive_rng(seed, {"phantom", "organ"});
    RngStream lesion_rng = derive_rng(seed, {"phantom", "lesion"});
    RngStream noise_rng = derive_rng(seed, {"phantom", "noise"});

    // Organ: union of ellipsoids, lobes anchored near the first one.
    const auto organ_count = static_cast<std::size_t>(
        organ_rng.uniform_int(static_cast<std::int64_t>(spec.organ_count_min),
                              static_cast<std::int64_t>(spec.organ_count_max)));
    std::vector<Ellipsoid> lobes;
    for (std::size_t e = 0; e < organ_count; ++e) {
        Ellipsoid el{};
        el.a = organ_rng.uniform(spec.semi_axis_x.lo, spec.semi_axis_x.hi);
        el.b = organ_rng.uniform(spec.semi_axis_y.lo, spec.semi_axis_y.hi);
        el.c = organ_rng.uniform(spec.semi_axis_z.lo, spec.semi_axis_z.hi);
        const double semi[3] = {el.a, el.b, el.c};
        double center[3];
        for (std::size_t a = 0; a < 3; ++a) {
            const double lo = semi[a] + organ_margin;
            const double hi = static_cast<double>(d[a]) - 1.0 - semi[a] - organ_margin;
            double c = organ_rng.uniform(lo, hi);
            if (e > 0) {
                const double anchor[3] = {lobes[0].cx, lobes[0].cy, lobes[0].cz};
                const double reach[3] = {lobes[0].a, lobes[0].b, lobes[0].c};
                c = std::clamp(anchor[a] + (2.0 * organ_rng.uniform01() - 1.0) * 0.8 * reach[a], lo, hi);
            }
            center[a] = c;
        }
        el.cx = center[0];
        el.cy = center[1];
        el.cz = center[2];
        lobes.push_back(el);
    }

    LabelVolume label(d, spec.spacing);
    for (std::size_t k = 0; k < d.nz; ++k)
        for (std::size_t j = 0; j < d.ny; ++j)
            for (std::size_t i = 0; i < d.nx; ++i) {
                for (const Ellipsoid& el : lobes) {
                    const double x = (static_cast<double>(i) - el.cx) / el.a;
                    const double y = (static_cast<double>(j) - el.cy) / el.b;
                    const double z = (static_cast<double>(k) - el.cz) / el.c;
                    if (x * x + y * y + z * z <= 1.0) {
                        label(i, j, k) = 1;
                        break;
                    }
                }
            }

    std::vector<std::size_t> organ_voxels;
    for (std::size_t idx = 0; idx < label.size(); ++idx)
        if (label[idx]) organ_voxels.push_back(idx);
    if (organ_voxels.empty()) throw InvalidArgument("phantom: organ ellipsoids contain no voxel centers");

    // Lesions: spheres centered on organ voxels, clipped to the organ.
    std::vector<std::uint8_t> lesion(d.size(), 0);
    const auto lesion_count = static_cast<std::size_t>(
        lesion_rng.uniform_int(static_cast<std::int64_t>(spec.lesion_count_min),
                               static_cast<std::int64_t>(spec.lesion_count_max)));
    for (std::size_t l = 0; l < lesion_count; ++l) {
        const auto c = label.coords(organ_voxels[lesion_rng.uniform_index(organ_voxels.size())]);
        const double r = lesion_rng.uniform(spec.lesion_radius.lo, spec.lesion_radius.hi);
        const auto ri = static_cast<std::ptrdiff_t>(std::ceil(r));
        for (std::ptrdiff_t dk = -ri; dk <= ri; ++dk)
            for (std::ptrdiff_t dj = -ri; dj <= ri; ++dj)
                for (std::ptrdiff_t di = -ri; di <= ri; ++di) {
                    if (static_cast<double>(di * di + dj * dj + dk * dk) > r * r) continue;
                    const std::ptrdiff_t i = static_cast<std::ptrdiff_t>(c[0]) + di;
                    const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(c[1]) + dj;
                    const std::ptrdiff_t k = static_cast<std::ptrdiff_t>(c[2]) + dk;
                    if (i < 0 || j < 0 || k < 0 || i >= static_cast<std::ptrdiff_t>(d.nx) ||
                        j >= static_cast<std::ptrdiff_t>(d.ny) || k >= static_cast<std::ptrdiff_t>(d.nz))
                        continue;
                    const std::size_t idx = label.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                                                        static_cast<std::size_t>(k));
                    if (label[idx]) lesion[idx] = 1;
                }
    }

    const double shift = spec.intensity_jitter > 0.0 ? noise_rng.uniform(-spec.intensity_jitter, spec.intensity_jitter)
                                                     : 0.0;
    ScalarVolume image(d, spec.spacing);
    for (std::size_t idx = 0; idx < image.size(); ++idx) {
        double mean = spec.background_mean, sd = spec.background_sd;
        if (lesion[idx]) {
            mean = spec.lesion_mean;
            sd = spec.lesion_sd;
        } else if (label[idx]) {
            mean = spec.organ_mean;
            sd = spec.organ_sd;
        }
        image[idx] = mean + shift + (sd > 0.0 ? sd * noise_rng.normal() : 0.0);
    }
    image = gaussian_smooth(image, spec.smoothing_sigma);
    // Store float-representable intensities so MET_FLOAT files round-trip exactly.
    for (double& x : image.data()) x = static_cast<double>(static_cast<float>(x));
    return {std::move(image), std::move(label)};
}

} // namespace activeseg
