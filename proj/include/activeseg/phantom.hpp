#pragma once

#include <cstdint>

#include "activeseg/volume.hpp"

namespace activeseg {

struct RealRange {
    double lo = 0.0;
    double hi = 0.0;
};

/// Parameters of a synthetic abdominal phantom: a union of ellipsoids (the
/// "organ") with spherical lesions of different intensity inside it.
struct PhantomSpec {
    Dims dims{64, 64, 48};
    Spacing spacing{1.0, 1.0, 1.5};

    std::size_t organ_count_min = 1;
    std::size_t organ_count_max = 3;
    // Semi-axis ranges in voxels.
    RealRange semi_axis_x{9.0, 16.0};
    RealRange semi_axis_y{8.0, 14.0};
    RealRange semi_axis_z{6.0, 12.0};

    std::size_t lesion_count_min = 0;
    std::size_t lesion_count_max = 3;
    RealRange lesion_radius{2.0, 4.0};

    double background_mean = 40.0;
    double organ_mean = 110.0;
    double lesion_mean = 70.0;
    double background_sd = 15.0;
    double organ_sd = 15.0;
    double lesion_sd = 15.0;

    // Per-phantom uniform shift of all region means in [-jitter, +jitter],
    // mimicking scanner-to-scanner calibration differences. 0 disables it.
    double intensity_jitter = 0.0;

    /// Gaussian smoothing sigma in voxels; 0 disables smoothing.
    double smoothing_sigma = 1.0;

    /// Throws InvalidArgument on a spec that cannot produce a valid phantom.
    void validate() const;
};

struct Phantom {
    ScalarVolume image;
    LabelVolume label;
};

/// Pure function of (spec, seed). Organ geometry is drawn before lesions, so
/// the label does not depend on the lesion settings.
Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed);

/// Separable Gaussian blur (sigma in voxels, kernel radius ceil(3 sigma), edge clamped).
ScalarVolume gaussian_smooth(const ScalarVolume& v, double sigma);

} // namespace activeseg
