#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "activeseg/learner.hpp"
#include "activeseg/volume.hpp"

namespace activeseg {

/// n dropout-on predictions of the same volume.
struct McSampleSet {
    std::uint64_t seed = 0;
    std::vector<ProbVolume> samples;
    std::size_t n() const noexcept { return samples.size(); }
};

/// Voxel-wise predictive entropy in nats, within [0, ln 2].
using EntropyVolume = ScalarVolume;

inline constexpr std::size_t default_mc_samples = 20;
inline constexpr std::size_t default_peak_distance = 5;
inline constexpr Radius3 default_uncertainty_dilation{5, 5, 5}; // 11 x 11 x 11 window

/**
 * MC dropout inference. Sample k draws its masks from
 * derive_rng(seed, {"mc-dropout", k}); the mask bits of voxel r are words
 * r * ceil(H / 4) ... of that stream, four 16-bit lanes per word, a unit being
 * dropped when its lane is below round(p * 65536). Masks are therefore
 * addressed by (seed, k, voxel) and independent of evaluation order.
 */
McSampleSet mc_sample(const MlpParams& params, const ScalarVolume& v, const FeatureConfig& cfg, std::size_t n,
                      std::uint64_t seed);

/// Entropy of the mean class distribution: -sum_c m_c ln m_c, with 0 ln 0 = 0.
double entropy_of_mean(std::span<const double> liver_probs);

EntropyVolume predictive_entropy(const McSampleSet& s);

struct VolumeUncertainty {
    double value = 0.0;
    /// The dilated mask was empty, so the mean was taken over all voxels.
    bool fell_back_to_all_voxels = false;
};

/// Mean entropy inside the dilated predicted mask.
VolumeUncertainty volume_uncertainty(const EntropyVolume& e, const LabelVolume& predicted_mask,
                                     Radius3 dilation = default_uncertainty_dilation);

struct SliceUncertaintyProfile {
    std::vector<double> values;       // mean entropy of each z-slice
    std::vector<std::size_t> peaks;   // ascending slice indices
};

/// values[z] = mean entropy over all voxels of slice z. Peaks left empty.
SliceUncertaintyProfile slice_uncertainty_profile(const EntropyVolume& e);

/**
 * Local maxima separated by at least min_distance.
 *
 * A candidate is the leftmost index of a run of equal values whose neighbors
 * (where they exist) are both strictly smaller. Candidates are accepted in
 * order of decreasing value (ties: lower index first) unless closer than
 * min_distance to an accepted one. Output is ascending.
 */
std::vector<std::size_t> find_peaks(std::span<const double> values, std::size_t min_distance = default_peak_distance);

} // namespace activeseg
