#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "activeseg/adam.hpp"
#include "activeseg/features.hpp"
#include "activeseg/mlp.hpp"
#include "activeseg/rng.hpp"
#include "activeseg/volume.hpp"

namespace activeseg {

/// Labels y and annotation weights w; voxels with w = 0 carry no information.
struct PartialLabels {
    LabelVolume labels;
    LabelVolume weights;

    /// Fully annotated: w = 1 everywhere.
    static PartialLabels full(const LabelVolume& reference);
    /// Nothing annotated yet.
    static PartialLabels none(const Dims& dims, const Spacing& spacing);

    void validate() const;
    std::size_t annotated_count() const noexcept { return count_foreground(weights); }
};

/// Probability of the liver class per voxel, values in [0, 1].
using ProbVolume = ScalarVolume;

struct TrainConfig {
    AdamConfig adam{};
    std::vector<std::size_t> hidden{32};
    double dropout = 0.25;
    std::size_t batch_patches = 8;
    std::array<std::size_t, 3> patch_size{16, 16, 4};
    bool stratify = true;
    std::size_t max_steps = 2000;
    std::size_t validation_interval = 200;
    std::uint64_t seed = 0;

    // Early stop: halt once no validation improvement >= min_improvement has
    // been seen for patience_fraction * max_steps steps.
    bool stop_on_plateau = false;
    double min_improvement = 1e-4;
    double patience_fraction = 0.25;

    void validate() const;
};

struct TrainCase {
    std::reference_wrapper<const ScalarVolume> image;
    std::reference_wrapper<const PartialLabels> labels;
};

struct ValidationCase {
    std::reference_wrapper<const ScalarVolume> image;
    std::reference_wrapper<const LabelVolume> reference;
};

/// One sampled patch: voxels (storage indices within volume `volume`) with
/// their labels and weights.
struct Patch {
    std::size_t volume = 0;
    std::vector<std::size_t> voxels;
    std::vector<double> y;
    std::vector<double> w;
};

/**
 * Draws mini-batches of axis-aligned patches. A patch is centered on a
 * uniformly drawn annotated voxel (clamped to the volume) and keeps only the
 * annotated voxels inside it. With stratification the first patch is centered
 * on a uniformly drawn annotated liver voxel, so every batch sees liver.
 *
 * Only voxels with w = 1 are ever read, so labels outside the annotation have
 * no influence on sampling.
 */
class BatchSampler {
public:
    BatchSampler(std::span<const TrainCase> cases, const TrainConfig& cfg);

    std::vector<Patch> sample(RngStream& rng) const;

private:
    Patch patch_around(std::size_t volume, std::size_t center) const;
    std::pair<std::size_t, std::size_t> locate(const std::vector<std::size_t>& prefix,
                                               const std::vector<std::vector<std::size_t>>& lists,
                                               std::uint64_t global) const;

    std::vector<TrainCase> cases_;
    TrainConfig cfg_;
    std::vector<std::vector<std::size_t>> annotated_;
    std::vector<std::vector<std::size_t>> annotated_liver_;
    std::vector<std::size_t> annotated_prefix_;
    std::vector<std::size_t> liver_prefix_;
};

std::vector<Patch> sample_stratified_batch(std::span<const TrainCase> cases, const TrainConfig& cfg, RngStream& rng);

struct TrainLogEntry {
    std::size_t step = 0;
    double loss = 0.0;           // mean batch loss since the previous entry
    double val_jaccard = 0.0;    // mean over the validation set, dropout off
    bool operator==(const TrainLogEntry&) const = default;
};

struct TrainResult {
    MlpParams best;
    std::size_t best_step = 0;
    double best_val_jaccard = -1.0;
    std::size_t steps_run = 0;
    std::vector<TrainLogEntry> log;
};

/// Builds the initial network for a feature config and train config.
MlpParams initial_params(const FeatureConfig& features, const TrainConfig& cfg);

/// Trains from scratch; returns the parameters with the best validation
/// Jaccard (earliest on ties). Pure function of (inputs, cfg).
TrainResult train(std::span<const TrainCase> train_set, std::span<const ValidationCase> val_set,
                  const FeatureConfig& features, const TrainConfig& cfg);

/// Dense dropout-off liver probability.
ProbVolume predict(const MlpParams& params, const ScalarVolume& v, const FeatureConfig& cfg);

/// |X n Y| / |X u Y|, 1 when both are empty.
double jaccard(const LabelVolume& pred, const LabelVolume& ref);

} // namespace activeseg
