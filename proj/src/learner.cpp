#include "activeseg/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "activeseg/error.hpp"
#include "activeseg/parallel.hpp"

namespace activeseg {

PartialLabels PartialLabels::full(const LabelVolume& reference) {
    return {reference, LabelVolume(reference.dims(), reference.spacing(), std::uint8_t{1})};
}

PartialLabels PartialLabels::none(const Dims& dims, const Spacing& spacing) {
    return {LabelVolume(dims, spacing), LabelVolume(dims, spacing)};
}

void PartialLabels::validate() const {
    if (!labels.same_geometry(weights)) throw InvalidArgument("partial labels: labels and weights differ in geometry");
    require_binary(labels, "partial labels (y)");
    require_binary(weights, "partial labels (w)");
}

void TrainConfig::validate() const {
    if (!(adam.learning_rate > 0.0)) throw InvalidArgument("train config: learning rate must be positive");
    if (validation_interval < 1) throw InvalidArgument("train config: validation interval must be >= 1");
    if (batch_patches < 1) throw InvalidArgument("train config: batch must contain at least one patch");
    if (stratify && batch_patches < 2) throw InvalidArgument("train config: stratified batches need >= 2 patches");
    if (patch_size[0] == 0 || patch_size[1] == 0 || patch_size[2] == 0)
        throw InvalidArgument("train config: patch size must be positive");
    if (hidden.empty()) throw InvalidArgument("train config: need at least one hidden layer");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("train config: dropout must be in [0, 1)");
    if (!(patience_fraction > 0.0 && patience_fraction <= 1.0))
        throw InvalidArgument("train config: patience fraction must be in (0, 1]");
}

// ---------------------------------------------------------------------------
// Batch sampling

BatchSampler::BatchSampler(std::span<const TrainCase> cases, const TrainConfig& cfg)
    : cases_(cases.begin(), cases.end()), cfg_(cfg) {
    cfg_.validate();
    if (cases_.empty()) throw InvalidArgument("batch sampler: empty training set");
    annotated_prefix_.push_back(0);
    liver_prefix_.push_back(0);
    for (const TrainCase& c : cases_) {
        const PartialLabels& pl = c.labels.get();
        pl.validate();
        if (!pl.labels.same_geometry(c.image.get()))
            throw InvalidArgument("batch sampler: labels do not match image geometry");
        std::vector<std::size_t> any, liver;
        for (std::size_t idx = 0; idx < pl.weights.size(); ++idx) {
            if (!pl.weights[idx]) continue;
            any.push_back(idx);
            if (pl.labels[idx]) liver.push_back(idx);
        }
        annotated_prefix_.push_back(annotated_prefix_.back() + any.size());
        liver_prefix_.push_back(liver_prefix_.back() + liver.size());
        annotated_.push_back(std::move(any));
        annotated_liver_.push_back(std::move(liver));
    }
    if (liver_prefix_.back() == 0) throw EmptyAnnotationError("batch sampler: no annotated liver voxels in training set");
}

std::pair<std::size_t, std::size_t> BatchSampler::locate(const std::vector<std::size_t>& prefix,
                                                         const std::vector<std::vector<std::size_t>>& lists,
                                                         std::uint64_t global) const {
    const auto it = std::upper_bound(prefix.begin(), prefix.end(), static_cast<std::size_t>(global));
    const auto vol = static_cast<std::size_t>(std::distance(prefix.begin(), it)) - 1;
    return {vol, lists[vol][global - prefix[vol]]};
}

Patch BatchSampler::patch_around(std::size_t volume, std::size_t center) const {
    const PartialLabels& pl = cases_[volume].labels.get();
    const Dims d = pl.weights.dims();
    const auto c = pl.weights.coords(center);
    std::size_t lo[3], hi[3];
    for (std::size_t a = 0; a < 3; ++a) {
        const std::size_t size = std::min(cfg_.patch_size[a], d[a]);
        const std::size_t half = cfg_.patch_size[a] / 2;
        const std::size_t start = c[a] >= half ? c[a] - half : 0;
        lo[a] = std::min(start, d[a] - size);
        hi[a] = lo[a] + size;
    }
    Patch p;
    p.volume = volume;
    for (std::size_t k = lo[2]; k < hi[2]; ++k)
        for (std::size_t j = lo[1]; j < hi[1]; ++j)
            for (std::size_t i = lo[0]; i < hi[0]; ++i) {
                const std::size_t idx = pl.weights.index(i, j, k);
                if (!pl.weights[idx]) continue;
                p.voxels.push_back(idx);
                p.y.push_back(pl.labels[idx]);
                p.w.push_back(1.0);
            }
    return p;
}

std::vector<Patch> BatchSampler::sample(RngStream& rng) const {
    std::vector<Patch> batch;
    batch.reserve(cfg_.batch_patches);
    for (std::size_t b = 0; b < cfg_.batch_patches; ++b) {
        const bool liver = cfg_.stratify && b == 0;
        const auto& prefix = liver ? liver_prefix_ : annotated_prefix_;
        const auto& lists = liver ? annotated_liver_ : annotated_;
        const auto [vol, center] = locate(prefix, lists, rng.uniform_index(prefix.back()));
        batch.push_back(patch_around(vol, center));
    }
    return batch;
}

std::vector<Patch> sample_stratified_batch(std::span<const TrainCase> cases, const TrainConfig& cfg, RngStream& rng) {
    return BatchSampler(cases, cfg).sample(rng);
}

// ---------------------------------------------------------------------------
// Training

MlpParams initial_params(const FeatureConfig& features, const TrainConfig& cfg) {
    std::vector<std::size_t> sizes{features.width()};
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(2);
    RngStream rng = derive_rng(cfg.seed, {"train", "init"});
    return MlpParams::xavier(std::move(sizes), cfg.dropout, rng);
}

namespace {

double mean_validation_jaccard(const MlpParams& params, const std::vector<Matrix>& features,
                               std::span<const ValidationCase> val_set) {
    double total = 0.0;
    for (std::size_t v = 0; v < val_set.size(); ++v) {
        const LabelVolume& ref = val_set[v].reference.get();
        const std::vector<double> p = forward_liver(params, features[v]);
        LabelVolume pred(ref.dims(), ref.spacing());
        for (std::size_t idx = 0; idx < p.size(); ++idx) pred[idx] = p[idx] >= 0.5 ? 1 : 0;
        total += jaccard(pred, ref);
    }
    return total / static_cast<double>(val_set.size());
}

} // namespace

TrainResult train(std::span<const TrainCase> train_set, std::span<const ValidationCase> val_set,
                  const FeatureConfig& features, const TrainConfig& cfg) {
    cfg.validate();
    features.validate();
    if (train_set.empty()) throw InvalidArgument("train: empty training set");
    if (val_set.empty()) throw InvalidArgument("train: empty validation set");

    TrainResult result;
    MlpParams params = initial_params(features, cfg);
    result.best = params;
    if (cfg.max_steps == 0) return result;

    const BatchSampler sampler(train_set, cfg);
    std::vector<FeatureExtractor> extractors;
    extractors.reserve(train_set.size());
    for (const TrainCase& c : train_set) extractors.emplace_back(c.image.get(), features);
    std::vector<Matrix> val_features;
    for (const ValidationCase& c : val_set) {
        if (!c.image.get().same_geometry(c.reference.get()))
            throw InvalidArgument("train: validation image and reference differ in geometry");
        val_features.push_back(FeatureExtractor(c.image.get(), features).dense());
    }

    AdamState state(params.parameter_count());
    RngStream batch_rng = derive_rng(cfg.seed, {"train", "batch"});
    RngStream dropout_rng = derive_rng(cfg.seed, {"train", "dropout"});
    const auto patience = static_cast<std::size_t>(std::ceil(cfg.patience_fraction * static_cast<double>(cfg.max_steps)));

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    double plateau_ref = -std::numeric_limits<double>::infinity();
    std::size_t last_improvement = 0;

    Matrix x;
    std::vector<double> y, w;
    for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
        const std::vector<Patch> batch = sampler.sample(batch_rng);
        std::size_t rows = 0;
        for (const Patch& p : batch) rows += p.voxels.size();
        x = Matrix(rows, features.width());
        y.clear();
        w.clear();
        std::size_t r = 0;
        for (const Patch& p : batch) {
            for (std::size_t v : p.voxels) extractors[p.volume].row(v, x.row(r++));
            y.insert(y.end(), p.y.begin(), p.y.end());
            w.insert(w.end(), p.w.begin(), p.w.end());
        }
        const DropoutMask mask = DropoutMask::sample(params, rows, dropout_rng);
        const LossGradient lg = backward(params, x, &mask, y, w);
        adam_step(params.flat(), lg.grad.flat(), state, cfg.adam);
        loss_sum += lg.loss;
        ++loss_count;
        result.steps_run = step;

        if (step % cfg.validation_interval != 0 && step != cfg.max_steps) continue;
        const double val = mean_validation_jaccard(params, val_features, val_set);
        result.log.push_back({step, loss_sum / static_cast<double>(loss_count), val});
        loss_sum = 0.0;
        loss_count = 0;
        if (val > result.best_val_jaccard) {
            result.best_val_jaccard = val;
            result.best_step = step;
            result.best = params;
        }
        if (val >= plateau_ref + cfg.min_improvement) {
            plateau_ref = val;
            last_improvement = step;
        }
        if (cfg.stop_on_plateau && step - last_improvement >= patience) break;
    }
    return result;
}

ProbVolume predict(const MlpParams& params, const ScalarVolume& v, const FeatureConfig& cfg) {
    const Matrix x = FeatureExtractor(v, cfg).dense();
    return ProbVolume(v.dims(), v.spacing(), forward_liver(params, x));
}

double jaccard(const LabelVolume& pred, const LabelVolume& ref) {
    if (pred.dims() != ref.dims()) throw InvalidArgument("jaccard: dims mismatch");
    std::size_t inter = 0, uni = 0;
    for (std::size_t idx = 0; idx < pred.size(); ++idx) {
        inter += (pred[idx] & ref[idx]);
        uni += (pred[idx] | ref[idx]);
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

} // namespace activeseg
