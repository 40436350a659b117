#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "activeseg/learner.hpp"
#include "activeseg/rng.hpp"
#include "activeseg/uncertainty.hpp"

namespace activeseg {

using VolumeId = std::size_t;

enum class AnnotationStatus { unannotated, slices, full };

const char* status_name(AnnotationStatus s) noexcept;

/// Cumulative annotation effort, in the shape of a training-data summary:
/// annotated slices / annotated liver slices / unique volumes.
struct Ledger {
    std::size_t slices = 0;
    std::size_t liver_slices = 0;
    std::size_t volumes = 0;
    bool operator==(const Ledger&) const = default;
};

/// What one annotate() call added.
struct LedgerDelta {
    std::size_t volume_slices = 0;         // slices added by full-volume annotation
    std::size_t volume_liver_slices = 0;
    std::size_t isolated_slices = 0;       // slices added one at a time
    std::size_t isolated_liver_slices = 0;
    std::size_t new_volumes = 0;           // volumes going from unannotated to annotated

    LedgerDelta& operator+=(const LedgerDelta& o) noexcept;
    bool operator==(const LedgerDelta&) const = default;
};

struct VolumeSelection {
    std::vector<VolumeId> ids;
};

struct SliceTarget {
    VolumeId volume = 0;
    std::size_t z = 0;
    bool operator==(const SliceTarget&) const = default;
    auto operator<=>(const SliceTarget&) const = default;
};

struct SliceSelection {
    std::vector<SliceTarget> slices;
    bool exhausted = false; // fewer targets than requested were available
};

using Selection = std::variant<VolumeSelection, SliceSelection>;

/**
 * Annotation bookkeeping for the unlabeled pool.
 *
 * The pool owns the reference segmentations (the simulated expert). They are
 * never handed out directly: learners only see partial_labels(), whose labels
 * are zero wherever the weights are zero.
 */
class PoolState {
public:
    PoolState() = default;
    explicit PoolState(std::vector<LabelVolume> references);

    std::size_t size() const noexcept { return references_.size(); }
    const Dims& dims(VolumeId id) const;
    const Spacing& spacing(VolumeId id) const;

    AnnotationStatus status(VolumeId id) const;
    const std::set<std::size_t>& annotated_slices(VolumeId id) const;
    bool is_annotated(VolumeId id, std::size_t z) const;

    /// Not fully annotated.
    std::vector<VolumeId> eligible_volumes() const;
    /// With at least one annotated slice.
    std::vector<VolumeId> annotated_volumes() const;

    PartialLabels partial_labels(VolumeId id) const;

    /// Oracle privilege: whether the reference slice contains foreground.
    bool slice_has_liver(VolumeId id, std::size_t z) const;
    std::size_t liver_slice_count(VolumeId id) const;

    const Ledger& ledger() const noexcept { return ledger_; }
    /// Ledger rebuilt from per-volume status alone.
    Ledger recompute_ledger() const;

    /// Applies a selection. The whole selection is validated first; on error
    /// the pool is unchanged.
    LedgerDelta annotate(const Selection& sel);

private:
    void check_id(VolumeId id) const;

    std::vector<LabelVolume> references_;
    std::vector<std::vector<std::uint8_t>> liver_slice_;
    std::vector<AnnotationStatus> status_;
    std::vector<std::set<std::size_t>> slices_;
    Ledger ledger_;
};

/// Free-function form of PoolState::annotate.
LedgerDelta annotate(PoolState& pool, const Selection& sel);

/// Top-k eligible volumes by uncertainty (ties: lower id). k is clipped.
VolumeSelection select_uvs(const PoolState& pool, const std::map<VolumeId, double>& uncertainty, std::size_t k);

/// k eligible volumes uniformly without replacement, returned in draw order.
VolumeSelection select_rvs(const PoolState& pool, RngStream& rng, std::size_t k);

/// Highest-uncertainty peak slices over all eligible volumes.
SliceSelection select_uss(const PoolState& pool, const std::map<VolumeId, SliceUncertaintyProfile>& profiles,
                          std::size_t n_slices);

/// Random unannotated slices until n_liver_slices of them contain liver.
SliceSelection select_rss(const PoolState& pool, RngStream& rng, std::size_t n_liver_slices);

struct BudgetRule {
    std::size_t volumes_per_iteration = 5;
    /// Fixed per-iteration slice budget; 0 derives it from volume iterations.
    std::size_t slice_budget = 0;
    double liver_slice_divisor = 3.0;
    /// N_S is rounded half-up to a multiple of this (1 = nearest integer).
    std::size_t rounding_granularity = 1;

    void validate() const;
};

/// N_S = round(mean(liver slices added per volume iteration) / divisor), >= 1.
std::size_t compute_slice_budget(std::span<const std::size_t> liver_slices_per_iteration, double divisor = 3.0,
                                 std::size_t rounding_granularity = 1);

/// Effort units of an annotation step: a liver slice inside a fully annotated
/// volume costs 1, an isolated liver slice costs `divisor`, slices without
/// liver cost nothing.
double effort_units(const LedgerDelta& delta, double divisor = 3.0);

} // namespace activeseg
