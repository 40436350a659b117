#include "activeseg/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

#include "activeseg/error.hpp"

namespace activeseg {

const char* status_name(AnnotationStatus s) noexcept {
    switch (s) {
    case AnnotationStatus::unannotated: return "unannotated";
    case AnnotationStatus::slices: return "slices";
    case AnnotationStatus::full: return "full";
    }
    return "unknown";
}

LedgerDelta& LedgerDelta::operator+=(const LedgerDelta& o) noexcept {
    volume_slices += o.volume_slices;
    volume_liver_slices += o.volume_liver_slices;
    isolated_slices += o.isolated_slices;
    isolated_liver_slices += o.isolated_liver_slices;
    new_volumes += o.new_volumes;
    return *this;
}

PoolState::PoolState(std::vector<LabelVolume> references) : references_(std::move(references)) {
    for (const LabelVolume& ref : references_) {
        require_binary(ref, "pool reference");
        std::vector<std::uint8_t> liver(ref.dims().nz, 0);
        for (std::size_t z = 0; z < ref.dims().nz; ++z) {
            const auto s = ref.slice(z);
            liver[z] = std::find(s.begin(), s.end(), std::uint8_t{1}) != s.end() ? 1 : 0;
        }
        liver_slice_.push_back(std::move(liver));
    }
    status_.assign(references_.size(), AnnotationStatus::unannotated);
    slices_.resize(references_.size());
}

void PoolState::check_id(VolumeId id) const {
    if (id >= references_.size()) throw InvalidArgument("pool: unknown volume id " + std::to_string(id));
}

const Dims& PoolState::dims(VolumeId id) const {
    check_id(id);
    return references_[id].dims();
}

const Spacing& PoolState::spacing(VolumeId id) const {
    check_id(id);
    return references_[id].spacing();
}

AnnotationStatus PoolState::status(VolumeId id) const {
    check_id(id);
    return status_[id];
}

const std::set<std::size_t>& PoolState::annotated_slices(VolumeId id) const {
    check_id(id);
    return slices_[id];
}

bool PoolState::is_annotated(VolumeId id, std::size_t z) const {
    check_id(id);
    return slices_[id].count(z) > 0;
}

std::vector<VolumeId> PoolState::eligible_volumes() const {
    std::vector<VolumeId> out;
    for (VolumeId id = 0; id < size(); ++id)
        if (status_[id] != AnnotationStatus::full) out.push_back(id);
    return out;
}

std::vector<VolumeId> PoolState::annotated_volumes() const {
    std::vector<VolumeId> out;
    for (VolumeId id = 0; id < size(); ++id)
        if (!slices_[id].empty()) out.push_back(id);
    return out;
}

PartialLabels PoolState::partial_labels(VolumeId id) const {
    check_id(id);
    const LabelVolume& ref = references_[id];
    PartialLabels pl = PartialLabels::none(ref.dims(), ref.spacing());
    const std::size_t per_slice = ref.dims().slice_size();
    for (std::size_t z : slices_[id]) {
        const std::size_t base = z * per_slice;
        for (std::size_t t = 0; t < per_slice; ++t) {
            pl.weights[base + t] = 1;
            pl.labels[base + t] = ref[base + t];
        }
    }
    return pl;
}

bool PoolState::slice_has_liver(VolumeId id, std::size_t z) const {
    check_id(id);
    if (z >= liver_slice_[id].size()) throw InvalidArgument("pool: slice index out of range");
    return liver_slice_[id][z] != 0;
}

std::size_t PoolState::liver_slice_count(VolumeId id) const {
    check_id(id);
    return static_cast<std::size_t>(std::count(liver_slice_[id].begin(), liver_slice_[id].end(), std::uint8_t{1}));
}

Ledger PoolState::recompute_ledger() const {
    Ledger l;
    for (VolumeId id = 0; id < size(); ++id) {
        if (slices_[id].empty()) continue;
        ++l.volumes;
        l.slices += slices_[id].size();
        for (std::size_t z : slices_[id]) l.liver_slices += liver_slice_[id][z];
    }
    return l;
}

LedgerDelta PoolState::annotate(const Selection& sel) {
    LedgerDelta delta;
    if (const auto* vs = std::get_if<VolumeSelection>(&sel)) {
        std::set<VolumeId> seen;
        for (VolumeId id : vs->ids) {
            check_id(id);
            if (status_[id] == AnnotationStatus::full)
                throw InvalidArgument("annotate: volume " + std::to_string(id) + " is already fully annotated");
            if (!seen.insert(id).second)
                throw InvalidArgument("annotate: volume " + std::to_string(id) + " selected twice");
        }
        for (VolumeId id : vs->ids) {
            if (slices_[id].empty()) ++delta.new_volumes;
            for (std::size_t z = 0; z < dims(id).nz; ++z) {
                if (!slices_[id].insert(z).second) continue;
                ++delta.volume_slices;
                delta.volume_liver_slices += liver_slice_[id][z];
            }
            status_[id] = AnnotationStatus::full;
        }
    } else {
        const auto& ss = std::get<SliceSelection>(sel);
        std::set<SliceTarget> seen;
        for (const SliceTarget& t : ss.slices) {
            check_id(t.volume);
            const std::string where = "(" + std::to_string(t.volume) + ", " + std::to_string(t.z) + ")";
            if (t.z >= dims(t.volume).nz) throw InvalidArgument("annotate: slice " + where + " is out of range");
            if (slices_[t.volume].count(t.z)) throw InvalidArgument("annotate: slice " + where + " is already annotated");
            if (!seen.insert(t).second) throw InvalidArgument("annotate: slice " + where + " selected twice");
        }
        for (const SliceTarget& t : ss.slices) {
            if (slices_[t.volume].empty()) ++delta.new_volumes;
            slices_[t.volume].insert(t.z);
            ++delta.isolated_slices;
            delta.isolated_liver_slices += liver_slice_[t.volume][t.z];
            status_[t.volume] = slices_[t.volume].size() == dims(t.volume).nz ? AnnotationStatus::full
                                                                               : AnnotationStatus::slices;
        }
    }
    ledger_.slices += delta.volume_slices + delta.isolated_slices;
    ledger_.liver_slices += delta.volume_liver_slices + delta.isolated_liver_slices;
    ledger_.volumes += delta.new_volumes;
    return delta;
}

LedgerDelta annotate(PoolState& pool, const Selection& sel) { return pool.annotate(sel); }

VolumeSelection select_uvs(const PoolState& pool, const std::map<VolumeId, double>& uncertainty, std::size_t k) {
    const std::vector<VolumeId> eligible = pool.eligible_volumes();
    if (eligible.empty()) throw ExhaustedPoolError("select_uvs: no eligible volumes left");
    std::vector<std::pair<double, VolumeId>> ranked;
    for (VolumeId id : eligible) {
        const auto it = uncertainty.find(id);
        if (it == uncertainty.end())
            throw InvalidArgument("select_uvs: missing uncertainty for volume " + std::to_string(id));
        ranked.emplace_back(it->second, id);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    VolumeSelection sel;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) sel.ids.push_back(ranked[i].second);
    return sel;
}

VolumeSelection select_rvs(const PoolState& pool, RngStream& rng, std::size_t k) {
    std::vector<VolumeId> eligible = pool.eligible_volumes();
    if (eligible.empty()) throw ExhaustedPoolError("select_rvs: no eligible volumes left");
    VolumeSelection sel;
    const std::size_t take = std::min(k, eligible.size());
    // Partial Fisher-Yates: position i receives a uniform pick among the rest.
    for (std::size_t i = 0; i < take; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.uniform_index(eligible.size() - i));
        std::swap(eligible[i], eligible[j]);
        sel.ids.push_back(eligible[i]);
    }
    return sel;
}

SliceSelection select_uss(const PoolState& pool, const std::map<VolumeId, SliceUncertaintyProfile>& profiles,
                          std::size_t n_slices) {
    struct Candidate {
        double value;
        VolumeId id;
        std::size_t z;
    };
    std::vector<Candidate> candidates;
    for (VolumeId id : pool.eligible_volumes()) {
        const auto it = profiles.find(id);
        if (it == profiles.end()) throw InvalidArgument("select_uss: missing profile for volume " + std::to_string(id));
        const SliceUncertaintyProfile& prof = it->second;
        for (std::size_t z : prof.peaks) {
            if (z >= prof.values.size()) throw InvalidArgument("select_uss: peak index outside profile");
            if (!pool.is_annotated(id, z)) candidates.push_back({prof.values[z], id, z});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.value != b.value) return a.value > b.value;
        return std::tie(a.id, a.z) < std::tie(b.id, b.z);
    });
    SliceSelection sel;
    for (std::size_t i = 0; i < std::min(n_slices, candidates.size()); ++i)
        sel.slices.push_back({candidates[i].id, candidates[i].z});
    sel.exhausted = sel.slices.size() < n_slices;
    return sel;
}

SliceSelection select_rss(const PoolState& pool, RngStream& rng, std::size_t n_liver_slices) {
    std::vector<SliceTarget> remaining;
    for (VolumeId id : pool.eligible_volumes())
        for (std::size_t z = 0; z < pool.dims(id).nz; ++z)
            if (!pool.is_annotated(id, z)) remaining.push_back({id, z});

    SliceSelection sel;
    std::size_t liver = 0;
    std::size_t drawn = 0;
    while (liver < n_liver_slices && drawn < remaining.size()) {
        const auto j = drawn + static_cast<std::size_t>(rng.uniform_index(remaining.size() - drawn));
        std::swap(remaining[drawn], remaining[j]);
        const SliceTarget t = remaining[drawn++];
        sel.slices.push_back(t);
        if (pool.slice_has_liver(t.volume, t.z)) ++liver;
    }
    sel.exhausted = liver < n_liver_slices;
    return sel;
}

void BudgetRule::validate() const {
    if (volumes_per_iteration == 0) throw InvalidArgument("budget: volumes per iteration must be positive");
    if (!(liver_slice_divisor > 0.0)) throw InvalidArgument("budget: divisor must be positive");
    if (rounding_granularity == 0) throw InvalidArgument("budget: rounding granularity must be positive");
}

std::size_t compute_slice_budget(std::span<const std::size_t> liver_slices_per_iteration, double divisor,
                                 std::size_t rounding_granularity) {
    if (liver_slices_per_iteration.empty()) throw InvalidArgument("compute_slice_budget: empty history");
    if (!(divisor > 0.0) || rounding_granularity == 0) throw InvalidArgument("compute_slice_budget: bad rounding");
    const double total = std::accumulate(liver_slices_per_iteration.begin(), liver_slices_per_iteration.end(), 0.0);
    const double mean = total / static_cast<double>(liver_slices_per_iteration.size());
    const double g = static_cast<double>(rounding_granularity);
    const double units = std::floor(mean / divisor / g + 0.5);
    return std::max<std::size_t>(1, static_cast<std::size_t>(units) * rounding_granularity);
}

double effort_units(const LedgerDelta& delta, double divisor) {
    return static_cast<double>(delta.volume_liver_slices) + divisor * static_cast<double>(delta.isolated_liver_slices);
}

} // namespace activeseg
