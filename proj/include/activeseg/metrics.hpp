#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "activeseg/volume.hpp"

namespace activeseg {

using Point3 = std::array<double, 3>;

/// Physical centers (mm) of the boundary voxels of a mask.
struct SurfacePointSet {
    std::vector<Point3> points;
    std::vector<std::size_t> voxels; // storage index of each point
    Dims dims{};
    Spacing spacing{};
    bool empty() const noexcept { return points.empty(); }
};

/// Center of voxel (i, j, k): ((i + 0.5) dx, (j + 0.5) dy, (k + 0.5) dz).
Point3 voxel_center(const Spacing& s, std::size_t i, std::size_t j, std::size_t k) noexcept;

double dice(const LabelVolume& x, const LabelVolume& y);

/// |V_X - V_Y| / V_Y * 100. Throws UndefinedMetricError for an empty reference.
double rve(const LabelVolume& x, const LabelVolume& y);

/// Foreground voxels with at least one 6-neighbor that is background or outside the grid.
SurfacePointSet extract_surface(const LabelVolume& l);
LabelVolume surface_mask(const LabelVolume& l);

/// Mean of the two directed mean nearest distances (all-pairs). Throws on an empty set.
double msd(const SurfacePointSet& x, const SurfacePointSet& y);
/// Maximum of the two directed maximum nearest distances (all-pairs).
double hd(const SurfacePointSet& x, const SurfacePointSet& y);

/// Exact Euclidean distance (mm) from every voxel center to the nearest
/// foreground voxel center, anisotropic spacing. Separable lower-envelope
/// transform on squared distances (Felzenszwalb & Huttenlocher 2012).
/// Throws UndefinedMetricError when there is no foreground.
ScalarVolume distance_transform(const LabelVolume& l);

/// Nearest distance from each point of `from` to the surface of `to`,
/// read off the distance transform of to's surface.
std::vector<double> directed_surface_distances(const SurfacePointSet& from, const LabelVolume& to_surface);

struct SurfaceDistances {
    double msd = 0.0;
    double hd = 0.0;
};

/// MSD and HD of two masks through the distance-transform path.
SurfaceDistances surface_distances(const LabelVolume& x, const LabelVolume& y);

enum MetricFlag : unsigned {
    rve_undefined = 1u << 0,
    msd_undefined = 1u << 1,
    hd_undefined = 1u << 2,
};

struct MetricSet {
    double dice = 0.0;
    double rve = 0.0; // percent
    double msd = 0.0; // mm
    double hd = 0.0;  // mm
    unsigned undefined = 0;

    bool defined(MetricFlag f) const noexcept { return (undefined & f) == 0; }
    std::string flag_string() const;
};

MetricSet evaluate_case(const LabelVolume& pred, const LabelVolume& ref);

enum class Metric { dice, rve, msd, hd };
inline constexpr std::array<Metric, 4> all_metrics{Metric::dice, Metric::rve, Metric::msd, Metric::hd};
const char* metric_name(Metric m) noexcept;
/// Value of `m` in `s`, or false if it is flagged undefined.
bool metric_value(const MetricSet& s, Metric m, double& out) noexcept;

/// Inclusive linear-interpolated percentile: rank h = q (n - 1) + 1 over the
/// sorted values. q in [0, 1].
double percentile(std::span<const double> values, double q);

struct MetricSummary {
    double mean = 0.0;
    double sd = 0.0; // population
    double p05 = 0.0;
    double p95 = 0.0;
    std::size_t count = 0;
    std::size_t excluded = 0;
};

/// Throws UndefinedMetricError when `values` is empty.
MetricSummary summarize_values(std::span<const double> values, std::size_t excluded = 0);

struct SummaryStats {
    MetricSummary dice, rve, msd, hd;
    const MetricSummary& operator[](Metric m) const noexcept;
};

/// Undefined entries are excluded per metric and counted. Throws
/// UndefinedMetricError if any metric has no defined value left.
SummaryStats summarize(std::span<const MetricSet> cases);

struct WilcoxonResult {
    double w_plus = 0.0;  // sum of ranks of positive differences a - b
    double w_minus = 0.0;
    std::size_t n = 0;    // nonzero differences
    double p_value = 1.0; // two-sided
    bool exact = false;
};

/// Paired Wilcoxon signed-rank test. Zero differences are dropped; ties get
/// average ranks. Exact null distribution for n <= 12, otherwise a normal
/// approximation with tie and continuity corrections. Throws
/// InsufficientDataError for fewer than 5 nonzero pairs.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

inline constexpr std::size_t wilcoxon_exact_max_n = 12;

} // namespace activeseg
