#include "activeseg/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "activeseg/error.hpp"

namespace activeseg {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

void check_pair(const LabelVolume& x, const LabelVolume& y, const char* what) {
    if (!x.same_geometry(y)) throw InvalidArgument(std::string(what) + ": volumes differ in dims or spacing");
}

double dist(const Point3& a, const Point3& b) noexcept {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Directed nearest distances from every point of `from` to the set `to`, all pairs.
std::vector<double> brute_directed(const SurfacePointSet& from, const SurfacePointSet& to) {
    std::vector<double> out(from.points.size());
    for (std::size_t i = 0; i < from.points.size(); ++i) {
        double best = inf;
        for (const Point3& q : to.points) best = std::min(best, dist(from.points[i], q));
        out[i] = best;
    }
    return out;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

void require_nonempty(const SurfacePointSet& x, const SurfacePointSet& y, const char* what) {
    if (x.empty() || y.empty()) throw UndefinedMetricError(std::string(what) + ": empty surface");
}

// 1D squared distance transform of f (stride `step`) in place, sample spacing s.
void edt_line(double* f, std::size_t n, std::size_t step, double s, std::vector<double>& buf,
              std::vector<std::size_t>& v, std::vector<double>& z) {
    buf.resize(n);
    for (std::size_t q = 0; q < n; ++q) buf[q] = f[q * step];
    v.resize(n);
    z.resize(n + 1);
    std::ptrdiff_t k = -1;
    for (std::size_t q = 0; q < n; ++q) {
        if (buf[q] == inf) continue;
        const double pq = static_cast<double>(q) * s;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -inf;
            z[1] = inf;
            continue;
        }
        double cut;
        for (;;) {
            const double pv = static_cast<double>(v[static_cast<std::size_t>(k)]) * s;
            cut = ((buf[q] + pq * pq) - (buf[v[static_cast<std::size_t>(k)]] + pv * pv)) / (2.0 * (pq - pv));
            if (cut > z[static_cast<std::size_t>(k)] || k == 0) break;
            --k;
        }
        ++k;
        v[static_cast<std::size_t>(k)] = q;
        z[static_cast<std::size_t>(k)] = cut;
        z[static_cast<std::size_t>(k) + 1] = inf;
    }
    if (k < 0) return; // no finite sample on this line
    std::size_t j = 0;
    for (std::size_t q = 0; q < n; ++q) {
        const double pq = static_cast<double>(q) * s;
        while (z[j + 1] < pq) ++j;
        const double d = pq - static_cast<double>(v[j]) * s;
        f[q * step] = d * d + buf[v[j]];
    }
}

} // namespace

Point3 voxel_center(const Spacing& s, std::size_t i, std::size_t j, std::size_t k) noexcept {
    return {(static_cast<double>(i) + 0.5) * s.dx, (static_cast<double>(j) + 0.5) * s.dy,
            (static_cast<double>(k) + 0.5) * s.dz};
}

double dice(const LabelVolume& x, const LabelVolume& y) {
    check_pair(x, y, "dice");
    std::size_t inter = 0, nx = 0, ny = 0;
    for (std::size_t idx = 0; idx < x.size(); ++idx) {
        inter += x[idx] & y[idx];
        nx += x[idx];
        ny += y[idx];
    }
    if (nx + ny == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(nx + ny);
}

double rve(const LabelVolume& x, const LabelVolume& y) {
    check_pair(x, y, "rve");
    const double vv = y.spacing().voxel_volume();
    const double vx = static_cast<double>(count_foreground(x)) * vv;
    const double vy = static_cast<double>(count_foreground(y)) * vv;
    if (vy == 0.0) throw UndefinedMetricError("rve: empty reference");
    return std::abs(vx - vy) / vy * 100.0;
}

LabelVolume surface_mask(const LabelVolume& l) {
    const Dims d = l.dims();
    LabelVolume out(d, l.spacing());
    for (std::size_t k = 0; k < d.nz; ++k)
        for (std::size_t j = 0; j < d.ny; ++j)
            for (std::size_t i = 0; i < d.nx; ++i) {
                if (!l(i, j, k)) continue;
                const bool border = i == 0 || j == 0 || k == 0 || i + 1 == d.nx || j + 1 == d.ny || k + 1 == d.nz;
                const bool open = border || !l(i - 1, j, k) || !l(i + 1, j, k) || !l(i, j - 1, k) ||
                                  !l(i, j + 1, k) || !l(i, j, k - 1) || !l(i, j, k + 1);
                if (open) out(i, j, k) = 1;
            }
    return out;
}

SurfacePointSet extract_surface(const LabelVolume& l) {
    const LabelVolume m = surface_mask(l);
    SurfacePointSet s;
    s.dims = l.dims();
    s.spacing = l.spacing();
    for (std::size_t idx = 0; idx < m.size(); ++idx) {
        if (!m[idx]) continue;
        const auto c = m.coords(idx);
        s.points.push_back(voxel_center(l.spacing(), c[0], c[1], c[2]));
        s.voxels.push_back(idx);
    }
    return s;
}

double msd(const SurfacePointSet& x, const SurfacePointSet& y) {
    require_nonempty(x, y, "msd");
    return 0.5 * (mean_of(brute_directed(x, y)) + mean_of(brute_directed(y, x)));
}

double hd(const SurfacePointSet& x, const SurfacePointSet& y) {
    require_nonempty(x, y, "hd");
    return std::max(max_of(brute_directed(x, y)), max_of(brute_directed(y, x)));
}

namespace {

using Box = std::array<std::array<std::size_t, 3>, 2>; // [lo, hi)

// Squared exact EDT of the foreground of `l` restricted to `box`, in
// box-local x-fastest order. Exact as long as every foreground voxel that
// matters lies inside the box.
std::vector<double> squared_edt(const LabelVolume& l, const Box& box) {
    const std::size_t nx = box[1][0] - box[0][0], ny = box[1][1] - box[0][1], nz = box[1][2] - box[0][2];
    std::vector<double> f(nx * ny * nz);
    for (std::size_t k = 0; k < nz; ++k)
        for (std::size_t j = 0; j < ny; ++j)
            for (std::size_t i = 0; i < nx; ++i)
                f[(k * ny + j) * nx + i] = l(box[0][0] + i, box[0][1] + j, box[0][2] + k) ? 0.0 : inf;
    std::vector<double> buf, z;
    std::vector<std::size_t> v;
    const Spacing& s = l.spacing();
    for (std::size_t k = 0; k < nz; ++k)
        for (std::size_t j = 0; j < ny; ++j) edt_line(&f[(k * ny + j) * nx], nx, 1, s.dx, buf, v, z);
    for (std::size_t k = 0; k < nz; ++k)
        for (std::size_t i = 0; i < nx; ++i) edt_line(&f[k * ny * nx + i], ny, nx, s.dy, buf, v, z);
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i) edt_line(&f[j * nx + i], nz, nx * ny, s.dz, buf, v, z);
    return f;
}

} // namespace

ScalarVolume distance_transform(const LabelVolume& l) {
    if (count_foreground(l) == 0) throw UndefinedMetricError("distance_transform: no foreground voxels");
    const Dims d = l.dims();
    std::vector<double> f = squared_edt(l, Box{{{0, 0, 0}, {d.nx, d.ny, d.nz}}});
    for (double& x : f) x = std::sqrt(x);
    return ScalarVolume(d, l.spacing(), std::move(f));
}

std::vector<double> directed_surface_distances(const SurfacePointSet& from, const LabelVolume& to_surface) {
    const ScalarVolume dt = distance_transform(to_surface);
    std::vector<double> out(from.voxels.size());
    for (std::size_t i = 0; i < from.voxels.size(); ++i) out[i] = dt[from.voxels[i]];
    return out;
}

SurfaceDistances surface_distances(const LabelVolume& x, const LabelVolume& y) {
    check_pair(x, y, "surface_distances");
    const LabelVolume sx = surface_mask(x), sy = surface_mask(y);
    // Both surfaces lie inside their joint bounding box, so the transforms
    // can be cropped to it without changing any distance.
    Box box{{{x.dims().nx, x.dims().ny, x.dims().nz}, {0, 0, 0}}};
    std::vector<std::size_t> vx, vy;
    for (std::size_t idx = 0; idx < sx.size(); ++idx) {
        if (!sx[idx] && !sy[idx]) continue;
        if (sx[idx]) vx.push_back(idx);
        if (sy[idx]) vy.push_back(idx);
        const auto c = sx.coords(idx);
        for (int a = 0; a < 3; ++a) {
            box[0][a] = std::min(box[0][a], c[a]);
            box[1][a] = std::max(box[1][a], c[a] + 1);
        }
    }
    if (vx.empty() || vy.empty()) throw UndefinedMetricError("surface_distances: empty surface");
    const std::size_t nx = box[1][0] - box[0][0], ny = box[1][1] - box[0][1];
    auto directed = [&](const std::vector<std::size_t>& from, const LabelVolume& to) {
        const std::vector<double> f = squared_edt(to, box);
        std::vector<double> out(from.size());
        for (std::size_t i = 0; i < from.size(); ++i) {
            const auto c = to.coords(from[i]);
            out[i] = std::sqrt(f[((c[2] - box[0][2]) * ny + (c[1] - box[0][1])) * nx + (c[0] - box[0][0])]);
        }
        return out;
    };
    const std::vector<double> xy = directed(vx, sy), yx = directed(vy, sx);
    return {0.5 * (mean_of(xy) + mean_of(yx)), std::max(max_of(xy), max_of(yx))};
}

std::string MetricSet::flag_string() const {
    std::string s;
    auto add = [&](MetricFlag f, const char* name) {
        if (undefined & f) s += s.empty() ? name : std::string("|") + name;
    };
    add(rve_undefined, "rve");
    add(msd_undefined, "msd");
    add(hd_undefined, "hd");
    return s;
}

MetricSet evaluate_case(const LabelVolume& pred, const LabelVolume& ref) {
    check_pair(pred, ref, "evaluate_case");
    MetricSet m;
    m.dice = dice(pred, ref);
    try {
        m.rve = rve(pred, ref);
    } catch (const UndefinedMetricError&) {
        m.rve = 0.0;
        m.undefined |= rve_undefined;
    }
    if (count_foreground(pred) == 0 || count_foreground(ref) == 0) {
        m.undefined |= msd_undefined | hd_undefined;
    } else {
        const SurfaceDistances sd = surface_distances(pred, ref);
        m.msd = sd.msd;
        m.hd = sd.hd;
    }
    return m;
}

const char* metric_name(Metric m) noexcept {
    switch (m) {
    case Metric::dice: return "dice";
    case Metric::rve: return "rve_pct";
    case Metric::msd: return "msd_mm";
    case Metric::hd: return "hd_mm";
    }
    return "unknown";
}

bool metric_value(const MetricSet& s, Metric m, double& out) noexcept {
    switch (m) {
    case Metric::dice: out = s.dice; return true;
    case Metric::rve: out = s.rve; return s.defined(rve_undefined);
    case Metric::msd: out = s.msd; return s.defined(msd_undefined);
    case Metric::hd: out = s.hd; return s.defined(hd_undefined);
    }
    return false;
}

double percentile(std::span<const double> values, double q) {
    if (values.empty()) throw UndefinedMetricError("percentile: no values");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("percentile: q must be in [0, 1]");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double h = q * static_cast<double>(v.size() - 1); // zero-based rank
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

MetricSummary summarize_values(std::span<const double> values, std::size_t excluded) {
    if (values.empty()) throw UndefinedMetricError("summarize: no defined values");
    MetricSummary s;
    s.count = values.size();
    s.excluded = excluded;
    const auto n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : values) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / n);
    s.p05 = percentile(values, 0.05);
    s.p95 = percentile(values, 0.95);
    return s;
}

const MetricSummary& SummaryStats::operator[](Metric m) const noexcept {
    switch (m) {
    case Metric::dice: return dice;
    case Metric::rve: return rve;
    case Metric::msd: return msd;
    case Metric::hd: return hd;
    }
    return dice;
}

SummaryStats summarize(std::span<const MetricSet> cases) {
    if (cases.empty()) throw UndefinedMetricError("summarize: no cases");
    SummaryStats out;
    MetricSummary* slots[4] = {&out.dice, &out.rve, &out.msd, &out.hd};
    for (std::size_t mi = 0; mi < all_metrics.size(); ++mi) {
        std::vector<double> vals;
        std::size_t excluded = 0;
        for (const MetricSet& c : cases) {
            double v;
            if (metric_value(c, all_metrics[mi], v)) vals.push_back(v);
            else ++excluded;
        }
        if (vals.empty())
            throw UndefinedMetricError(std::string("summarize: metric ") + metric_name(all_metrics[mi]) +
                                       " undefined for every case");
        *slots[mi] = summarize_values(vals, excluded);
    }
    return out;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("wilcoxon: samples must be paired (equal length)");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] - b[i] != 0.0) diffs.push_back(a[i] - b[i]);
    const std::size_t n = diffs.size();
    if (n < 5) throw InsufficientDataError("wilcoxon: fewer than 5 nonzero differences");

    // Average ranks of |d|, held doubled so they stay integral.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t l, std::size_t r) { return std::abs(diffs[l]) < std::abs(diffs[r]); });
    std::vector<std::uint64_t> rank2(n);
    double tie_term = 0.0;
    for (std::size_t s = 0; s < n;) {
        std::size_t e = s;
        while (e + 1 < n && std::abs(diffs[order[e + 1]]) == std::abs(diffs[order[s]])) ++e;
        const std::uint64_t r2 = static_cast<std::uint64_t>(s + 1 + e + 1); // 2 * mean of ranks s+1..e+1
        for (std::size_t t = s; t <= e; ++t) rank2[order[t]] = r2;
        const auto t = static_cast<double>(e - s + 1);
        tie_term += t * t * t - t;
        s = e + 1;
    }

    WilcoxonResult res;
    res.n = n;
    std::uint64_t t_obs = 0, total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total += rank2[i];
        if (diffs[i] > 0) t_obs += rank2[i];
    }
    res.w_plus = static_cast<double>(t_obs) / 2.0;
    res.w_minus = static_cast<double>(total - t_obs) / 2.0;

    const auto nd = static_cast<double>(n);
    if (n <= wilcoxon_exact_max_n) {
        // Null distribution of the doubled positive-rank sum by subset-sum counting.
        std::vector<std::uint64_t> ways(total + 1, 0);
        ways[0] = 1;
        for (std::size_t i = 0; i < n; ++i)
            for (std::uint64_t s = total; s + 1 > rank2[i]; --s) ways[s] += ways[s - rank2[i]];
        const auto dev = [&](std::uint64_t t) {
            const auto twice = static_cast<std::int64_t>(2 * t) - static_cast<std::int64_t>(total);
            return twice < 0 ? -twice : twice;
        };
        const std::int64_t observed = dev(t_obs);
        std::uint64_t extreme = 0;
        for (std::uint64_t t = 0; t <= total; ++t)
            if (dev(t) >= observed) extreme += ways[t];
        res.p_value = static_cast<double>(extreme) / std::ldexp(1.0, static_cast<int>(n));
        res.exact = true;
    } else {
        const double mu = nd * (nd + 1.0) / 4.0;
        const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
        const double num = std::max(0.0, std::abs(res.w_plus - mu) - 0.5);
        const double zscore = var > 0.0 ? num / std::sqrt(var) : 0.0;
        res.p_value = std::min(1.0, std::erfc(zscore / std::sqrt(2.0)));
    }
    return res;
}

} // namespace activeseg
