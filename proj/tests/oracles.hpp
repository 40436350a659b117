#pragma once

// Slow, direct reimplementations used as references by the tests. None of
// them call into the library code they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "activeseg/volume.hpp"

namespace oracle {

using activeseg::LabelVolume;
using Point = std::array<double, 3>;

/// Foreground voxels with a background or out-of-grid 6-neighbor, as
/// physical voxel centers.
inline std::vector<Point> surface_points(const LabelVolume& l) {
    const auto d = l.dims();
    const auto s = l.spacing();
    std::vector<Point> pts;
    const long n[3] = {long(d.nx), long(d.ny), long(d.nz)};
    auto fg = [&](long i, long j, long k) {
        if (i < 0 || j < 0 || k < 0 || i >= n[0] || j >= n[1] || k >= n[2]) return false;
        return l(std::size_t(i), std::size_t(j), std::size_t(k)) != 0;
    };
    for (long k = 0; k < n[2]; ++k)
        for (long j = 0; j < n[1]; ++j)
            for (long i = 0; i < n[0]; ++i) {
                if (!fg(i, j, k)) continue;
                const bool boundary = !fg(i - 1, j, k) || !fg(i + 1, j, k) || !fg(i, j - 1, k) || !fg(i, j + 1, k) ||
                                      !fg(i, j, k - 1) || !fg(i, j, k + 1);
                if (boundary) pts.push_back({(i + 0.5) * s.dx, (j + 0.5) * s.dy, (k + 0.5) * s.dz});
            }
    return pts;
}

inline double dist(const Point& a, const Point& b) {
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

inline std::vector<double> directed(const std::vector<Point>& from, const std::vector<Point>& to) {
    std::vector<double> out;
    for (const Point& a : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const Point& b : to) best = std::min(best, dist(a, b));
        out.push_back(best);
    }
    return out;
}

struct Distances {
    double msd;
    double hd;
};

inline Distances surface_distances(const LabelVolume& x, const LabelVolume& y) {
    const auto px = surface_points(x), py = surface_points(y);
    const auto dxy = directed(px, py), dyx = directed(py, px);
    double sxy = 0, syx = 0, h = 0;
    for (double v : dxy) sxy += v, h = std::max(h, v);
    for (double v : dyx) syx += v, h = std::max(h, v);
    return {0.5 * (sxy / double(dxy.size()) + syx / double(dyx.size())), h};
}

/// Distance from each voxel center to the nearest foreground center.
inline std::vector<double> distance_field(const LabelVolume& l) {
    const auto d = l.dims();
    const auto s = l.spacing();
    std::vector<Point> fg;
    for (std::size_t k = 0; k < d.nz; ++k)
        for (std::size_t j = 0; j < d.ny; ++j)
            for (std::size_t i = 0; i < d.nx; ++i)
                if (l(i, j, k)) fg.push_back({(i + 0.5) * s.dx, (j + 0.5) * s.dy, (k + 0.5) * s.dz});
    std::vector<double> out;
    for (std::size_t k = 0; k < d.nz; ++k)
        for (std::size_t j = 0; j < d.ny; ++j)
            for (std::size_t i = 0; i < d.nx; ++i) {
                const Point c{(i + 0.5) * s.dx, (j + 0.5) * s.dy, (k + 0.5) * s.dz};
                double best = std::numeric_limits<double>::infinity();
                for (const Point& f : fg) best = std::min(best, dist(c, f));
                out.push_back(best);
            }
    return out;
}

/// Peak rule, by repeated arg-max: candidates are leftmost indices of flat
/// runs strictly above their existing neighbors; the highest remaining
/// candidate (lowest index on ties) is taken and every candidate closer
/// than min_distance is removed.
inline std::vector<std::size_t> peaks(const std::vector<double>& v, std::size_t min_distance) {
    const std::size_t n = v.size();
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && v[i - 1] == v[i]) continue; // not the leftmost of its run
        std::size_t j = i;
        while (j + 1 < n && v[j + 1] == v[i]) ++j;
        const bool left = i == 0 || v[i - 1] < v[i];
        const bool right = j + 1 == n || v[j + 1] < v[i];
        if (left && right) cand.push_back(i);
    }
    std::vector<std::size_t> out;
    while (!cand.empty()) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < cand.size(); ++c)
            if (v[cand[c]] > v[cand[best]] || (v[cand[c]] == v[cand[best]] && cand[c] < cand[best])) best = c;
        const std::size_t pick = cand[best];
        out.push_back(pick);
        std::vector<std::size_t> keep;
        for (std::size_t c : cand)
            if ((c > pick ? c - pick : pick - c) >= min_distance) keep.push_back(c);
        cand = keep;
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Two-sided exact Wilcoxon p-value by enumerating all 2^n sign patterns of
/// the nonzero differences (average ranks for ties).
inline double wilcoxon_enumerated(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] - b[i] != 0.0) d.push_back(a[i] - b[i]);
    const std::size_t n = d.size();
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n; ++i) {
        double less = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::fabs(d[j]) < std::fabs(d[i])) ++less;
            if (std::fabs(d[j]) == std::fabs(d[i])) ++equal;
        }
        ranks[i] = less + (equal + 1.0) / 2.0;
    }
    double wplus = 0, total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total += ranks[i];
        if (d[i] > 0) wplus += ranks[i];
    }
    const double mean = total / 2.0;
    const double observed = std::fabs(wplus - mean);
    std::uint64_t extreme = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << n); ++mask) {
        double w = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1) w += ranks[i];
        if (std::fabs(w - mean) >= observed - 1e-9) ++extreme;
    }
    return std::min(1.0, double(extreme) / double(std::uint64_t(1) << n));
}

/// Entropy of the mean class distribution, written out term by term.
inline double entropy(const std::vector<double>& liver) {
    double m1 = 0;
    for (double p : liver) m1 += p;
    m1 /= double(liver.size());
    const double m0 = 1 - m1;
    double h = 0;
    if (m0 > 0) h -= m0 * std::log(m0);
    if (m1 > 0) h -= m1 * std::log(m1);
    return h;
}

/// Random binary volume: a few random boxes and noise.
inline LabelVolume random_labels(std::mt19937_64& gen, activeseg::Dims d, activeseg::Spacing s, double noise = 0.05) {
    LabelVolume l(d, s);
    std::uniform_int_distribution<int> boxes(1, 3);
    const int nb = boxes(gen);
    for (int b = 0; b < nb; ++b) {
        std::size_t lo[3], hi[3];
        const std::size_t n[3] = {d.nx, d.ny, d.nz};
        for (int a = 0; a < 3; ++a) {
            std::uniform_int_distribution<std::size_t> u(0, n[a] - 1);
            std::size_t p = u(gen), q = u(gen);
            lo[a] = std::min(p, q);
            hi[a] = std::max(p, q);
        }
        for (std::size_t k = lo[2]; k <= hi[2]; ++k)
            for (std::size_t j = lo[1]; j <= hi[1]; ++j)
                for (std::size_t i = lo[0]; i <= hi[0]; ++i) l(i, j, k) = 1;
    }
    std::bernoulli_distribution flip(noise);
    for (std::size_t idx = 0; idx < l.size(); ++idx)
        if (flip(gen)) l[idx] ^= 1;
    return l;
}

/// Central finite difference of f at x along coordinate i.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                                 std::size_t i, double h) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double down = f(x);
    return (up - down) / (2 * h);
}

} // namespace oracle
