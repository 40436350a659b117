#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "activeseg/error.hpp"
#include "activeseg/metrics.hpp"
#include "oracles.hpp"

using namespace activeseg;

namespace {

LabelVolume box(Dims d, Spacing s, std::array<std::size_t, 3> lo, std::array<std::size_t, 3> hi) {
    LabelVolume l(d, s);
    for (std::size_t k = lo[2]; k < hi[2]; ++k)
        for (std::size_t j = lo[1]; j < hi[1]; ++j)
            for (std::size_t i = lo[0]; i < hi[0]; ++i) l(i, j, k) = 1;
    return l;
}

Dims random_dims(std::mt19937_64& gen, std::size_t max) {
    std::uniform_int_distribution<std::size_t> u(1, max);
    return Dims{u(gen), u(gen), u(gen)};
}

LabelVolume permuted(const LabelVolume& l) { // (i, j, k) -> (k, i, j)
    const Dims d = l.dims();
    const Spacing s = l.spacing();
    LabelVolume out(Dims{d.nz, d.nx, d.ny}, Spacing{s.dz, s.dx, s.dy});
    for (std::size_t k = 0; k < d.nz; ++k)
        for (std::size_t j = 0; j < d.ny; ++j)
            for (std::size_t i = 0; i < d.nx; ++i) out(k, i, j) = l(i, j, k);
    return out;
}

} // namespace

TEST_CASE("dice hand cases") {
    const Dims d{4, 4, 1};
    LabelVolume x(d, Spacing{}), y(d, Spacing{});
    CHECK(dice(x, y) == 1.0);
    for (std::size_t i = 0; i < 4; ++i) x(i, 0, 0) = 1;
    for (std::size_t i = 1; i < 4; ++i) y(i, 0, 0) = 1;
    y(0, 1, 0) = y(0, 2, 0) = y(0, 3, 0) = 1;
    CHECK(dice(x, y) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(dice(x, x) == 1.0);
    LabelVolume z(d, Spacing{});
    z(3, 3, 0) = 1;
    CHECK(dice(x, z) == 0.0);
    CHECK_THROWS_AS(dice(x, LabelVolume(Dims{4, 4, 2}, Spacing{})), InvalidArgument);
}

TEST_CASE("relative volume error") {
    const Spacing s{1, 1, 1};
    LabelVolume x(Dims{11, 10, 1}, s), y(Dims{11, 10, 1}, s);
    for (std::size_t j = 0; j < 10; ++j)
        for (std::size_t i = 0; i < 10; ++i) y(i, j, 0) = 1;
    x = y;
    CHECK(rve(x, y) == 0.0);
    for (std::size_t j = 0; j < 10; ++j) x(10, j, 0) = 1;
    CHECK(rve(x, y) == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(rve(LabelVolume(y.dims(), s), y) == 100.0);
    CHECK_THROWS_AS(rve(y, LabelVolume(y.dims(), s)), UndefinedMetricError);
    CHECK(rve(x, y) != rve(y, x));
}

TEST_CASE("surface extraction") {
    CHECK(extract_surface(LabelVolume(Dims{3, 3, 3}, Spacing{})).empty());
    LabelVolume one(Dims{3, 3, 3}, Spacing{1, 2, 3});
    one(1, 2, 0) = 1;
    const auto s = extract_surface(one);
    REQUIRE(s.points.size() == 1);
    CHECK(s.points[0] == Point3{1.5, 5.0, 1.5});
    const auto cube = extract_surface(box(Dims{5, 5, 5}, Spacing{}, {1, 1, 1}, {4, 4, 4}));
    CHECK(cube.points.size() == 26);
    // border voxels count as surface
    CHECK(extract_surface(box(Dims{3, 3, 3}, Spacing{}, {0, 0, 0}, {3, 3, 3})).points.size() == 26);
}

TEST_CASE("msd and hd hand cases") {
    SurfacePointSet x, y;
    x.points = {{0, 0, 0}};
    y.points = {{3, 4, 0}};
    CHECK(msd(x, y) == 5.0);
    CHECK(hd(x, y) == 5.0);
    CHECK(msd(x, x) == 0.0);
    CHECK(hd(y, y) == 0.0);
    SurfacePointSet big;
    big.points = {{0, 0, 0}, {0, 0, 6}};
    CHECK(hd(x, big) == 6.0);
    CHECK(msd(x, big) == doctest::Approx(1.5));
    CHECK_THROWS_AS(msd(x, SurfacePointSet{}), UndefinedMetricError);
    CHECK_THROWS_AS(hd(SurfacePointSet{}, x), UndefinedMetricError);
}

TEST_CASE("distance transform hand cases") {
    LabelVolume l(Dims{5, 5, 1}, Spacing{1, 1, 1});
    l(0, 0, 0) = 1;
    const ScalarVolume dt = distance_transform(l);
    CHECK(dt(3, 4, 0) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(dt(0, 0, 0) == 0.0);
    LabelVolume full(Dims{3, 4, 2}, Spacing{});
    for (std::size_t i = 0; i < full.size(); ++i) full[i] = 1;
    const ScalarVolume zero = distance_transform(full);
    for (double v : zero.data()) CHECK(v == 0.0);
    CHECK_THROWS_AS(distance_transform(LabelVolume(Dims{2, 2, 2}, Spacing{})), UndefinedMetricError);
}

TEST_CASE("distance transform matches the brute-force field") {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 100; ++trial) {
        const LabelVolume l = oracle::random_labels(gen, random_dims(gen, 12), Spacing{1, 1, 1.5}, 0.02);
        bool any = false;
        for (auto v : l.data()) any = any || v;
        if (!any) continue;
        const ScalarVolume dt = distance_transform(l);
        const auto ref = oracle::distance_field(l);
        double worst = 0;
        for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::fabs(dt[i] - ref[i]));
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("surface distances agree with all-pairs on random masks") {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 60; ++trial) {
        const Dims d = random_dims(gen, 12);
        const Spacing s{1, 1, 1.5};
        const LabelVolume x = oracle::random_labels(gen, d, s);
        const LabelVolume y = oracle::random_labels(gen, d, s);
        if (extract_surface(x).empty() || extract_surface(y).empty()) continue;
        const oracle::Distances ref = oracle::surface_distances(x, y);
        const SurfaceDistances fast = surface_distances(x, y);
        CHECK(std::fabs(fast.msd - ref.msd) <= 1e-9);
        CHECK(std::fabs(fast.hd - ref.hd) <= 1e-9);
        const auto sx = extract_surface(x), sy = extract_surface(y);
        CHECK(std::fabs(msd(sx, sy) - ref.msd) <= 1e-9);
        CHECK(std::fabs(hd(sx, sy) - ref.hd) <= 1e-9);
        // symmetry and ordering
        const SurfaceDistances back = surface_distances(y, x);
        CHECK(std::fabs(back.msd - fast.msd) <= 1e-9);
        CHECK(back.hd == doctest::Approx(fast.hd));
        CHECK(fast.hd >= fast.msd - 1e-12);
    }
}

TEST_CASE("evaluate_case") {
    const Dims d{8, 8, 8};
    const LabelVolume a = box(d, Spacing{}, {2, 2, 2}, {5, 5, 5});
    const MetricSet same = evaluate_case(a, a);
    CHECK(same.dice == 1.0);
    CHECK(same.rve == 0.0);
    CHECK(same.msd == 0.0);
    CHECK(same.hd == 0.0);
    CHECK(same.undefined == 0);
    CHECK(same.flag_string().empty());

    const LabelVolume b = box(d, Spacing{}, {3, 2, 2}, {6, 5, 5});
    const MetricSet shifted = evaluate_case(b, a);
    const oracle::Distances ref = oracle::surface_distances(b, a);
    CHECK(shifted.dice == doctest::Approx(2.0 * 18 / 54));
    CHECK(shifted.msd == doctest::Approx(ref.msd).epsilon(1e-12));
    CHECK(shifted.hd == doctest::Approx(ref.hd).epsilon(1e-12));

    const MetricSet empty_pred = evaluate_case(LabelVolume(d, Spacing{}), a);
    CHECK(empty_pred.dice == 0.0);
    CHECK(empty_pred.rve == 100.0);
    CHECK(!empty_pred.defined(msd_undefined));
    CHECK(!empty_pred.defined(hd_undefined));
    CHECK(empty_pred.defined(rve_undefined));
    CHECK(empty_pred.flag_string() == "msd|hd");

    const MetricSet both_empty = evaluate_case(LabelVolume(d, Spacing{}), LabelVolume(d, Spacing{}));
    CHECK(both_empty.dice == 1.0);
    CHECK(both_empty.flag_string() == "rve|msd|hd");
}

TEST_CASE("metrics are invariant under axis permutation") {
    std::mt19937_64 gen(8);
    for (int trial = 0; trial < 20; ++trial) {
        const Dims d = random_dims(gen, 9);
        const Spacing s{0.7, 1.1, 1.5};
        const LabelVolume x = oracle::random_labels(gen, d, s), y = oracle::random_labels(gen, d, s);
        const MetricSet m = evaluate_case(x, y), p = evaluate_case(permuted(x), permuted(y));
        CHECK(m.undefined == p.undefined);
        CHECK(m.dice == doctest::Approx(p.dice).epsilon(1e-12));
        if (m.defined(rve_undefined)) CHECK(m.rve == doctest::Approx(p.rve).epsilon(1e-12));
        if (m.defined(msd_undefined)) CHECK(m.msd == doctest::Approx(p.msd).epsilon(1e-12));
        if (m.defined(hd_undefined)) CHECK(m.hd == doctest::Approx(p.hd).epsilon(1e-12));
    }
}

TEST_CASE("percentile and summaries") {
    std::vector<double> v;
    for (int i = 1; i <= 100; ++i) v.push_back(i);
    CHECK(percentile(v, 0.95) == doctest::Approx(95.05).epsilon(1e-14));
    CHECK(percentile(v, 0.0) == 1.0);
    CHECK(percentile(v, 1.0) == 100.0);
    CHECK_THROWS_AS(percentile(v, 1.5), InvalidArgument);

    const MetricSummary one = summarize_values(std::vector<double>{0.7});
    CHECK(one.mean == 0.7);
    CHECK(one.p05 == 0.7);
    CHECK(one.p95 == 0.7);
    CHECK(one.sd == 0.0);
    CHECK(summarize_values(std::vector<double>{3, 3, 3}).sd == 0.0);
    CHECK(summarize_values(std::vector<double>{1, 3}).sd == 1.0);
    CHECK_THROWS_AS(summarize_values(std::vector<double>{}), UndefinedMetricError);

    std::vector<double> twice = v;
    twice.insert(twice.end(), v.begin(), v.end());
    const MetricSummary a = summarize_values(v), b = summarize_values(twice);
    CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-15));
    CHECK(a.p05 == doctest::Approx(b.p05).epsilon(1e-15));
    CHECK(a.p95 == doctest::Approx(b.p95).epsilon(1e-15));
}

TEST_CASE("summarize excludes undefined metrics and counts them") {
    MetricSet ok{0.9, 5.0, 1.0, 3.0, 0};
    MetricSet bad{0.0, 100.0, 0.0, 0.0, msd_undefined | hd_undefined};
    const std::vector<MetricSet> cases{ok, bad, ok};
    const SummaryStats s = summarize(cases);
    CHECK(s.dice.count == 3);
    CHECK(s.msd.count == 2);
    CHECK(s.msd.excluded == 1);
    CHECK(s[Metric::hd].mean == 3.0);
    const std::vector<MetricSet> only_bad{bad};
    CHECK_THROWS_AS(summarize(only_bad), UndefinedMetricError);
}

TEST_CASE("wilcoxon matches full enumeration") {
    const std::vector<double> a{1.83, 0.50, 1.62, 2.48, 1.68, 1.88};
    const std::vector<double> b{0.878, 0.647, 0.598, 2.05, 1.06, 1.29};
    const WilcoxonResult r = wilcoxon_signed_rank(a, b);
    CHECK(r.exact);
    CHECK(r.n == 6);
    CHECK(r.w_plus == 20.0);
    CHECK(r.w_minus == 1.0);
    CHECK(r.p_value == doctest::Approx(oracle::wilcoxon_enumerated(a, b)).epsilon(1e-12));
    CHECK(wilcoxon_signed_rank(b, a).p_value == r.p_value);

    std::mt19937_64 gen(3);
    std::uniform_int_distribution<int> len(5, 12), coarse(-4, 4);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> x(len(gen)), y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = coarse(gen), y[i] = coarse(gen);
        std::size_t nonzero = 0;
        for (std::size_t i = 0; i < x.size(); ++i) nonzero += x[i] != y[i];
        if (nonzero < 5) {
            CHECK_THROWS_AS(wilcoxon_signed_rank(x, y), InsufficientDataError);
            continue;
        }
        CHECK(std::fabs(wilcoxon_signed_rank(x, y).p_value - oracle::wilcoxon_enumerated(x, y)) <= 1e-12);
    }
}

TEST_CASE("wilcoxon edge cases") {
    const std::vector<double> a{1, 2, 3, 4, 5, 6};
    CHECK_THROWS_AS(wilcoxon_signed_rank(a, a), InsufficientDataError);
    CHECK_THROWS_AS(wilcoxon_signed_rank(a, std::vector<double>{1, 2}), InvalidArgument);
    std::vector<double> x, y;
    for (int i = 0; i < 30; ++i) x.push_back(i + 0.5), y.push_back(i * 0.9);
    const WilcoxonResult big = wilcoxon_signed_rank(x, y);
    CHECK(!big.exact);
    CHECK(big.p_value > 0.0);
    CHECK(big.p_value < 0.01);
    CHECK(big.p_value <= 1.0);
}
