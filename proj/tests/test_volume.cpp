#include <doctest.h>

#include <random>

#include "activeseg/volume.hpp"
#include "oracles.hpp"

using namespace activeseg;

TEST_CASE("geometry is validated") {
    CHECK_THROWS_AS(ScalarVolume(Dims{0, 2, 2}, Spacing{}), InvalidArgument);
    CHECK_THROWS_AS(ScalarVolume(Dims{2, 2, 2}, Spacing{1, 0, 1}), InvalidArgument);
    CHECK_THROWS_AS(ScalarVolume(Dims{2, 2, 2}, Spacing{}, std::vector<double>(7)), InvalidArgument);
}

TEST_CASE("index and coords are inverse") {
    const LabelVolume v(Dims{5, 4, 3}, Spacing{});
    for (std::size_t idx = 0; idx < v.size(); ++idx) {
        const auto c = v.coords(idx);
        CHECK(v.index(c[0], c[1], c[2]) == idx);
    }
    CHECK(v.index(1, 2, 1) == 1 + 5 * (2 + 4 * 1));
}

TEST_CASE("slices are contiguous z planes") {
    ScalarVolume v(Dims{3, 2, 4}, Spacing{});
    for (std::size_t idx = 0; idx < v.size(); ++idx) v[idx] = double(idx);
    const auto s = v.slice(2);
    REQUIRE(s.size() == 6);
    CHECK(s[0] == 12.0);
    CHECK(s[5] == 17.0);
}

TEST_CASE("require_binary rejects other values") {
    LabelVolume l(Dims{2, 2, 2}, Spacing{});
    CHECK_NOTHROW(require_binary(l));
    l[3] = 2;
    CHECK_THROWS_AS(require_binary(l), InvalidArgument);
}

TEST_CASE("resampled extent rounds the physical length") {
    CHECK(resampled_extent(64, 1.0, 2.0) == 32);
    CHECK(resampled_extent(48, 1.5, 1.0) == 72);
    CHECK(resampled_extent(3, 1.0, 10.0) == 1);
}

TEST_CASE("resampling to the same spacing is an exact copy") {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> nd(0, 50);
    ScalarVolume v(Dims{6, 5, 4}, Spacing{1, 1, 1.5});
    for (double& x : v.data()) x = nd(gen);
    CHECK(resample_trilinear(v, v.spacing()) == v);
}

TEST_CASE("trilinear resampling keeps constant fields exact") {
    ScalarVolume v(Dims{7, 6, 5}, Spacing{1, 1, 1.5}, 37.25);
    const ScalarVolume r = resample_trilinear(v, Spacing{0.7, 1.3, 2.0});
    CHECK(r.dims() == Dims{10, 5, 4});
    for (double x : r.values()) CHECK(x == 37.25);
}

TEST_CASE("trilinear resampling reproduces a linear ramp inside the grid") {
    ScalarVolume v(Dims{16, 3, 3}, Spacing{1, 1, 1});
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t i = 0; i < 16; ++i) v(i, j, k) = 3.0 * double(i) - 2.0;
    const ScalarVolume r = resample_trilinear(v, Spacing{2, 1, 1});
    REQUIRE(r.dims().nx == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        // output center (i + 0.5) * 2 mm sits at input index 2i + 0.5
        CHECK(r(i, 1, 1) == doctest::Approx(3.0 * (2.0 * double(i) + 0.5) - 2.0).epsilon(1e-12));
    }
}

TEST_CASE("nearest-neighbor label resampling picks the containing voxel") {
    LabelVolume l(Dims{4, 1, 1}, Spacing{2, 1, 1});
    l[1] = 1;
    const LabelVolume r = resample_labels_nearest(l, Spacing{1, 1, 1});
    REQUIRE(r.dims().nx == 8);
    const std::vector<std::uint8_t> want{0, 0, 1, 1, 0, 0, 0, 0};
    CHECK(r.values() == want);
}

TEST_CASE("dilation matches a brute-force box maximum") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 20; ++trial) {
        const LabelVolume l = oracle::random_labels(gen, Dims{9, 7, 6}, Spacing{}, 0.02);
        const Radius3 r{std::size_t(trial % 3), std::size_t((trial / 3) % 3), std::size_t(trial % 2)};
        const LabelVolume d = dilate(l, r);
        for (std::size_t k = 0; k < 6; ++k)
            for (std::size_t j = 0; j < 7; ++j)
                for (std::size_t i = 0; i < 9; ++i) {
                    std::uint8_t want = 0;
                    for (std::size_t c = 0; c < l.size(); ++c) {
                        const auto p = l.coords(c);
                        auto near = [](std::size_t a, std::size_t b, std::size_t rad) {
                            return (a > b ? a - b : b - a) <= rad;
                        };
                        if (l[c] && near(p[0], i, r.rx) && near(p[1], j, r.ry) && near(p[2], k, r.rz)) want = 1;
                    }
                    REQUIRE(d(i, j, k) == want);
                }
    }
}

TEST_CASE("reflect padding mirrors without repeating the edge") {
    ScalarVolume v(Dims{3, 1, 1}, Spacing{});
    v[0] = 1;
    v[1] = 2;
    v[2] = 3;
    const ScalarVolume p = pad_reflect(v, {2, 0, 0});
    const std::vector<double> want{3, 2, 1, 2, 3, 2, 1};
    CHECK(p.values() == want);
    CHECK_THROWS_AS(pad_reflect(v, {3, 0, 0}), InvalidArgument);
}

TEST_CASE("threshold is inclusive at the level") {
    ScalarVolume v(Dims{3, 1, 1}, Spacing{});
    v[0] = 0.49;
    v[1] = 0.5;
    v[2] = 0.9;
    const std::vector<std::uint8_t> want{0, 1, 1};
    CHECK(threshold(v).values() == want);
}
