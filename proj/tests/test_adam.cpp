#include <doctest.h>

#include <cmath>
#include <vector>

#include "activeseg/adam.hpp"

using namespace activeseg;

TEST_CASE("first step moves each parameter by about the learning rate") {
    std::vector<double> x{1.0, -2.0, 0.5};
    const std::vector<double> g{0.3, -4.0, 0.0};
    AdamState s(3);
    const AdamConfig cfg;
    adam_step(x, g, s, cfg);
    CHECK(s.step == 1);
    CHECK(x[0] == doctest::Approx(1.0 - 1e-3 * 0.3 / (0.3 + 1e-8)).epsilon(1e-15));
    CHECK(x[1] == doctest::Approx(-2.0 + 1e-3 * 4.0 / (4.0 + 1e-8)).epsilon(1e-15));
    CHECK(x[2] == 0.5);
}

TEST_CASE("two steps follow the bias-corrected recurrences") {
    const AdamConfig cfg{0.01, 0.8, 0.9, 1e-6};
    std::vector<double> x{0.0};
    AdamState s(1);
    const double g1 = 2.0, g2 = -1.0;
    adam_step(x, std::vector<double>{g1}, s, cfg);
    adam_step(x, std::vector<double>{g2}, s, cfg);

    double m = 0, v = 0, want = 0;
    int t = 0;
    for (double g : {g1, g2}) {
        ++t;
        m = 0.8 * m + 0.2 * g;
        v = 0.9 * v + 0.1 * g * g;
        const double mh = m / (1 - std::pow(0.8, t)), vh = v / (1 - std::pow(0.9, t));
        want -= 0.01 * mh / (std::sqrt(vh) + 1e-6);
    }
    CHECK(x[0] == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("size mismatches are rejected") {
    std::vector<double> x{1.0, 2.0};
    AdamState s(2);
    CHECK_THROWS(adam_step(x, std::vector<double>{1.0}, s, AdamConfig{}));
    AdamState wrong(3);
    CHECK_THROWS(adam_step(x, std::vector<double>{1.0, 1.0}, wrong, AdamConfig{}));
}
