#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_set>

#include "activeseg/rng.hpp"

using namespace activeseg;

TEST_CASE("same derivation path gives the same stream") {
    RngStream a = derive_rng(42, {"uss", 2, "dropout", 7});
    RngStream b = derive_rng(42, {"uss", 2, "dropout", 7});
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("words are addressable without advancing") {
    RngStream s = derive_rng(1, {"x"});
    const std::uint64_t w5 = s.at(5);
    for (int i = 0; i < 5; ++i) s.next();
    CHECK(s.next() == w5);
}

TEST_CASE("text and integer labels name different streams") {
    CHECK(derive_rng(3, {"7"}).at(0) != derive_rng(3, {7}).at(0));
    CHECK(derive_rng(3, {"a", "b"}).at(0) != derive_rng(3, {"ab"}).at(0));
    CHECK(derive_rng(3, {"a", "b"}).at(0) != derive_rng(3, {"b", "a"}).at(0));
}

TEST_CASE("sibling creation order does not matter") {
    const RngStream root = derive_rng(9, {"arm"});
    const RngStream first = root.child("uvs");
    const RngStream second = root.child("rvs");
    CHECK(root.child("rvs").key() == second.key());
    CHECK(root.child("uvs").key() == first.key());
    CHECK(root.child(std::uint64_t{4}).key() == root.child_of(StreamLabel(4)).key());
}

TEST_CASE("sibling streams differ in their first word") {
    std::unordered_set<std::uint64_t> firsts;
    const RngStream root = derive_rng(11, {"siblings"});
    for (std::uint64_t i = 0; i < 100000; ++i) firsts.insert(root.child(i).at(0));
    CHECK(firsts.size() == 100000);
}

TEST_CASE("uniform01 stays in [0, 1) and has the right mean") {
    RngStream s = derive_rng(5, {"u"});
    double sum = 0;
    for (int i = 0; i < 200000; ++i) {
        const double u = s.uniform01();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / 200000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("uniform_index is in range and roughly uniform") {
    RngStream s = derive_rng(6, {"idx"});
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const auto v = s.uniform_index(7);
        REQUIRE(v < 7);
        ++counts[v];
    }
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
    CHECK(s.uniform_index(1) == 0);
}

TEST_CASE("uniform_int covers both ends") {
    RngStream s = derive_rng(8, {"int"});
    std::set<std::int64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const auto v = s.uniform_int(-2, 2);
        REQUIRE(v >= -2);
        REQUIRE(v <= 2);
        seen.insert(v);
    }
    CHECK(seen.size() == 5);
}

TEST_CASE("normal has zero mean and unit variance") {
    RngStream s = derive_rng(12, {"n"});
    double sum = 0, sq = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("shuffle is a permutation and depends on the stream") {
    std::vector<int> a(50);
    std::iota(a.begin(), a.end(), 0);
    std::vector<int> b = a;
    RngStream s1 = derive_rng(1, {"shuffle"}), s2 = derive_rng(2, {"shuffle"});
    shuffle(a, s1);
    shuffle(b, s2);
    CHECK(a != b);
    std::sort(a.begin(), a.end());
    for (int i = 0; i < 50; ++i) CHECK(a[i] == i);
}
