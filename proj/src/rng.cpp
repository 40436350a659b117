#include "activeseg/rng.hpp"

#include <cmath>
#include <numbers>

namespace activeseg {

namespace {

constexpr std::uint64_t string_domain = 0x5354524C4142454CULL; // "STRLABEL"
constexpr std::uint64_t int_domain = 0x494E544C4142454CULL;    // "INTLABEL"

} // namespace

RngStream RngStream::child(std::string_view label) const noexcept {
    return RngStream(mix64(mix64(key_ ^ string_domain) ^ fnv1a64(label)));
}

RngStream RngStream::child(std::uint64_t label) const noexcept {
    return RngStream(mix64(mix64(key_ ^ int_domain) ^ mix64(label + golden_gamma)));
}

RngStream RngStream::child_of(const StreamLabel& label) const noexcept {
    return label.is_text ? child(label.text) : child(label.index);
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) noexcept {
    // Lemire, "Fast Random Integer Generation in an Interval" (2019).
    __extension__ using u128 = unsigned __int128;
    u128 m = static_cast<u128>(next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            m = static_cast<u128>(next()) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(uniform_index(span));
}

double RngStream::normal() noexcept {
    const double u1 = 1.0 - uniform01(); // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngStream derive_rng(std::uint64_t master_seed, std::initializer_list<StreamLabel> labels) {
    RngStream s(mix64(master_seed));
    for (const auto& l : labels) s = s.child_of(l);
    return s;
}

RngStream derive_rng(std::uint64_t master_seed, const std::vector<StreamLabel>& labels) {
    RngStream s(mix64(master_seed));
    for (const auto& l : labels) s = s.child_of(l);
    return s;
}

} // namespace activeseg
