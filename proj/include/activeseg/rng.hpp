#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace activeseg {

/// SplitMix64 output function (Steele, Lea, Flood 2014). A bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// FNV-1a over the bytes of a string.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// One path component of a derived stream: a name or an integer index.
struct StreamLabel {
    StreamLabel(std::string_view s) : is_text(true), text(s) {}
    StreamLabel(const char* s) : is_text(true), text(s) {}
    StreamLabel(const std::string& s) : is_text(true), text(s) {}
    template <typename I>
        requires std::is_integral_v<I>
    StreamLabel(I v) : is_text(false), index(static_cast<std::uint64_t>(v)) {}

    bool is_text;
    std::string_view text{};
    std::uint64_t index = 0;
};

/**
 * Counter-based random stream.
 *
 * The stream is fully described by a 64-bit key; the n-th word is
 * mix64(key + (n + 1) * golden_gamma), so any word can be produced directly
 * with at(n) without advancing state. Child streams are derived by hashing a
 * label into the key:
 *
 *     child_key = mix64(mix64(key ^ domain_tag) ^ label_hash)
 *
 * where string labels use FNV-1a and integer labels use mix64, each with a
 * distinct domain tag so "7" and 7 name different streams. Derivation never
 * consumes words from the parent, so the order in which siblings are created
 * or used cannot affect any of them.
 *
 * Distribution helpers are implemented here (not via <random>) so that draws
 * are identical across standard library implementations.
 */
class RngStream {
public:
    using result_type = std::uint64_t;
    static constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

    constexpr RngStream() noexcept = default;
    constexpr explicit RngStream(std::uint64_t key) noexcept : key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr std::uint64_t key() const noexcept { return key_; }
    constexpr std::uint64_t position() const noexcept { return counter_; }

    /// Word at absolute position n of this stream (independent of position()).
    constexpr std::uint64_t at(std::uint64_t n) const noexcept {
        return mix64(key_ + (n + 1) * golden_gamma);
    }

    constexpr std::uint64_t next() noexcept { return at(counter_++); }
    constexpr result_type operator()() noexcept { return next(); }

    RngStream child(std::string_view label) const noexcept;
    RngStream child(std::uint64_t label) const noexcept;
    RngStream child_of(const StreamLabel& label) const noexcept;

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n). n must be > 0. Unbiased (Lemire's method).
    std::uint64_t uniform_index(std::uint64_t n) noexcept;

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;

    /// Standard normal via Box-Muller (one value per call, no caching).
    double normal() noexcept;

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

/// Hierarchical stream derivation: derive_rng(seed, {"uss", 2, "dropout", 7}).
RngStream derive_rng(std::uint64_t master_seed, std::initializer_list<StreamLabel> labels);
RngStream derive_rng(std::uint64_t master_seed, const std::vector<StreamLabel>& labels);

/// In-place Fisher-Yates shuffle driven by an RngStream.
template <typename T>
void shuffle(std::vector<T>& items, RngStream& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_index(i));
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace activeseg
