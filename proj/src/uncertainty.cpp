#include "activeseg/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "activeseg/error.hpp"
#include "activeseg/parallel.hpp"

namespace activeseg {

McSampleSet mc_sample(const MlpParams& params, const ScalarVolume& v, const FeatureConfig& cfg, std::size_t n,
                      std::uint64_t seed) {
    if (n == 0) throw InvalidArgument("mc_sample: sample count must be >= 1");
    const Matrix x = FeatureExtractor(v, cfg).dense();
    if (x.cols != params.input_width()) throw InvalidArgument("mc_sample: feature width does not match parameters");

    const std::size_t L = params.layer_count();
    const auto& sizes = params.sizes();
    std::size_t hidden_units = 0;
    for (std::size_t l = 1; l < L; ++l) hidden_units += sizes[l];
    const std::size_t words_per_row = (hidden_units + 3) / 4;
    const auto drop_below = static_cast<std::uint32_t>(std::lround(params.dropout() * 65536.0));
    const double keep = 1.0 / (1.0 - params.dropout());
    const std::size_t rows = x.rows;

    // The first hidden layer does not depend on the mask.
    Matrix first(rows, sizes[1]);
    parallel_chunks(rows, [&](std::size_t b, std::size_t e) {
        const auto W = params.weights(0);
        const auto bias = params.bias(0);
        for (std::size_t r = b; r < e; ++r) {
            const auto a = x.row(r);
            for (std::size_t o = 0; o < sizes[1]; ++o) {
                double s = bias[o];
                for (std::size_t i = 0; i < sizes[0]; ++i) s += W[o * sizes[0] + i] * a[i];
                first(r, o) = activation(s);
            }
        }
    });

    McSampleSet set;
    set.seed = seed;
    set.samples.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const RngStream stream = derive_rng(seed, {"mc-dropout", k});
        ProbVolume out(v.dims(), v.spacing());
        parallel_chunks(rows, [&](std::size_t b, std::size_t e) {
            std::vector<double> a, next;
            for (std::size_t r = b; r < e; ++r) {
                std::size_t lane = 0;
                std::uint64_t word = 0;
                auto kept = [&]() {
                    if (lane % 4 == 0) word = stream.at(r * words_per_row + lane / 4);
                    const auto bits = static_cast<std::uint32_t>((word >> (16 * (lane % 4))) & 0xFFFF);
                    ++lane;
                    return bits >= drop_below;
                };
                a.assign(first.row(r).begin(), first.row(r).end());
                for (double& t : a) t = kept() ? t * keep : t * 0.0;
                for (std::size_t l = 1; l < L; ++l) {
                    const std::size_t in = sizes[l], outw = sizes[l + 1];
                    const auto W = params.weights(l);
                    const auto bias = params.bias(l);
                    next.resize(outw);
                    for (std::size_t o = 0; o < outw; ++o) {
                        double s = bias[o];
                        for (std::size_t i = 0; i < in; ++i) s += W[o * in + i] * a[i];
                        next[o] = s;
                    }
                    if (l + 1 < L)
                        for (double& t : next) t = kept() ? activation(t) * keep : activation(t) * 0.0;
                    a.swap(next);
                }
                double p0, p1;
                softmax2(a[0], a[1], p0, p1);
                out[r] = p1;
            }
        });
        set.samples.push_back(std::move(out));
    }
    return set;
}

double entropy_of_mean(std::span<const double> liver_probs) {
    if (liver_probs.empty()) throw InvalidArgument("entropy: no samples");
    double sum = 0.0;
    for (double p : liver_probs) sum += p;
    const double m1 = sum / static_cast<double>(liver_probs.size());
    const double m0 = 1.0 - m1;
    auto term = [](double m) { return m > 0.0 ? m * std::log(m) : 0.0; };
    return -(term(m0) + term(m1));
}

EntropyVolume predictive_entropy(const McSampleSet& s) {
    if (s.samples.empty()) throw InvalidArgument("predictive_entropy: empty sample set");
    const ProbVolume& first = s.samples.front();
    for (const ProbVolume& p : s.samples)
        if (!p.same_geometry(first)) throw InvalidArgument("predictive_entropy: samples differ in geometry");
    EntropyVolume e(first.dims(), first.spacing());
    parallel_chunks(e.size(), [&](std::size_t b, std::size_t end) {
        std::vector<double> probs(s.n());
        for (std::size_t idx = b; idx < end; ++idx) {
            for (std::size_t k = 0; k < s.n(); ++k) probs[k] = s.samples[k][idx];
            e[idx] = entropy_of_mean(probs);
        }
    });
    return e;
}

VolumeUncertainty volume_uncertainty(const EntropyVolume& e, const LabelVolume& predicted_mask, Radius3 dilation) {
    if (e.dims() != predicted_mask.dims()) throw InvalidArgument("volume_uncertainty: dims mismatch");
    const LabelVolume region = dilate(predicted_mask, dilation);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t idx = 0; idx < e.size(); ++idx) {
        if (!region[idx]) continue;
        sum += e[idx];
        ++count;
    }
    if (count > 0) return {sum / static_cast<double>(count), false};
    const double all = std::accumulate(e.data().begin(), e.data().end(), 0.0);
    return {all / static_cast<double>(e.size()), true};
}

SliceUncertaintyProfile slice_uncertainty_profile(const EntropyVolume& e) {
    if (e.empty()) throw InvalidArgument("slice_uncertainty_profile: empty volume");
    SliceUncertaintyProfile prof;
    prof.values.resize(e.dims().nz);
    for (std::size_t z = 0; z < e.dims().nz; ++z) {
        const auto s = e.slice(z);
        prof.values[z] = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    }
    return prof;
}

std::vector<std::size_t> find_peaks(std::span<const double> values, std::size_t min_distance) {
    if (min_distance < 1) throw InvalidArgument("find_peaks: min_distance must be >= 1");
    const std::size_t n = values.size();
    std::vector<std::size_t> candidates;
    for (std::size_t a = 0; a < n;) {
        std::size_t b = a;
        while (b + 1 < n && values[b + 1] == values[a]) ++b;
        const bool left_ok = a == 0 || values[a - 1] < values[a];
        const bool right_ok = b == n - 1 || values[b + 1] < values[b];
        if (left_ok && right_ok) candidates.push_back(a);
        a = b + 1;
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](std::size_t l, std::size_t r) { return values[l] > values[r]; });
    std::vector<std::size_t> accepted;
    for (std::size_t c : candidates) {
        const bool far = std::all_of(accepted.begin(), accepted.end(), [&](std::size_t p) {
            return (c > p ? c - p : p - c) >= min_distance;
        });
        if (far) accepted.push_back(c);
    }
    std::sort(accepted.begin(), accepted.end());
    return accepted;
}

} // namespace activeseg
