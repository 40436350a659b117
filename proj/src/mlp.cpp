#include "activeseg/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "activeseg/error.hpp"
#include "activeseg/parallel.hpp"

namespace activeseg {

MlpParams::MlpParams(std::vector<std::size_t> sizes, double dropout) : sizes_(std::move(sizes)), dropout_(dropout) {
    if (sizes_.size() < 3) throw InvalidArgument("mlp: need input, at least one hidden layer and output");
    if (sizes_.back() != 2) throw InvalidArgument("mlp: output layer must have 2 classes");
    if (std::find(sizes_.begin(), sizes_.end(), std::size_t{0}) != sizes_.end())
        throw InvalidArgument("mlp: layer sizes must be positive");
    if (!(dropout_ >= 0.0 && dropout_ < 1.0)) throw InvalidArgument("mlp: dropout rate must be in [0, 1)");
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        offsets_.push_back(total);
        total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
    }
    values_.assign(total, 0.0);
}

MlpParams MlpParams::xavier(std::vector<std::size_t> sizes, double dropout, RngStream& rng) {
    MlpParams p(std::move(sizes), dropout);
    for (std::size_t l = 0; l < p.layer_count(); ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(p.sizes_[l] + p.sizes_[l + 1]));
        for (double& w : p.weights(l)) w = rng.uniform(-limit, limit);
    }
    return p;
}

std::span<double> MlpParams::weights(std::size_t l) noexcept {
    return std::span<double>(values_).subspan(offsets_[l], sizes_[l + 1] * sizes_[l]);
}
std::span<const double> MlpParams::weights(std::size_t l) const noexcept {
    return std::span<const double>(values_).subspan(offsets_[l], sizes_[l + 1] * sizes_[l]);
}
std::span<double> MlpParams::bias(std::size_t l) noexcept {
    return std::span<double>(values_).subspan(offsets_[l] + sizes_[l + 1] * sizes_[l], sizes_[l + 1]);
}
std::span<const double> MlpParams::bias(std::size_t l) const noexcept {
    return std::span<const double>(values_).subspan(offsets_[l] + sizes_[l + 1] * sizes_[l], sizes_[l + 1]);
}

DropoutMask DropoutMask::sample(const MlpParams& params, std::size_t rows, RngStream& rng) {
    DropoutMask m;
    const double keep = 1.0 / (1.0 - params.dropout());
    const auto drop_below = static_cast<std::uint64_t>(std::lround(params.dropout() * 65536.0));
    std::uint64_t word = 0;
    unsigned lanes = 0;
    for (std::size_t l = 0; l + 1 < params.layer_count(); ++l) {
        Matrix layer(rows, params.sizes()[l + 1]);
        for (double& v : layer.values) {
            if (lanes == 0) {
                word = rng.next();
                lanes = 4;
            }
            v = (word & 0xffff) < drop_below ? 0.0 : keep;
            word >>= 16;
            --lanes;
        }
        m.layers.push_back(std::move(layer));
    }
    return m;
}

DropoutMask DropoutMask::keep_all(const MlpParams& params, std::size_t rows) {
    DropoutMask m;
    const double keep = 1.0 / (1.0 - params.dropout());
    for (std::size_t l = 0; l + 1 < params.layer_count(); ++l) m.layers.emplace_back(rows, params.sizes()[l + 1], keep);
    return m;
}

namespace {

void check_shapes(const MlpParams& params, const Matrix& features, const DropoutMask* mask) {
    if (params.sizes().empty()) throw InvalidArgument("mlp: uninitialized parameters");
    if (features.cols != params.input_width())
        throw InvalidArgument("mlp: feature width " + std::to_string(features.cols) + " does not match input size " +
                              std::to_string(params.input_width()));
    if (mask) {
        if (mask->layers.size() != params.layer_count() - 1) throw InvalidArgument("mlp: dropout mask layer count");
        for (std::size_t l = 0; l < mask->layers.size(); ++l)
            if (mask->layers[l].rows != features.rows || mask->layers[l].cols != params.sizes()[l + 1])
                throw InvalidArgument("mlp: dropout mask shape mismatch");
    }
}

// Activations of one row: acts[0] = input, acts[l] = post-dropout output of hidden layer l.
// tanh values are kept separately for the derivative.
struct RowPass {
    std::vector<std::vector<double>> acts;
    std::vector<std::vector<double>> tanh_out;
    double z[2];
    double p[2];
};

void forward_row(const MlpParams& params, std::span<const double> x, const DropoutMask* mask, std::size_t row,
                 RowPass& pass) {
    const std::size_t L = params.layer_count();
    pass.acts.resize(L);
    pass.tanh_out.resize(L - 1);
    pass.acts[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t in = params.sizes()[l], out = params.sizes()[l + 1];
        const auto W = params.weights(l);
        const auto b = params.bias(l);
        const std::vector<double>& a = pass.acts[l];
        if (l + 1 < L) {
            std::vector<double>& t = pass.tanh_out[l];
            t.resize(out);
            std::vector<double>& next = pass.acts[l + 1];
            next.resize(out);
            for (std::size_t o = 0; o < out; ++o) {
                double s = b[o];
                for (std::size_t i = 0; i < in; ++i) s += W[o * in + i] * a[i];
                t[o] = activation(s);
                next[o] = mask ? t[o] * mask->layers[l](row, o) : t[o];
            }
        } else {
            for (std::size_t o = 0; o < 2; ++o) {
                double s = b[o];
                for (std::size_t i = 0; i < in; ++i) s += W[o * in + i] * a[i];
                pass.z[o] = s;
            }
        }
    }
    softmax2(pass.z[0], pass.z[1], pass.p[0], pass.p[1]);
}

void check_loss_inputs(std::span<const double> p, std::span<const double> y, std::span<const double> w) {
    if (p.size() != y.size() || p.size() != w.size()) throw InvalidArgument("dice loss: length mismatch");
    double total = 0.0;
    for (double wi : w) total += wi;
    if (total == 0.0) throw EmptyAnnotationError("dice loss: no annotated voxels in batch");
}

struct DiceTerms {
    double overlap; // sum w y p
    double denom;   // sum w y + sum w p + eps
};

DiceTerms dice_terms(std::span<const double> p, std::span<const double> y, std::span<const double> w) {
    double a = 0.0, sy = 0.0, sp = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        a += w[i] * y[i] * p[i];
        sy += w[i] * y[i];
        sp += w[i] * p[i];
    }
    return {a, sy + sp + dice_epsilon};
}

} // namespace

Matrix forward(const MlpParams& params, const Matrix& features, const DropoutMask* mask) {
    check_shapes(params, features, mask);
    Matrix out(features.rows, 2);
    parallel_chunks(features.rows, [&](std::size_t b, std::size_t e) {
        RowPass pass;
        for (std::size_t r = b; r < e; ++r) {
            forward_row(params, features.row(r), mask, r, pass);
            out(r, 0) = pass.p[0];
            out(r, 1) = pass.p[1];
        }
    });
    return out;
}

std::vector<double> forward_liver(const MlpParams& params, const Matrix& features, const DropoutMask* mask) {
    const Matrix probs = forward(params, features, mask);
    std::vector<double> p(probs.rows);
    for (std::size_t r = 0; r < probs.rows; ++r) p[r] = probs(r, 1);
    return p;
}

double dice_loss(std::span<const double> p, std::span<const double> y, std::span<const double> w) {
    check_loss_inputs(p, y, w);
    const DiceTerms t = dice_terms(p, y, w);
    return 1.0 - 2.0 * t.overlap / t.denom;
}

std::vector<double> dice_loss_grad(std::span<const double> p, std::span<const double> y, std::span<const double> w) {
    check_loss_inputs(p, y, w);
    const DiceTerms t = dice_terms(p, y, w);
    std::vector<double> g(p.size());
    const double inv = 1.0 / (t.denom * t.denom);
    for (std::size_t i = 0; i < p.size(); ++i) g[i] = -2.0 * w[i] * (y[i] * t.denom - t.overlap) * inv;
    return g;
}

LossGradient backward(const MlpParams& params, const Matrix& features, const DropoutMask* mask,
                      std::span<const double> y, std::span<const double> w) {
    check_shapes(params, features, mask);
    if (y.size() != features.rows || w.size() != features.rows) throw InvalidArgument("backward: label length mismatch");

    const std::size_t L = params.layer_count();
    const std::size_t rows = features.rows;
    const auto& sizes = params.sizes();

    // One forward pass, keeping tanh outputs and post-dropout activations.
    std::vector<Matrix> tanh_out, acts;
    for (std::size_t l = 1; l < L; ++l) {
        tanh_out.emplace_back(rows, sizes[l]);
        acts.emplace_back(rows, sizes[l]);
    }
    std::vector<double> p(rows), q(rows); // liver and background probabilities
    parallel_chunks(rows, [&](std::size_t b, std::size_t e) {
        for (std::size_t r = b; r < e; ++r) {
            std::span<const double> a = features.row(r);
            for (std::size_t l = 0; l + 1 < L; ++l) {
                const std::size_t in = sizes[l], out = sizes[l + 1];
                const auto W = params.weights(l);
                const auto bias = params.bias(l);
                auto t = tanh_out[l].row(r);
                auto next = acts[l].row(r);
                for (std::size_t o = 0; o < out; ++o) {
                    double s = bias[o];
                    for (std::size_t i = 0; i < in; ++i) s += W[o * in + i] * a[i];
                    t[o] = activation(s);
                    next[o] = mask ? t[o] * mask->layers[l](r, o) : t[o];
                }
                a = next;
            }
            const std::size_t in = sizes[L - 1];
            const auto W = params.weights(L - 1);
            const auto bias = params.bias(L - 1);
            double z[2];
            for (std::size_t o = 0; o < 2; ++o) {
                double s = bias[o];
                for (std::size_t i = 0; i < in; ++i) s += W[o * in + i] * a[i];
                z[o] = s;
            }
            double p0, p1;
            softmax2(z[0], z[1], p0, p1);
            p[r] = p1;
            q[r] = p0;
        }
    });

    LossGradient out{dice_loss(p, y, w), MlpParams(params.sizes(), params.dropout())};
    const std::vector<double> dp = dice_loss_grad(p, y, w);

    std::vector<double> delta, prev_delta;
    for (std::size_t r = 0; r < rows; ++r) {
        if (dp[r] == 0.0) continue; // zero-weight rows contribute nothing
        // d p1 / d z = p1 (1 - p1) * (-1, +1)
        const double s = p[r] * q[r];
        delta = {-dp[r] * s, dp[r] * s};
        for (std::size_t l = L; l-- > 0;) {
            const std::size_t in = sizes[l], outw = sizes[l + 1];
            auto gW = out.grad.weights(l);
            auto gb = out.grad.bias(l);
            const auto W = params.weights(l);
            const std::span<const double> a = l == 0 ? features.row(r) : acts[l - 1].row(r);
            for (std::size_t o = 0; o < outw; ++o) {
                gb[o] += delta[o];
                for (std::size_t i = 0; i < in; ++i) gW[o * in + i] += delta[o] * a[i];
            }
            if (l == 0) break;
            // back through dropout and tanh of hidden layer l-1
            prev_delta.assign(in, 0.0);
            for (std::size_t o = 0; o < outw; ++o)
                for (std::size_t i = 0; i < in; ++i) prev_delta[i] += W[o * in + i] * delta[o];
            const auto t = tanh_out[l - 1].row(r);
            for (std::size_t i = 0; i < in; ++i) {
                const double m = mask ? mask->layers[l - 1](r, i) : 1.0;
                prev_delta[i] *= m * (1.0 - t[i] * t[i]);
            }
            delta.swap(prev_delta);
        }
    }
    return out;
}

} // namespace activeseg
