#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "activeseg/features.hpp"
#include "activeseg/rng.hpp"

namespace activeseg {

/**
 * Parameters of a tanh MLP with a 2-way softmax head:
 *
 *   a0 = x
 *   a_l = dropout(tanh(W_l a_{l-1} + b_l))      for each hidden layer
 *   z   = W_L a_{L-1} + b_L,  p = softmax(z)
 *
 * All weights live in one flat vector (per layer: W row-major out x in, then
 * b), which is what the optimizer and the checkpoint format operate on.
 */
class MlpParams {
public:
    MlpParams() = default;
    /// Zero-initialized. sizes = {inputs, hidden..., 2}.
    MlpParams(std::vector<std::size_t> sizes, double dropout);

    /// Uniform in +-sqrt(6 / (fan_in + fan_out)) for weights, zero biases.
    static MlpParams xavier(std::vector<std::size_t> sizes, double dropout, RngStream& rng);

    const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
    std::size_t layer_count() const noexcept { return sizes_.size() - 1; }
    std::size_t input_width() const noexcept { return sizes_.front(); }
    double dropout() const noexcept { return dropout_; }

    std::span<double> weights(std::size_t layer) noexcept;
    std::span<const double> weights(std::size_t layer) const noexcept;
    std::span<double> bias(std::size_t layer) noexcept;
    std::span<const double> bias(std::size_t layer) const noexcept;

    std::span<double> flat() noexcept { return values_; }
    std::span<const double> flat() const noexcept { return values_; }
    std::size_t parameter_count() const noexcept { return values_.size(); }

    /// Same layer sizes and dropout rate.
    bool same_shape(const MlpParams& o) const noexcept { return sizes_ == o.sizes_ && dropout_ == o.dropout_; }
    bool operator==(const MlpParams&) const = default;

private:
    std::vector<std::size_t> sizes_;
    double dropout_ = 0.0;
    std::vector<std::size_t> offsets_; // start of W_l for each layer
    std::vector<double> values_;
};

/// Inverted-dropout masks, one rows x width matrix per hidden layer. Entries
/// are 0 (dropped) or 1 / (1 - p) (kept).
struct DropoutMask {
    std::vector<Matrix> layers;

    /// Each entry consumes one 16-bit lane of the stream (four per word); the
    /// unit is dropped when the lane is below round(p * 65536).
    static DropoutMask sample(const MlpParams& params, std::size_t rows, RngStream& rng);
    /// All-kept mask (every entry 1 / (1 - p)).
    static DropoutMask keep_all(const MlpParams& params, std::size_t rows);
};

/// tanh through one exp: 1 - 2 / (e^{2x} + 1). Saturates cleanly at +-1.
inline double activation(double x) noexcept { return 1.0 - 2.0 / (std::exp(2.0 * x) + 1.0); }

/// Two-class softmax, shifted by the max logit for stability.
inline void softmax2(double z0, double z1, double& p0, double& p1) noexcept {
    const double m = z0 > z1 ? z0 : z1;
    const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
    p0 = e0 / (e0 + e1);
    p1 = e1 / (e0 + e1);
}

/// Per-row softmax probabilities (rows x 2). A null mask means plain inference.
Matrix forward(const MlpParams& params, const Matrix& features, const DropoutMask* mask = nullptr);

/// Liver-class column of forward().
std::vector<double> forward_liver(const MlpParams& params, const Matrix& features, const DropoutMask* mask = nullptr);

/// Denominator smoothing of the weighted soft Dice loss.
inline constexpr double dice_epsilon = 1e-6;

/// L = 1 - 2 sum(w y p) / (sum(w y) + sum(w p) + eps).
/// Throws EmptyAnnotationError when sum(w) == 0.
double dice_loss(std::span<const double> p, std::span<const double> y, std::span<const double> w);

/// dL/dp_i = -2 w_i (y_i D - A) / D^2 with A = sum(w y p), D the denominator.
std::vector<double> dice_loss_grad(std::span<const double> p, std::span<const double> y, std::span<const double> w);

struct LossGradient {
    double loss = 0.0;
    MlpParams grad; // same shape as the params
};

/// Dice loss of the batch and its gradient with respect to every parameter.
LossGradient backward(const MlpParams& params, const Matrix& features, const DropoutMask* mask,
                      std::span<const double> y, std::span<const double> w);

} // namespace activeseg
