#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace mgsim::gru {

/// Standard applies the reset gate to the recurrent term of the candidate
/// state. PaperLiteral feeds the raw previous state to the candidate, so the
/// reset gate is computed but never consumed.
enum class CellVariant { Standard, PaperLiteral };

std::string_view to_string(CellVariant v) noexcept;
CellVariant variant_from_string(std::string_view s);

/// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// GRU layer followed by a single sigmoid unit.
///
/// Gate weight matrices are hidden x (input + hidden) and act on the
/// concatenation [x_t, s_{t-1}] (for the Standard candidate: [x_t, r_t * s_{t-1}]).
struct GruParams {
    std::size_t input_size = 0;
    std::size_t hidden_size = 0;
    Matrix w_r, w_h, w_z;
    std::vector<double> b_r, b_h, b_z;
    std::vector<double> w_out;
    double b_out = 0.0;

    static GruParams zeros(std::size_t input_size, std::size_t hidden_size);

    /// Glorot-uniform weights, zero biases.
    static GruParams glorot(std::size_t input_size, std::size_t hidden_size, std::mt19937_64& rng);

    /// Throws std::invalid_argument when tensor shapes disagree with the sizes.
    void check_dims() const;
    bool all_finite() const noexcept;

    /// Every tensor as a flat view, in a fixed order (w_r, w_h, w_z, b_r, b_h, b_z, w_out, b_out).
    std::vector<std::span<double>> tensors();
    std::vector<std::span<const double>> tensors() const;
    std::size_t parameter_count() const noexcept;

    void set_zero() noexcept;

    friend bool operator==(const GruParams&, const GruParams&) = default;
};

/// Hidden state s_t.
struct GruState {
    std::vector<double> s;

    static GruState zeros(std::size_t hidden_size) { return {std::vector<double>(hidden_size, 0.0)}; }
};

/// Intermediates of one cell evaluation needed for backpropagation.
struct CellCache {
    std::vector<double> x;
    std::vector<double> s_prev;
    std::vector<double> r;
    std::vector<double> z;
    std::vector<double> h;
};

struct CellOutput {
    GruState state;
    CellCache cache;
};

CellOutput cell_forward(std::span<const double> x, const GruState& prev, const GruParams& p, CellVariant variant);

/// A time-major sequence of `steps` input vectors of width `width`.
struct Sequence {
    std::size_t steps = 0;
    std::size_t width = 0;
    std::vector<double> values;

    std::span<const double> at(std::size_t t) const { return {values.data() + t * width, width}; }
};

struct SequenceCache {
    std::vector<CellCache> cells;
    GruState final_state;
    double logit = 0.0;
    double output = 0.0;
};

double sigmoid(double a) noexcept;

/// Unrolls from a zero state and returns sigmoid(w_out . s_T + b_out).
double forward_sequence(const Sequence& seq, const GruParams& p, CellVariant variant);

SequenceCache forward_sequence_cached(const Sequence& seq, const GruParams& p, CellVariant variant);

/// Backpropagation through time. `d_output` is dLoss/d(output); gradients are
/// accumulated into `grads`, which must have the same shape as `p`.
void backward(const SequenceCache& cache, const GruParams& p, CellVariant variant, double d_output,
              GruParams& grads);

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First and second moment estimates, shaped like the parameters.
struct AdamMoments {
    GruParams m;
    GruParams v;

    static AdamMoments for_params(const GruParams& p);
};

/// Bias-corrected Adam update of one flat tensor; t is the 1-based step index.
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 std::uint64_t t, const AdamConfig& cfg);

void adam_step(GruParams& p, const GruParams& grads, AdamMoments& moments, std::uint64_t t, const AdamConfig& cfg);

}  // namespace mgsim::gru
