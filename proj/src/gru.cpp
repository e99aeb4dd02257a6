#include "mgsim/gru.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mgsim/types.hpp"

namespace mgsim::gru {

namespace {

// out = W . [a, b] + bias
void affine(const Matrix& w, std::span<const double> a, std::span<const double> b, std::span<const double> bias,
            std::vector<double>& out) {
    const std::size_t na = a.size();
    out.resize(w.rows);
    for (std::size_t i = 0; i < w.rows; ++i) {
        const double* row = w.data.data() + i * w.cols;
        double acc = bias[i];
        for (std::size_t j = 0; j < na; ++j) acc += row[j] * a[j];
        for (std::size_t k = 0; k < b.size(); ++k) acc += row[na + k] * b[k];
        out[i] = acc;
    }
}

// dW += da . [a, b]^T
void outer_accumulate(Matrix& dw, std::span<const double> da, std::span<const double> a, std::span<const double> b) {
    const std::size_t na = a.size();
    for (std::size_t i = 0; i < dw.rows; ++i) {
        const double g = da[i];
        if (g == 0.0) continue;
        double* row = dw.data.data() + i * dw.cols;
        for (std::size_t j = 0; j < na; ++j) row[j] += g * a[j];
        for (std::size_t k = 0; k < b.size(); ++k) row[na + k] += g * b[k];
    }
}

// out[k] += sum_i W(i, offset + k) * da[i]  (recurrent block of W^T da)
void recurrent_transpose_accumulate(const Matrix& w, std::size_t offset, std::span<const double> da,
                                    std::vector<double>& out) {
    for (std::size_t i = 0; i < w.rows; ++i) {
        const double g = da[i];
        if (g == 0.0) continue;
        const double* row = w.data.data() + i * w.cols + offset;
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += row[k] * g;
    }
}

void require_shape(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("GruParams: ") + what);
}

}  // namespace

std::string_view to_string(CellVariant v) noexcept {
    return v == CellVariant::Standard ? "standard" : "paper-literal";
}

CellVariant variant_from_string(std::string_view s) {
    if (s == "standard") return CellVariant::Standard;
    if (s == "paper-literal" || s == "paper_literal" || s == "literal") return CellVariant::PaperLiteral;
    throw ConfigError("unknown GRU variant '" + std::string(s) + "'");
}

double sigmoid(double a) noexcept {
    if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
    const double e = std::exp(a);
    return e / (1.0 + e);
}

GruParams GruParams::zeros(std::size_t input_size, std::size_t hidden_size) {
    GruParams p;
    p.input_size = input_size;
    p.hidden_size = hidden_size;
    const std::size_t cols = input_size + hidden_size;
    p.w_r = Matrix(hidden_size, cols);
    p.w_h = Matrix(hidden_size, cols);
    p.w_z = Matrix(hidden_size, cols);
    p.b_r.assign(hidden_size, 0.0);
    p.b_h.assign(hidden_size, 0.0);
    p.b_z.assign(hidden_size, 0.0);
    p.w_out.assign(hidden_size, 0.0);
    p.b_out = 0.0;
    return p;
}

GruParams GruParams::glorot(std::size_t input_size, std::size_t hidden_size, std::mt19937_64& rng) {
    GruParams p = zeros(input_size, hidden_size);
    const auto fill = [&rng](std::span<double> t, double fan_in, double fan_out) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& v : t) v = dist(rng);
    };
    const double gate_in = static_cast<double>(input_size + hidden_size);
    const double gate_out = static_cast<double>(hidden_size);
    fill(p.w_r.data, gate_in, gate_out);
    fill(p.w_h.data, gate_in, gate_out);
    fill(p.w_z.data, gate_in, gate_out);
    fill(p.w_out, gate_out, 1.0);
    return p;
}

void GruParams::check_dims() const {
    const std::size_t cols = input_size + hidden_size;
    require_shape(input_size > 0 && hidden_size > 0, "sizes must be positive");
    for (const Matrix* m : {&w_r, &w_h, &w_z}) {
        require_shape(m->rows == hidden_size && m->cols == cols && m->data.size() == hidden_size * cols,
                      "gate matrix shape mismatch");
    }
    for (const std::vector<double>* v : {&b_r, &b_h, &b_z, &w_out}) {
        require_shape(v->size() == hidden_size, "vector length mismatch");
    }
}

bool GruParams::all_finite() const noexcept {
    for (auto t : tensors()) {
        for (double v : t) {
            if (!std::isfinite(v)) return false;
        }
    }
    return true;
}

std::vector<std::span<double>> GruParams::tensors() {
    return {w_r.data, w_h.data, w_z.data, b_r, b_h, b_z, w_out, std::span<double>(&b_out, 1)};
}

std::vector<std::span<const double>> GruParams::tensors() const {
    return {w_r.data, w_h.data, w_z.data, b_r, b_h, b_z, w_out, std::span<const double>(&b_out, 1)};
}

std::size_t GruParams::parameter_count() const noexcept {
    std::size_t n = 0;
    for (auto t : tensors()) n += t.size();
    return n;
}

void GruParams::set_zero() noexcept {
    for (auto t : tensors()) std::fill(t.begin(), t.end(), 0.0);
}

CellOutput cell_forward(std::span<const double> x, const GruState& prev, const GruParams& p, CellVariant variant) {
    if (x.size() != p.input_size || prev.s.size() != p.hidden_size) {
        throw std::invalid_argument("cell_forward: dimension mismatch");
    }
    const std::size_t H = p.hidden_size;
    CellOutput out;
    CellCache& c = out.cache;
    c.x.assign(x.begin(), x.end());
    c.s_prev = prev.s;

    affine(p.w_r, x, prev.s, p.b_r, c.r);
    affine(p.w_z, x, prev.s, p.b_z, c.z);
    for (std::size_t i = 0; i < H; ++i) {
        c.r[i] = sigmoid(c.r[i]);
        c.z[i] = sigmoid(c.z[i]);
    }

    if (variant == CellVariant::Standard) {
        std::vector<double> gated(H);
        for (std::size_t i = 0; i < H; ++i) gated[i] = c.r[i] * prev.s[i];
        affine(p.w_h, x, gated, p.b_h, c.h);
    } else {
        affine(p.w_h, x, prev.s, p.b_h, c.h);
    }
    for (double& v : c.h) v = std::tanh(v);

    out.state.s.resize(H);
    for (std::size_t i = 0; i < H; ++i) out.state.s[i] = (1.0 - c.z[i]) * c.h[i] + c.z[i] * prev.s[i];
    return out;
}

SequenceCache forward_sequence_cached(const Sequence& seq, const GruParams& p, CellVariant variant) {
    if (seq.width != p.input_size || seq.values.size() != seq.steps * seq.width) {
        throw std::invalid_argument("forward_sequence: sequence shape mismatch");
    }
    SequenceCache cache;
    cache.cells.reserve(seq.steps);
    GruState state = GruState::zeros(p.hidden_size);
    for (std::size_t t = 0; t < seq.steps; ++t) {
        CellOutput o = cell_forward(seq.at(t), state, p, variant);
        state = std::move(o.state);
        cache.cells.push_back(std::move(o.cache));
    }
    double logit = p.b_out;
    for (std::size_t i = 0; i < p.hidden_size; ++i) logit += p.w_out[i] * state.s[i];
    cache.final_state = std::move(state);
    cache.logit = logit;
    cache.output = sigmoid(logit);
    return cache;
}

double forward_sequence(const Sequence& seq, const GruParams& p, CellVariant variant) {
    return forward_sequence_cached(seq, p, variant).output;
}

void backward(const SequenceCache& cache, const GruParams& p, CellVariant variant, double d_output,
              GruParams& grads) {
    const std::size_t H = p.hidden_size;
    const std::size_t I = p.input_size;

    const double d_logit = d_output * cache.output * (1.0 - cache.output);
    grads.b_out += d_logit;
    std::vector<double> ds(H);
    for (std::size_t i = 0; i < H; ++i) {
        grads.w_out[i] += d_logit * cache.final_state.s[i];
        ds[i] = d_logit * p.w_out[i];
    }

    std::vector<double> ds_prev(H), da_h(H), da_z(H), da_r(H), g(H), gated(H);
    for (std::size_t step = cache.cells.size(); step-- > 0;) {
        const CellCache& c = cache.cells[step];

        for (std::size_t i = 0; i < H; ++i) {
            const double dh = ds[i] * (1.0 - c.z[i]);
            const double dz = ds[i] * (c.s_prev[i] - c.h[i]);
            ds_prev[i] = ds[i] * c.z[i];
            da_h[i] = dh * (1.0 - c.h[i] * c.h[i]);
            da_z[i] = dz * c.z[i] * (1.0 - c.z[i]);
        }

        std::fill(g.begin(), g.end(), 0.0);
        recurrent_transpose_accumulate(p.w_h, I, da_h, g);
        if (variant == CellVariant::Standard) {
            for (std::size_t i = 0; i < H; ++i) {
                gated[i] = c.r[i] * c.s_prev[i];
                ds_prev[i] += g[i] * c.r[i];
                da_r[i] = g[i] * c.s_prev[i] * c.r[i] * (1.0 - c.r[i]);
            }
            outer_accumulate(grads.w_h, da_h, c.x, gated);
        } else {
            for (std::size_t i = 0; i < H; ++i) {
                ds_prev[i] += g[i];
                da_r[i] = 0.0;
            }
            outer_accumulate(grads.w_h, da_h, c.x, c.s_prev);
        }

        outer_accumulate(grads.w_z, da_z, c.x, c.s_prev);
        outer_accumulate(grads.w_r, da_r, c.x, c.s_prev);
        for (std::size_t i = 0; i < H; ++i) {
            grads.b_h[i] += da_h[i];
            grads.b_z[i] += da_z[i];
            grads.b_r[i] += da_r[i];
        }
        recurrent_transpose_accumulate(p.w_z, I, da_z, ds_prev);
        recurrent_transpose_accumulate(p.w_r, I, da_r, ds_prev);

        ds.swap(ds_prev);
    }
}

AdamMoments AdamMoments::for_params(const GruParams& p) {
    return {GruParams::zeros(p.input_size, p.hidden_size), GruParams::zeros(p.input_size, p.hidden_size)};
}

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 std::uint64_t t, const AdamConfig& cfg) {
    const double td = static_cast<double>(t);
    const double bias1 = 1.0 - std::pow(cfg.beta1, td);
    const double bias2 = 1.0 - std::pow(cfg.beta2, td);
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        const double m_hat = m[i] / bias1;
        const double v_hat = v[i] / bias2;
        param[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
}

void adam_step(GruParams& p, const GruParams& grads, AdamMoments& moments, std::uint64_t t, const AdamConfig& cfg) {
    if (t == 0) throw std::invalid_argument("adam_step: step index starts at 1");
    auto params = p.tensors();
    auto gs = grads.tensors();
    auto ms = moments.m.tensors();
    auto vs = moments.v.tensors();
    for (std::size_t k = 0; k < params.size(); ++k) adam_update(params[k], gs[k], ms[k], vs[k], t, cfg);
}

}  // namespace mgsim::gru
