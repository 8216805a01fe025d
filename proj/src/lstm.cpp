#include "cornyield/lstm.hpp"

#include <algorithm>
#include <cmath>

#include "cornyield/error.hpp"
#include "cornyield/rng.hpp"

namespace cornyield::lstm {

namespace {

constexpr std::string_view kModule = "lstm";

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// pre = b + U x + W h
void preactivation(const LayerParams& p, const double* x, const double* h, double* pre) {
    const std::size_t rows = p.b.size();
    const std::size_t in = p.input_size();
    const std::size_t hid = p.hidden();
    const double* u = p.U.data().data();
    const double* w = p.W.data().data();
    for (std::size_t r = 0; r < rows; ++r) {
        pre[r] = p.b[r] + dot(u + r * in, x, in) + dot(w + r * hid, h, hid);
    }
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = m(r, c);
    }
    return out;
}

// In place: sigmoid on i, f, o blocks, tanh on the candidate block.
void activate(double* gates, std::size_t hidden) {
    for (std::size_t k = 0; k < 3 * hidden; ++k) gates[k] = sigmoid(gates[k]);
    for (std::size_t k = 3 * hidden; k < 4 * hidden; ++k) gates[k] = std::tanh(gates[k]);
}

std::vector<double> dropout_mask(std::size_t n, double rate, std::uint64_t seed) {
    std::vector<double> mask(n, 1.0);
    if (rate <= 0.0) return mask;
    Rng rng(seed);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (double& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
    return mask;
}

void check_finite(std::span<const double> v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw Error(ErrorKind::Numeric, kModule, std::string("non-finite ") + what);
    }
}

}  // namespace

Params Params::zeros_like() const {
    Params z;
    z.layers.reserve(layers.size());
    for (const auto& l : layers) {
        z.layers.push_back(LayerParams{Matrix(l.U.rows(), l.U.cols()), Matrix(l.W.rows(), l.W.cols()),
                                       std::vector<double>(l.b.size(), 0.0)});
    }
    z.head_w.assign(head_w.size(), 0.0);
    z.head_b = 0.0;
    return z;
}

std::size_t Params::count() const {
    std::size_t n = 0;
    for_each_block(*this, [&](const std::string&, std::span<const double> v) { n += v.size(); });
    return n;
}

Layout LstmModel::layout() const {
    Layout l;
    if (!params.layers.empty()) l.input_size = params.layers.front().input_size();
    for (const auto& layer : params.layers) l.hidden_sizes.push_back(layer.hidden());
    return l;
}

void validate(const LstmModel& model) {
    const auto& p = model.params;
    if (p.layers.empty() || p.layers.size() > 2) {
        throw Error(ErrorKind::Shape, kModule, "model must have 1 or 2 layers");
    }
    std::size_t in = p.layers.front().input_size();
    if (in == 0) throw Error(ErrorKind::Shape, kModule, "input size must be positive");
    for (std::size_t k = 0; k < p.layers.size(); ++k) {
        const auto& l = p.layers[k];
        const std::size_t h = l.hidden();
        if (h == 0 || l.U.rows() != kGates * h || l.U.cols() != in || l.W.rows() != kGates * h ||
            l.b.size() != kGates * h) {
            throw Error(ErrorKind::Shape, kModule, "layer " + std::to_string(k) + " has inconsistent shapes");
        }
        in = h;
    }
    if (p.head_w.size() != in) throw Error(ErrorKind::Shape, kModule, "head width does not match last layer");
    if (!(model.dropout_rate >= 0.0 && model.dropout_rate <= 0.5)) {
        throw Error(ErrorKind::Config, kModule, "dropout rate must lie in [0, 0.5]");
    }
    const auto& n = model.norm;
    const std::size_t f = p.layers.front().input_size();
    if (n.feature_mean.size() != f || n.feature_std.size() != f) {
        throw Error(ErrorKind::Shape, kModule, "normalization statistics do not match input size");
    }
    for (double s : n.feature_std) {
        if (!(s > 0.0) || !std::isfinite(s)) throw Error(ErrorKind::Numeric, kModule, "feature std must be positive");
    }
    if (!(n.target_std > 0.0) || !std::isfinite(n.target_mean)) {
        throw Error(ErrorKind::Numeric, kModule, "target normalization must be finite with positive std");
    }
    for_each_block(p, [](const std::string& name, std::span<const double> v) {
        for (double x : v) {
            if (!std::isfinite(x)) throw Error(ErrorKind::Numeric, kModule, "non-finite parameter in " + name);
        }
    });
}

LstmModel init_params(const Layout& layout, std::uint64_t seed, double dropout_rate) {
    if (layout.input_size == 0) throw Error(ErrorKind::Shape, kModule, "input size must be positive");
    if (layout.hidden_sizes.empty() || layout.hidden_sizes.size() > 2) {
        throw Error(ErrorKind::Shape, kModule, "layout must have 1 or 2 layers");
    }
    Rng rng(seed);
    LstmModel model;
    model.dropout_rate = dropout_rate;
    std::size_t in = layout.input_size;
    for (std::size_t h : layout.hidden_sizes) {
        if (h == 0) throw Error(ErrorKind::Shape, kModule, "hidden size must be positive");
        const double s = 1.0 / std::sqrt(static_cast<double>(h));
        LayerParams l{Matrix(kGates * h, in), Matrix(kGates * h, h), std::vector<double>(kGates * h, 0.0)};
        for (double& w : l.U.data()) w = rng.uniform(-s, s);
        for (double& w : l.W.data()) w = rng.uniform(-s, s);
        std::fill_n(l.b.begin() + kForget * h, h, 1.0);
        model.params.layers.push_back(std::move(l));
        in = h;
    }
    const double s = 1.0 / std::sqrt(static_cast<double>(in));
    model.params.head_w.resize(in);
    for (double& w : model.params.head_w) w = rng.uniform(-s, s);
    model.norm.feature_mean.assign(layout.input_size, 0.0);
    model.norm.feature_std.assign(layout.input_size, 1.0);
    validate(model);
    return model;
}

LayerState LayerState::zeros(std::size_t hidden) {
    return LayerState{std::vector<double>(hidden, 0.0), std::vector<double>(hidden, 0.0)};
}

LayerState cell_step(std::span<const double> x, const LayerState& state, const LayerParams& params) {
    const std::size_t h = params.hidden();
    if (x.size() != params.input_size() || state.h.size() != h || state.c.size() != h) {
        throw Error(ErrorKind::Shape, kModule, "cell_step shape mismatch");
    }
    check_finite(x, "cell input");
    std::vector<double> gates(kGates * h);
    preactivation(params, x.data(), state.h.data(), gates.data());
    activate(gates.data(), h);
    LayerState next = LayerState::zeros(h);
    for (std::size_t j = 0; j < h; ++j) {
        const double i = gates[kInput * h + j], f = gates[kForget * h + j];
        const double o = gates[kOutput * h + j], g = gates[kCandidate * h + j];
        next.c[j] = f * state.c[j] + i * g;
        next.h[j] = o * std::tanh(next.c[j]);
    }
    return next;
}

double forward(const Matrix& x, const LstmModel& model, Mode mode, std::uint64_t dropout_seed,
               ForwardCache* cache) {
    const auto& params = model.params;
    const std::size_t f_count = params.layers.front().input_size();
    const std::size_t t_len = x.cols();
    if (t_len == 0) throw Error(ErrorKind::Shape, kModule, "sequence has no time steps");
    if (x.rows() != f_count) {
        throw Error(ErrorKind::Shape, kModule,
                    "expected " + std::to_string(f_count) + " features, got " + std::to_string(x.rows()));
    }

    ForwardCache local;
    ForwardCache& fc = cache ? *cache : local;
    fc.layers.resize(params.layers.size());
    fc.masks.clear();

    // z-scored input, time-major
    Matrix input(t_len, f_count);
    for (std::size_t f = 0; f < f_count; ++f) {
        const double mean = model.norm.feature_mean[f];
        const double inv_std = 1.0 / model.norm.feature_std[f];
        auto row = x.row(f);
        for (std::size_t t = 0; t < t_len; ++t) {
            if (!std::isfinite(row[t])) throw Error(ErrorKind::Numeric, kModule, "non-finite input");
            input(t, f) = (row[t] - mean) * inv_std;
        }
    }

    const bool train = mode == Mode::Train && model.dropout_rate > 0.0;
    for (std::size_t k = 0; k < params.layers.size(); ++k) {
        const LayerParams& lp = params.layers[k];
        const std::size_t h = lp.hidden();
        LayerCache& lc = fc.layers[k];
        lc.input = std::move(input);
        lc.gates = Matrix(t_len, kGates * h);
        lc.c = Matrix(t_len, h);
        lc.tanh_c = Matrix(t_len, h);
        lc.h = Matrix(t_len, h);
        const std::vector<double> zeros(h, 0.0);
        // Column-major copies turn the matrix-vector products into axpy
        // sweeps over contiguous memory.
        const std::size_t in = lp.input_size();
        const Matrix ut = transpose(lp.U);
        const Matrix wt = transpose(lp.W);
        for (std::size_t t = 0; t < t_len; ++t) {
            const double* x_t = lc.input.row(t).data();
            double* gates = lc.gates.row(t).data();
            std::copy(lp.b.begin(), lp.b.end(), gates);
            for (std::size_t j = 0; j < in; ++j) axpy(x_t[j], ut.row(j).data(), gates, kGates * h);
        }
        for (std::size_t t = 0; t < t_len; ++t) {
            const double* h_prev = t == 0 ? zeros.data() : lc.h.row(t - 1).data();
            const double* c_prev = t == 0 ? zeros.data() : lc.c.row(t - 1).data();
            double* gates = lc.gates.row(t).data();
            if (t > 0) {
                for (std::size_t j = 0; j < h; ++j) axpy(h_prev[j], wt.row(j).data(), gates, kGates * h);
            }
            activate(gates, h);
            double* c = lc.c.row(t).data();
            double* tc = lc.tanh_c.row(t).data();
            double* hh = lc.h.row(t).data();
            for (std::size_t j = 0; j < h; ++j) {
                c[j] = gates[kForget * h + j] * c_prev[j] + gates[kInput * h + j] * gates[kCandidate * h + j];
                tc[j] = std::tanh(c[j]);
                hh[j] = gates[kOutput * h + j] * tc[j];
            }
        }
        if (train) fc.masks.push_back(dropout_mask(h, model.dropout_rate, Rng::derive(dropout_seed, k)));
        if (k + 1 < params.layers.size()) {
            input = Matrix(t_len, h);
            for (std::size_t t = 0; t < t_len; ++t) {
                auto src = lc.h.row(t);
                auto dst = input.row(t);
                for (std::size_t j = 0; j < h; ++j) dst[j] = train ? src[j] * fc.masks[k][j] : src[j];
            }
        }
    }

    const LayerCache& top = fc.layers.back();
    const std::size_t h_last = top.h.cols();
    fc.head_input.assign(top.h.row(t_len - 1).begin(), top.h.row(t_len - 1).end());
    if (train) {
        for (std::size_t j = 0; j < h_last; ++j) fc.head_input[j] *= fc.masks.back()[j];
    }
    fc.raw_output = params.head_b + dot(params.head_w.data(), fc.head_input.data(), h_last);
    fc.prediction = model.norm.target_mean + model.norm.target_std * fc.raw_output;
    return fc.prediction;
}

void backward(const ForwardCache& cache, const LstmModel& model, double dloss_dpred, Params& grad) {
    const auto& params = model.params;
    const std::size_t n_layers = params.layers.size();
    const std::size_t t_len = cache.layers.front().h.rows();
    const bool masked = !cache.masks.empty();

    const double d_raw = dloss_dpred * model.norm.target_std;
    grad.head_b += d_raw;
    axpy(d_raw, cache.head_input.data(), grad.head_w.data(), grad.head_w.size());

    // Gradient w.r.t. each layer's output sequence (before its mask).
    const std::size_t h_top = params.layers.back().hidden();
    Matrix dh_out(t_len, h_top);
    for (std::size_t j = 0; j < h_top; ++j) {
        dh_out(t_len - 1, j) = d_raw * params.head_w[j] * (masked ? cache.masks.back()[j] : 1.0);
    }

    for (std::size_t kk = n_layers; kk-- > 0;) {
        const LayerParams& lp = params.layers[kk];
        const LayerCache& lc = cache.layers[kk];
        LayerParams& lg = grad.layers[kk];
        const std::size_t h = lp.hidden();
        const std::size_t in = lp.input_size();
        const bool need_dx = kk > 0;

        const std::size_t g4 = kGates * h;
        std::vector<double> dh_next(h, 0.0), dc_next(h, 0.0), dh(h);
        Matrix d_pre(t_len, g4);
        const double* u = lp.U.data().data();
        const double* w = lp.W.data().data();

        for (std::size_t t = t_len; t-- > 0;) {
            const double* gates = lc.gates.row(t).data();
            const double* tc = lc.tanh_c.row(t).data();
            const double* dho = dh_out.row(t).data();
            double* da = d_pre.row(t).data();
            for (std::size_t j = 0; j < h; ++j) {
                const double i = gates[kInput * h + j], f = gates[kForget * h + j];
                const double o = gates[kOutput * h + j], g = gates[kCandidate * h + j];
                const double c_prev = t == 0 ? 0.0 : lc.c(t - 1, j);
                const double dhj = dho[j] + dh_next[j];
                const double dc = dc_next[j] + dhj * o * (1.0 - tc[j] * tc[j]);
                da[kInput * h + j] = dc * g * i * (1.0 - i);
                da[kForget * h + j] = dc * c_prev * f * (1.0 - f);
                da[kOutput * h + j] = dhj * tc[j] * o * (1.0 - o);
                da[kCandidate * h + j] = dc * i * (1.0 - g * g);
                dc_next[j] = dc * f;
            }
            std::fill(dh.begin(), dh.end(), 0.0);
            if (t > 0) {
                for (std::size_t r = 0; r < g4; ++r) axpy(da[r], w + r * h, dh.data(), h);
            }
            dh_next.swap(dh);
        }

        // Weight gradients as sums of outer products over time, accumulated
        // in transposed form so each update is one contiguous sweep.
        Matrix gut(in, g4), gwt(h, g4);
        for (std::size_t t = 0; t < t_len; ++t) {
            const double* da = d_pre.row(t).data();
            axpy(1.0, da, lg.b.data(), g4);
            const double* x_t = lc.input.row(t).data();
            for (std::size_t j = 0; j < in; ++j) axpy(x_t[j], da, gut.row(j).data(), g4);
            if (t > 0) {
                const double* h_prev = lc.h.row(t - 1).data();
                for (std::size_t j = 0; j < h; ++j) axpy(h_prev[j], da, gwt.row(j).data(), g4);
            }
        }
        for (std::size_t r = 0; r < g4; ++r) {
            for (std::size_t j = 0; j < in; ++j) lg.U(r, j) += gut(j, r);
            for (std::size_t j = 0; j < h; ++j) lg.W(r, j) += gwt(j, r);
        }

        Matrix dx(need_dx ? t_len : 0, need_dx ? in : 0);
        if (need_dx) {
            for (std::size_t t = 0; t < t_len; ++t) {
                const double* da = d_pre.row(t).data();
                double* dx_t = dx.row(t).data();
                for (std::size_t r = 0; r < g4; ++r) axpy(da[r], u + r * in, dx_t, in);
            }
        }

        if (need_dx) {
            // The lower layer's output reached this layer through its mask.
            dh_out = Matrix(t_len, in);
            for (std::size_t t = 0; t < t_len; ++t) {
                for (std::size_t j = 0; j < in; ++j) {
                    dh_out(t, j) = dx(t, j) * (masked ? cache.masks[kk - 1][j] : 1.0);
                }
            }
        }
    }
}

namespace rnn {

RnnParams init(std::size_t input_size, std::size_t hidden, std::uint64_t seed) {
    Rng rng(seed);
    const double s = 1.0 / std::sqrt(static_cast<double>(hidden));
    RnnParams p{Matrix(hidden, input_size), Matrix(hidden, hidden), std::vector<double>(hidden),
                std::vector<double>(hidden), 0.0};
    for (double& v : p.U.data()) v = rng.uniform(-s, s);
    for (double& v : p.W.data()) v = rng.uniform(-s, s);
    for (double& v : p.b) v = rng.uniform(-s, s);
    for (double& v : p.V) v = rng.uniform(-s, s);
    p.c = rng.uniform(-s, s);
    return p;
}

namespace {

// Hidden states h_0..h_T (h_0 = 0), input x is F x T feature-major.
std::vector<std::vector<double>> run(const Matrix& x, const RnnParams& p) {
    const std::size_t hid = p.b.size();
    std::vector<std::vector<double>> hs(x.cols() + 1, std::vector<double>(hid, 0.0));
    for (std::size_t t = 0; t < x.cols(); ++t) {
        for (std::size_t j = 0; j < hid; ++j) {
            double z = p.b[j];
            for (std::size_t f = 0; f < x.rows(); ++f) z += p.U(j, f) * x(f, t);
            for (std::size_t k = 0; k < hid; ++k) z += p.W(j, k) * hs[t][k];
            hs[t + 1][j] = std::tanh(z);
        }
    }
    return hs;
}

}  // namespace

double forward(const Matrix& x, const RnnParams& p) {
    const auto hs = run(x, p);
    return p.c + dot(p.V.data(), hs.back().data(), p.V.size());
}

std::vector<double> gradient(const Matrix& x, double target, const RnnParams& p) {
    const std::size_t hid = p.b.size();
    const std::size_t in = x.rows();
    const auto hs = run(x, p);
    const double pred = p.c + dot(p.V.data(), hs.back().data(), hid);
    const double dy = pred - target;

    RnnParams g{Matrix(hid, in), Matrix(hid, hid), std::vector<double>(hid, 0.0), std::vector<double>(hid, 0.0),
                dy};
    for (std::size_t j = 0; j < hid; ++j) g.V[j] = dy * hs.back()[j];
    std::vector<double> dh(hid);
    for (std::size_t j = 0; j < hid; ++j) dh[j] = dy * p.V[j];
    for (std::size_t t = x.cols(); t-- > 0;) {
        std::vector<double> dz(hid), dh_prev(hid, 0.0);
        for (std::size_t j = 0; j < hid; ++j) dz[j] = dh[j] * (1.0 - hs[t + 1][j] * hs[t + 1][j]);
        for (std::size_t j = 0; j < hid; ++j) {
            g.b[j] += dz[j];
            for (std::size_t f = 0; f < in; ++f) g.U(j, f) += dz[j] * x(f, t);
            for (std::size_t k = 0; k < hid; ++k) {
                g.W(j, k) += dz[j] * hs[t][k];
                dh_prev[k] += dz[j] * p.W(j, k);
            }
        }
        dh = std::move(dh_prev);
    }
    return flatten(g);
}

std::vector<double> flatten(const RnnParams& p) {
    std::vector<double> out(p.U.data().begin(), p.U.data().end());
    out.insert(out.end(), p.W.data().begin(), p.W.data().end());
    out.insert(out.end(), p.b.begin(), p.b.end());
    out.insert(out.end(), p.V.begin(), p.V.end());
    out.push_back(p.c);
    return out;
}

RnnParams unflatten(std::span<const double> flat, std::size_t input_size, std::size_t hidden) {
    RnnParams p{Matrix(hidden, input_size), Matrix(hidden, hidden), std::vector<double>(hidden),
                std::vector<double>(hidden), 0.0};
    const std::size_t expected = hidden * input_size + hidden * hidden + 2 * hidden + 1;
    if (flat.size() != expected) throw Error(ErrorKind::Shape, kModule, "flattened RNN has wrong length");
    auto it = flat.begin();
    auto take = [&](std::span<double> dst) {
        std::copy_n(it, dst.size(), dst.begin());
        it += static_cast<std::ptrdiff_t>(dst.size());
    };
    take(p.U.data());
    take(p.W.data());
    take(p.b);
    take(p.V);
    p.c = *it;
    return p;
}

}  // namespace rnn

}  // namespace cornyield::lstm
