#include "trmc/nn/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "trmc/io_error.hpp"

namespace trmc::nn {

const char* to_string(Optimizer opt) {
    return opt == Optimizer::Momentum ? "momentum" : "adam";
}

Optimizer optimizer_from_string(const std::string& name) {
    if (name == "momentum") return Optimizer::Momentum;
    if (name == "adam") return Optimizer::Adam;
    throw std::invalid_argument("unknown optimizer: " + name);
}

void PredictorConfig::validate() const {
    if (n_sites < 2) throw std::invalid_argument("n_sites must be >= 2");
    if (window < 1) throw std::invalid_argument("window must be >= 1");
    if (dense_in < 1 || conv1_channels < 1 || conv2_channels < 1 || lstm_hidden < 1)
        throw std::invalid_argument("layer widths must be >= 1");
    for (const int k : {conv1_kernel, conv2_kernel}) {
        if (k < 1 || k % 2 == 0) throw std::invalid_argument("kernel widths must be odd and >= 1");
        if (k >= dense_in) throw std::invalid_argument("kernel widths must be < dense_in");
    }
    if (!(dropout_rate >= 0.0) || !(dropout_rate < 1.0))
        throw std::invalid_argument("dropout_rate must be in [0, 1)");
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (!(momentum >= 0.0) || !(momentum < 1.0))
        throw std::invalid_argument("momentum must be in [0, 1)");
    if (!(lr_decay > 0.0) || !(lr_decay <= 1.0))
        throw std::invalid_argument("lr_decay must be in (0, 1]");
    if (lr_decay_every < 0) throw std::invalid_argument("lr_decay_every must be >= 0");
    if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
}

namespace detail {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void conv1d_periodic(const Matrix& w, const Vector& bias, const double* in,
                     int in_channels, int length, double* out) {
    const int out_channels = w.rows;
    const int k = w.cols / in_channels;
    const int half = k / 2;
    for (int o = 0; o < out_channels; ++o) {
        const double* wo = w.row_ptr(o);
        for (int x = 0; x < length; ++x) {
            double sum = bias[static_cast<std::size_t>(o)];
            for (int ci = 0; ci < in_channels; ++ci) {
                const double* in_c = in + static_cast<std::size_t>(ci) * length;
                const double* w_c = wo + static_cast<std::size_t>(ci) * k;
                for (int j = 0; j < k; ++j) {
                    int pos = x + j - half;
                    if (pos < 0) pos += length;
                    else if (pos >= length) pos -= length;
                    sum += w_c[j] * in_c[pos];
                }
            }
            out[static_cast<std::size_t>(o) * length + x] = sum;
        }
    }
}

void fill_dropout_mask(double rate, Xoshiro256StarStar& rng, double* mask, std::size_t n) {
    if (rate <= 0.0) {
        std::fill(mask, mask + n, 1.0);
        return;
    }
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < n; ++i)
        mask[i] = rng.uniform01() < rate ? 0.0 : keep_scale;
}

namespace {

void conv1d_periodic_backward(const Matrix& w, const double* in, int in_channels,
                              int length, const double* d_out, Matrix& d_w, Vector& d_b,
                              double* d_in) {
    const int out_channels = w.rows;
    const int k = w.cols / in_channels;
    const int half = k / 2;
    for (int o = 0; o < out_channels; ++o) {
        const double* wo = w.row_ptr(o);
        double* dwo = d_w.row_ptr(o);
        for (int x = 0; x < length; ++x) {
            const double g = d_out[static_cast<std::size_t>(o) * length + x];
            if (g == 0.0) continue;
            d_b[static_cast<std::size_t>(o)] += g;
            for (int ci = 0; ci < in_channels; ++ci) {
                const double* in_c = in + static_cast<std::size_t>(ci) * length;
                const double* w_c = wo + static_cast<std::size_t>(ci) * k;
                double* dw_c = dwo + static_cast<std::size_t>(ci) * k;
                double* din_c =
                    d_in ? d_in + static_cast<std::size_t>(ci) * length : nullptr;
                for (int j = 0; j < k; ++j) {
                    int pos = x + j - half;
                    if (pos < 0) pos += length;
                    else if (pos >= length) pos -= length;
                    dw_c[j] += in_c[pos] * g;
                    if (din_c) din_c[pos] += w_c[j] * g;
                }
            }
        }
    }
}

constexpr double kProbEps = 1e-7;

struct ForwardCache {
    Matrix x;          // W x N
    Matrix dense_pre;  // W x D
    Matrix dense_act;  // W x D
    Matrix conv1_pre;  // W x (c1*D)
    Matrix conv1_act;
    Matrix conv2_pre;  // W x (c2*D)
    Matrix conv2_act;
    Matrix mask;       // W x (c2*D), already scaled
    Matrix features;   // W x F
    Matrix gates;      // W x 4H, post-activation (i, f, g, o)
    Matrix cell;       // W x H
    Matrix cell_tanh;  // W x H
    Matrix hidden;     // W x H
    Vector logits;
    Vector probs;
};

void forward_cached(const PredictorModel& model, std::span<const std::uint8_t> input,
                    bool training, Xoshiro256StarStar* dropout_rng, ForwardCache& cache) {
    const auto& cfg = model.config;
    const int w_steps = cfg.window;
    const int n = cfg.n_sites;
    const int d = cfg.dense_in;
    const int c1 = cfg.conv1_channels;
    const int c2 = cfg.conv2_channels;
    const int h = cfg.lstm_hidden;
    const int f = cfg.feature_size();

    if (input.size() != static_cast<std::size_t>(w_steps) * n)
        throw std::invalid_argument("input shape mismatch: expected " +
                                    std::to_string(w_steps) + "x" + std::to_string(n));
    if (training && cfg.dropout_rate > 0.0 && dropout_rng == nullptr)
        throw std::invalid_argument("training-mode forward needs a dropout stream");

    cache.x = Matrix(w_steps, n);
    cache.dense_pre = Matrix(w_steps, d);
    cache.dense_act = Matrix(w_steps, d);
    cache.conv1_pre = Matrix(w_steps, c1 * d);
    cache.conv1_act = Matrix(w_steps, c1 * d);
    cache.conv2_pre = Matrix(w_steps, c2 * d);
    cache.conv2_act = Matrix(w_steps, c2 * d);
    cache.mask = Matrix(w_steps, c2 * d, 1.0);
    cache.features = Matrix(w_steps, f);
    cache.gates = Matrix(w_steps, 4 * h);
    cache.cell = Matrix(w_steps, h);
    cache.cell_tanh = Matrix(w_steps, h);
    cache.hidden = Matrix(w_steps, h);

    for (int t = 0; t < w_steps; ++t) {
        double* x_t = cache.x.row_ptr(t);
        for (int i = 0; i < n; ++i)
            x_t[i] = static_cast<double>(input[static_cast<std::size_t>(t) * n + i]);

        double* pre = cache.dense_pre.row_ptr(t);
        gemv(model.w_in, x_t, pre);
        for (int i = 0; i < d; ++i) pre[i] += model.b_in[static_cast<std::size_t>(i)];
        double* act = cache.dense_act.row_ptr(t);
        for (int i = 0; i < d; ++i) act[i] = pre[i] > 0.0 ? pre[i] : 0.0;

        conv1d_periodic(model.conv1_w, model.conv1_b, act, 1, d, cache.conv1_pre.row_ptr(t));
        for (int i = 0; i < c1 * d; ++i) {
            const double v = cache.conv1_pre(t, i);
            cache.conv1_act(t, i) = v > 0.0 ? v : 0.0;
        }

        conv1d_periodic(model.conv2_w, model.conv2_b, cache.conv1_act.row_ptr(t), c1, d,
                        cache.conv2_pre.row_ptr(t));
        for (int i = 0; i < c2 * d; ++i) {
            const double v = cache.conv2_pre(t, i);
            cache.conv2_act(t, i) = v > 0.0 ? v : 0.0;
        }

        if (training && cfg.dropout_rate > 0.0)
            fill_dropout_mask(cfg.dropout_rate, *dropout_rng, cache.mask.row_ptr(t),
                              static_cast<std::size_t>(c2) * d);
        for (int i = 0; i < f; ++i)
            cache.features(t, i) = cache.conv2_act(t, i) * cache.mask(t, i);
    }

    // LSTM scan over the window.
    Vector z(static_cast<std::size_t>(4) * h);
    for (int t = 0; t < w_steps; ++t) {
        gemv(model.lstm.w_x, cache.features.row_ptr(t), z.data());
        if (t > 0) gemv_add(model.lstm.w_h, cache.hidden.row_ptr(t - 1), z.data());
        for (int i = 0; i < 4 * h; ++i) z[static_cast<std::size_t>(i)] += model.lstm.b[static_cast<std::size_t>(i)];

        double* gate = cache.gates.row_ptr(t);
        for (int i = 0; i < h; ++i) {
            gate[i] = detail::sigmoid(z[static_cast<std::size_t>(i)]);                    // input
            gate[h + i] = detail::sigmoid(z[static_cast<std::size_t>(h + i)]);            // forget
            gate[2 * h + i] = std::tanh(z[static_cast<std::size_t>(2 * h + i)]);          // candidate
            gate[3 * h + i] = detail::sigmoid(z[static_cast<std::size_t>(3 * h + i)]);    // output
        }
        for (int i = 0; i < h; ++i) {
            const double c_prev = t > 0 ? cache.cell(t - 1, i) : 0.0;
            const double c = gate[h + i] * c_prev + gate[i] * gate[2 * h + i];
            cache.cell(t, i) = c;
            const double ct = std::tanh(c);
            cache.cell_tanh(t, i) = ct;
            cache.hidden(t, i) = gate[3 * h + i] * ct;
        }
    }

    cache.logits.assign(static_cast<std::size_t>(n), 0.0);
    gemv(model.w_out, cache.hidden.row_ptr(w_steps - 1), cache.logits.data());
    cache.probs.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        cache.logits[static_cast<std::size_t>(i)] += model.b_out[static_cast<std::size_t>(i)];
        cache.probs[static_cast<std::size_t>(i)] = detail::sigmoid(cache.logits[static_cast<std::size_t>(i)]);
    }
}

double backward_from_cache(const PredictorModel& model, const ForwardCache& cache,
                           std::span<const std::uint8_t> target, Gradients& grads) {
    const auto& cfg = model.config;
    const int w_steps = cfg.window;
    const int n = cfg.n_sites;
    const int d = cfg.dense_in;
    const int c1 = cfg.conv1_channels;
    const int c2 = cfg.conv2_channels;
    const int h = cfg.lstm_hidden;

    if (target.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("target shape mismatch");
    int n_vehicle = 0;
    for (const auto y : target) n_vehicle += y;

    const double total_loss = loss(cache.probs, target, cfg.alpha, n_vehicle);

    // d(loss)/d(logit): clamped BCE term plus the constant count-penalty pull.
    Vector dz_out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double p = cache.probs[static_cast<std::size_t>(i)];
        const double p_hat = std::clamp(p, kProbEps, 1.0 - kProbEps);
        const double y = static_cast<double>(target[static_cast<std::size_t>(i)]);
        double d_p = -cfg.alpha;
        if (p == p_hat)
            d_p += -(y / p_hat - (1.0 - y) / (1.0 - p_hat)) / static_cast<double>(n);
        dz_out[static_cast<std::size_t>(i)] = d_p * p * (1.0 - p);
    }

    outer_add(grads.w_out, dz_out.data(), cache.hidden.row_ptr(w_steps - 1));
    for (int i = 0; i < n; ++i) grads.b_out[static_cast<std::size_t>(i)] += dz_out[static_cast<std::size_t>(i)];

    Vector dh(static_cast<std::size_t>(h), 0.0);
    gemv_transpose_add(model.w_out, dz_out.data(), dh.data());

    Vector dc(static_cast<std::size_t>(h), 0.0);
    Vector dz4(static_cast<std::size_t>(4) * h);
    Vector dphi(static_cast<std::size_t>(cfg.feature_size()));
    Vector dconv2_pre(static_cast<std::size_t>(c2) * d);
    Vector dconv1_act(static_cast<std::size_t>(c1) * d);
    Vector dconv1_pre(static_cast<std::size_t>(c1) * d);
    Vector ddense_act(static_cast<std::size_t>(d));
    Vector ddense_pre(static_cast<std::size_t>(d));

    for (int t = w_steps - 1; t >= 0; --t) {
        const double* gate = cache.gates.row_ptr(t);
        for (int i = 0; i < h; ++i) {
            const double gi = gate[i];
            const double gf = gate[h + i];
            const double gg = gate[2 * h + i];
            const double go = gate[3 * h + i];
            const double ct = cache.cell_tanh(t, i);
            const double c_prev = t > 0 ? cache.cell(t - 1, i) : 0.0;

            const double d_o = dh[static_cast<std::size_t>(i)] * ct;
            const double d_c = dc[static_cast<std::size_t>(i)] +
                               dh[static_cast<std::size_t>(i)] * go * (1.0 - ct * ct);
            const double d_i = d_c * gg;
            const double d_g = d_c * gi;
            const double d_f = d_c * c_prev;
            dc[static_cast<std::size_t>(i)] = d_c * gf;  // becomes dc for t-1

            dz4[static_cast<std::size_t>(i)] = d_i * gi * (1.0 - gi);
            dz4[static_cast<std::size_t>(h + i)] = d_f * gf * (1.0 - gf);
            dz4[static_cast<std::size_t>(2 * h + i)] = d_g * (1.0 - gg * gg);
            dz4[static_cast<std::size_t>(3 * h + i)] = d_o * go * (1.0 - go);
        }

        outer_add(grads.lstm_wx, dz4.data(), cache.features.row_ptr(t));
        if (t > 0) outer_add(grads.lstm_wh, dz4.data(), cache.hidden.row_ptr(t - 1));
        for (int i = 0; i < 4 * h; ++i) grads.lstm_b[static_cast<std::size_t>(i)] += dz4[static_cast<std::size_t>(i)];

        std::fill(dphi.begin(), dphi.end(), 0.0);
        gemv_transpose_add(model.lstm.w_x, dz4.data(), dphi.data());
        std::fill(dh.begin(), dh.end(), 0.0);
        if (t > 0) gemv_transpose_add(model.lstm.w_h, dz4.data(), dh.data());

        // Feature extractor backward for step t.
        for (int i = 0; i < c2 * d; ++i) {
            const double d_act = dphi[static_cast<std::size_t>(i)] * cache.mask(t, i);
            dconv2_pre[static_cast<std::size_t>(i)] =
                cache.conv2_pre(t, i) > 0.0 ? d_act : 0.0;
        }
        std::fill(dconv1_act.begin(), dconv1_act.end(), 0.0);
        conv1d_periodic_backward(model.conv2_w, cache.conv1_act.row_ptr(t), c1, d,
                                 dconv2_pre.data(), grads.conv2_w, grads.conv2_b,
                                 dconv1_act.data());

        for (int i = 0; i < c1 * d; ++i)
            dconv1_pre[static_cast<std::size_t>(i)] =
                cache.conv1_pre(t, i) > 0.0 ? dconv1_act[static_cast<std::size_t>(i)] : 0.0;
        std::fill(ddense_act.begin(), ddense_act.end(), 0.0);
        conv1d_periodic_backward(model.conv1_w, cache.dense_act.row_ptr(t), 1, d,
                                 dconv1_pre.data(), grads.conv1_w, grads.conv1_b,
                                 ddense_act.data());

        for (int i = 0; i < d; ++i)
            ddense_pre[static_cast<std::size_t>(i)] =
                cache.dense_pre(t, i) > 0.0 ? ddense_act[static_cast<std::size_t>(i)] : 0.0;
        outer_add(grads.w_in, ddense_pre.data(), cache.x.row_ptr(t));
        for (int i = 0; i < d; ++i) grads.b_in[static_cast<std::size_t>(i)] += ddense_pre[static_cast<std::size_t>(i)];
    }

    return total_loss;
}

}  // namespace
}  // namespace detail

std::vector<TensorRef> tensor_refs(PredictorModel& m) {
    auto mat = [](const char* name, Matrix& x) {
        return TensorRef{name, x.data.data(), x.size(), x.rows, x.cols};
    };
    auto vec = [](const char* name, Vector& x) {
        return TensorRef{name, x.data(), x.size(), 1, static_cast<int>(x.size())};
    };
    return {mat("w_in", m.w_in),       vec("b_in", m.b_in),
            mat("conv1_w", m.conv1_w), vec("conv1_b", m.conv1_b),
            mat("conv2_w", m.conv2_w), vec("conv2_b", m.conv2_b),
            mat("lstm_wx", m.lstm.w_x), mat("lstm_wh", m.lstm.w_h),
            vec("lstm_b", m.lstm.b),   mat("w_out", m.w_out),
            vec("b_out", m.b_out)};
}

std::vector<TensorRef> tensor_refs(Gradients& g) {
    auto mat = [](const char* name, Matrix& x) {
        return TensorRef{name, x.data.data(), x.size(), x.rows, x.cols};
    };
    auto vec = [](const char* name, Vector& x) {
        return TensorRef{name, x.data(), x.size(), 1, static_cast<int>(x.size())};
    };
    return {mat("w_in", g.w_in),       vec("b_in", g.b_in),
            mat("conv1_w", g.conv1_w), vec("conv1_b", g.conv1_b),
            mat("conv2_w", g.conv2_w), vec("conv2_b", g.conv2_b),
            mat("lstm_wx", g.lstm_wx), mat("lstm_wh", g.lstm_wh),
            vec("lstm_b", g.lstm_b),   mat("w_out", g.w_out),
            vec("b_out", g.b_out)};
}

PredictorModel init_model(const PredictorConfig& config) {
    config.validate();
    PredictorModel m;
    m.config = config;
    const int n = config.n_sites;
    const int d = config.dense_in;
    const int h = config.lstm_hidden;
    const int f = config.feature_size();

    m.w_in = Matrix(d, n);
    m.b_in.assign(static_cast<std::size_t>(d), 0.0);
    m.conv1_w = Matrix(config.conv1_channels, config.conv1_kernel);
    m.conv1_b.assign(static_cast<std::size_t>(config.conv1_channels), 0.0);
    m.conv2_w = Matrix(config.conv2_channels, config.conv1_channels * config.conv2_kernel);
    m.conv2_b.assign(static_cast<std::size_t>(config.conv2_channels), 0.0);
    m.lstm.w_x = Matrix(4 * h, f);
    m.lstm.w_h = Matrix(4 * h, h);
    m.lstm.b.assign(static_cast<std::size_t>(4) * h, 0.0);
    m.w_out = Matrix(n, h);
    m.b_out.assign(static_cast<std::size_t>(n), 0.0);

    Xoshiro256StarStar rng(config.init_seed);
    auto fill_uniform = [&rng](Matrix& w, int fan_in) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& v : w.data) v = (2.0 * rng.uniform01() - 1.0) * scale;
    };
    fill_uniform(m.w_in, n);
    fill_uniform(m.conv1_w, config.conv1_kernel);
    fill_uniform(m.conv2_w, config.conv1_channels * config.conv2_kernel);
    fill_uniform(m.lstm.w_x, f);
    fill_uniform(m.lstm.w_h, h);
    fill_uniform(m.w_out, h);

    // Forget-gate bias at 1 so early training does not flush the cell state.
    for (int i = 0; i < h; ++i) m.lstm.b[static_cast<std::size_t>(h + i)] = 1.0;

    m.dropout_seed = derive_seed(config.init_seed, 0);
    return m;
}

Vector forward(const PredictorModel& model, std::span<const std::uint8_t> input,
               bool training, Xoshiro256StarStar* dropout_rng) {
    detail::ForwardCache cache;
    detail::forward_cached(model, input, training, dropout_rng, cache);
    return cache.probs;
}

double loss(const Vector& pred, std::span<const std::uint8_t> target, double alpha,
            int n_vehicle) {
    if (pred.size() != target.size())
        throw std::invalid_argument("prediction/target shape mismatch");
    const double n = static_cast<double>(pred.size());
    double bce = 0.0;
    double mass = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = std::clamp(pred[i], detail::kProbEps, 1.0 - detail::kProbEps);
        bce += target[i] ? std::log(p) : std::log(1.0 - p);
        mass += pred[i];
    }
    return -bce / n + alpha * (static_cast<double>(n_vehicle) - mass);
}

double accuracy(const Vector& pred, std::span<const std::uint8_t> target) {
    if (pred.size() != target.size())
        throw std::invalid_argument("prediction/target shape mismatch");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const std::uint8_t bit = pred[i] > 0.5 ? 1 : 0;
        if (bit == target[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

Gradients make_gradients(const PredictorModel& m) {
    Gradients g;
    g.w_in = Matrix(m.w_in.rows, m.w_in.cols);
    g.b_in.assign(m.b_in.size(), 0.0);
    g.conv1_w = Matrix(m.conv1_w.rows, m.conv1_w.cols);
    g.conv1_b.assign(m.conv1_b.size(), 0.0);
    g.conv2_w = Matrix(m.conv2_w.rows, m.conv2_w.cols);
    g.conv2_b.assign(m.conv2_b.size(), 0.0);
    g.lstm_wx = Matrix(m.lstm.w_x.rows, m.lstm.w_x.cols);
    g.lstm_wh = Matrix(m.lstm.w_h.rows, m.lstm.w_h.cols);
    g.lstm_b.assign(m.lstm.b.size(), 0.0);
    g.w_out = Matrix(m.w_out.rows, m.w_out.cols);
    g.b_out.assign(m.b_out.size(), 0.0);
    return g;
}

double backward(const PredictorModel& model, std::span<const std::uint8_t> input,
                std::span<const std::uint8_t> target, Xoshiro256StarStar* dropout_rng,
                Gradients& grads) {
    detail::ForwardCache cache;
    detail::forward_cached(model, input, dropout_rng != nullptr, dropout_rng, cache);
    return detail::backward_from_cache(model, cache, target, grads);
}

namespace {

std::span<const std::uint8_t> sample_input(const Sample& s) {
    return {s.input.data(), s.input.size()};
}
std::span<const std::uint8_t> sample_target(const Sample& s) {
    return {s.target.data(), s.target.size()};
}

void check_shapes(const PredictorConfig& cfg, const Dataset& d, const char* which) {
    if (d.n_sites != cfg.n_sites || d.window != cfg.window)
        throw std::invalid_argument(std::string(which) +
                                    " dataset shape does not match the model config");
}

struct MeanMetrics {
    double loss = 0.0;
    double accuracy = 0.0;
};

MeanMetrics mean_metrics(const PredictorModel& model, const Dataset& data) {
    MeanMetrics m;
    if (data.samples.empty()) return m;
    for (const auto& s : data.samples) {
        const Vector p = forward(model, sample_input(s));
        int n_vehicle = 0;
        for (const auto y : s.target) n_vehicle += y;
        m.loss += loss(p, sample_target(s), model.config.alpha, n_vehicle);
        m.accuracy += accuracy(p, sample_target(s));
    }
    const double n = static_cast<double>(data.samples.size());
    m.loss /= n;
    m.accuracy /= n;
    return m;
}

}  // namespace

EpochMetrics evaluate(const PredictorModel& model, const Dataset& train_part,
                      const Dataset& test_part) {
    const MeanMetrics tr = mean_metrics(model, train_part);
    const MeanMetrics te = mean_metrics(model, test_part);
    return {tr.loss, tr.accuracy, te.loss, te.accuracy};
}

TrainingHistory train(PredictorModel& model, const SplitDataset& data,
                      const EpochCallback& progress) {
    model.config.validate();
    check_shapes(model.config, data.train, "train");
    check_shapes(model.config, data.test, "test");
    if (data.train.samples.empty()) throw std::invalid_argument("empty training set");

    const auto& cfg = model.config;
    const std::size_t n_train = data.train.samples.size();

    Gradients grads = make_gradients(model);
    Gradients first_moment = make_gradients(model);   // momentum velocity / Adam m
    Gradients second_moment = make_gradients(model);  // Adam v
    auto grad_refs = tensor_refs(grads);
    auto m1_refs = tensor_refs(first_moment);
    auto m2_refs = tensor_refs(second_moment);
    auto model_refs = tensor_refs(model);
    long update_step = 0;

    TrainingHistory history;
    history.epochs.reserve(static_cast<std::size_t>(cfg.epochs));

    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double rate =
            cfg.lr_decay_every > 0
                ? cfg.learning_rate * std::pow(cfg.lr_decay, epoch / cfg.lr_decay_every)
                : cfg.learning_rate;
        const std::uint64_t epoch_seed =
            derive_seed(model.dropout_seed, static_cast<std::uint64_t>(epoch) + 1);
        Xoshiro256StarStar shuffle_rng(derive_seed(epoch_seed, 0));
        for (std::size_t k = 0; k + 1 < n_train; ++k) {
            const auto pick = k + shuffle_rng.below(n_train - k);
            std::swap(order[k], order[pick]);
        }

        for (std::size_t start = 0; start < n_train;
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(start + static_cast<std::size_t>(cfg.batch_size), n_train);
            for (auto& ref : grad_refs) std::fill(ref.data, ref.data + ref.size, 0.0);

            for (std::size_t k = start; k < stop; ++k) {
                const std::size_t idx = order[k];
                const auto& sample = data.train.samples[idx];
                // Mask stream keyed by (epoch, original index): independent of
                // batch order and of any within-batch scheduling.
                Xoshiro256StarStar mask_rng(
                    derive_seed(epoch_seed, 1 + static_cast<std::uint64_t>(idx)));
                const double sample_loss = backward(model, sample_input(sample),
                                                    sample_target(sample), &mask_rng, grads);
                if (!std::isfinite(sample_loss))
                    throw std::runtime_error(
                        "non-finite training loss at epoch " + std::to_string(epoch) +
                        ", sample " + std::to_string(idx) +
                        " (diverging optimization; lower the learning rate)");
            }

            const double inv_batch = 1.0 / static_cast<double>(stop - start);
            ++update_step;
            if (cfg.optimizer == Optimizer::Momentum) {
                for (std::size_t ti = 0; ti < grad_refs.size(); ++ti) {
                    double* g = grad_refs[ti].data;
                    double* v = m1_refs[ti].data;
                    double* w = model_refs[ti].data;
                    for (std::size_t i = 0; i < grad_refs[ti].size; ++i) {
                        v[i] = cfg.momentum * v[i] - rate * g[i] * inv_batch;
                        w[i] += v[i];
                    }
                }
            } else {
                constexpr double b1 = 0.9;
                constexpr double b2 = 0.999;
                constexpr double eps = 1e-8;
                const double bc1 = 1.0 - std::pow(b1, static_cast<double>(update_step));
                const double bc2 = 1.0 - std::pow(b2, static_cast<double>(update_step));
                for (std::size_t ti = 0; ti < grad_refs.size(); ++ti) {
                    double* g = grad_refs[ti].data;
                    double* m = m1_refs[ti].data;
                    double* v = m2_refs[ti].data;
                    double* w = model_refs[ti].data;
                    for (std::size_t i = 0; i < grad_refs[ti].size; ++i) {
                        const double gb = g[i] * inv_batch;
                        m[i] = b1 * m[i] + (1.0 - b1) * gb;
                        v[i] = b2 * v[i] + (1.0 - b2) * gb * gb;
                        w[i] -= rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
                    }
                }
            }
        }

        history.epochs.push_back(evaluate(model, data.train, data.test));
        const auto& m = history.epochs.back();
        if (!std::isfinite(m.train_loss) || !std::isfinite(m.test_loss))
            throw std::runtime_error("non-finite evaluation loss after epoch " +
                                     std::to_string(epoch));
        if (progress) progress(epoch, m);
    }
    return history;
}

TimeSpaceDiagram rollout(const PredictorModel& model,
                         std::span<const std::uint8_t> seed_window, int horizon) {
    const auto& cfg = model.config;
    const int n = cfg.n_sites;
    const int w = cfg.window;
    if (horizon < 0) throw std::invalid_argument("horizon must be >= 0");
    if (seed_window.size() != static_cast<std::size_t>(w) * n)
        throw std::invalid_argument("seed window shape mismatch");

    TimeSpaceDiagram diagram(n, w + horizon - 1);
    std::vector<std::uint8_t> window(seed_window.begin(), seed_window.end());
    for (int t = 0; t < w; ++t)
        for (int i = 0; i < n; ++i)
            diagram.set(t, i, window[static_cast<std::size_t>(t) * n + i] != 0);

    for (int step = 0; step < horizon; ++step) {
        const Vector probs = forward(model, window);
        std::move(window.begin() + n, window.end(), window.begin());
        for (int i = 0; i < n; ++i) {
            const bool occupied = probs[static_cast<std::size_t>(i)] > 0.5;
            window[static_cast<std::size_t>(w - 1) * n + i] = occupied ? 1 : 0;
            diagram.set(w + step, i, occupied);
        }
    }
    return diagram;
}

void write_history_csv(const TrainingHistory& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "epoch,train_loss,train_accuracy,test_loss,test_accuracy\n";
    out.precision(12);
    for (std::size_t e = 0; e < history.epochs.size(); ++e) {
        const auto& m = history.epochs[e];
        out << e << ',' << m.train_loss << ',' << m.train_accuracy << ',' << m.test_loss
            << ',' << m.test_accuracy << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace trmc::nn
