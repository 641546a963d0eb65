#include "fediq/encoder.hpp"

#include <cmath>

#include "fediq/fileio.hpp"

namespace fediq {

inline constexpr std::uint16_t kEncpVersion = 1;

void EncoderConfig::validate() const {
    require(depth >= 1, "encoder: depth must be >= 1");
    require(kernel_size >= 1, "encoder: kernel_size must be >= 1");
    require(channels >= 1, "encoder: channels must be >= 1");
    require(feature_dim >= 1, "encoder: feature_dim must be >= 1");
    require(input_channels >= 1, "encoder: input_channels must be >= 1");
    require(depth < 31, "encoder: depth too large for 2^k dilation");
}

int receptive_field(const EncoderConfig& cfg) {
    cfg.validate();
    return 1 + (cfg.kernel_size - 1) * ((1 << cfg.depth) - 1);
}

std::size_t param_count(const EncoderConfig& cfg) {
    cfg.validate();
    std::size_t n = 0;
    for (int i = 0; i < cfg.depth; ++i) {
        const std::size_t in = static_cast<std::size_t>(cfg.in_channels(i));
        n += static_cast<std::size_t>(cfg.channels) * in * cfg.kernel_size;  // v
        n += 2 * static_cast<std::size_t>(cfg.channels);                     // g, b
    }
    n += static_cast<std::size_t>(cfg.feature_dim) * cfg.channels;  // head weights
    n += static_cast<std::size_t>(cfg.feature_dim);                 // head bias
    return n;
}

std::size_t EncoderParams::v_offset(int layer) const {
    std::size_t off = 0;
    for (int i = 0; i < layer; ++i) {
        off += static_cast<std::size_t>(config.channels) * config.in_channels(i) *
                   config.kernel_size +
               2 * static_cast<std::size_t>(config.channels);
    }
    return off;
}

std::size_t EncoderParams::g_offset(int layer) const {
    return v_offset(layer) + static_cast<std::size_t>(config.channels) *
                                 config.in_channels(layer) * config.kernel_size;
}

std::size_t EncoderParams::b_offset(int layer) const {
    return g_offset(layer) + static_cast<std::size_t>(config.channels);
}

std::size_t EncoderParams::head_w_offset() const { return v_offset(config.depth); }

std::size_t EncoderParams::head_b_offset() const {
    return head_w_offset() + static_cast<std::size_t>(config.feature_dim) * config.channels;
}

void EncoderParams::validate() const {
    config.validate();
    require(flat.size() == param_count(config), "encoder params: flat size mismatch");
}

EncoderParams init_params(const EncoderConfig& cfg, Rng& rng) {
    cfg.validate();
    EncoderParams p;
    p.config = cfg;
    p.flat.assign(param_count(cfg), 0.0);
    for (int i = 0; i < cfg.depth; ++i) {
        const int in = cfg.in_channels(i);
        const double fan_in = static_cast<double>(in) * cfg.kernel_size;
        const double fan_out = static_cast<double>(cfg.channels) * cfg.kernel_size;
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        double* v = p.v(i);
        const std::size_t n = static_cast<std::size_t>(cfg.channels) * in * cfg.kernel_size;
        for (std::size_t k = 0; k < n; ++k) v[k] = rng.uniform(-bound, bound);
        double* g = p.g(i);
        for (int o = 0; o < cfg.channels; ++o) g[o] = 1.0;
        // biases already zero
    }
    const double bound = std::sqrt(6.0 / (cfg.channels + cfg.feature_dim));
    double* hw = p.head_w();
    const std::size_t hn = static_cast<std::size_t>(cfg.feature_dim) * cfg.channels;
    for (std::size_t k = 0; k < hn; ++k) hw[k] = rng.uniform(-bound, bound);
    return p;
}

KernelCache normalize_kernels(const EncoderParams& params) {
    params.validate();
    const EncoderConfig& cfg = params.config;
    KernelCache cache;
    cache.weights.resize(static_cast<std::size_t>(cfg.depth));
    cache.norms.resize(static_cast<std::size_t>(cfg.depth));
    for (int i = 0; i < cfg.depth; ++i) {
        const int in = cfg.in_channels(i);
        const std::size_t row = static_cast<std::size_t>(in) * cfg.kernel_size;
        const double* v = params.v(i);
        const double* g = params.g(i);
        auto& w = cache.weights[static_cast<std::size_t>(i)];
        auto& norms = cache.norms[static_cast<std::size_t>(i)];
        w.resize(static_cast<std::size_t>(cfg.channels) * row);
        norms.resize(static_cast<std::size_t>(cfg.channels));
        for (int o = 0; o < cfg.channels; ++o) {
            const double* vo = v + static_cast<std::size_t>(o) * row;
            double sq = 0.0;
            for (std::size_t k = 0; k < row; ++k) sq += vo[k] * vo[k];
            const double norm = std::sqrt(sq);
            norms[static_cast<std::size_t>(o)] = norm;
            const double scale = norm > 0.0 ? g[o] / norm : 0.0;
            double* wo = w.data() + static_cast<std::size_t>(o) * row;
            for (std::size_t k = 0; k < row; ++k) wo[k] = scale * vo[k];
        }
    }
    return cache;
}

namespace {

// One causal dilated convolution layer: y[o][t] = b[o] + sum over input
// channels and taps, tap q reaching back (K-1-q)*dilation samples.
void conv_forward(const double* x, int in, const double* w, const double* b, int out, int K,
                  int dilation, int T, double* y) {
    for (int o = 0; o < out; ++o) {
        double* yo = y + static_cast<std::size_t>(o) * T;
        const double bias = b[o];
        for (int t = 0; t < T; ++t) yo[t] = bias;
        const double* wo = w + static_cast<std::size_t>(o) * in * K;
        for (int ci = 0; ci < in; ++ci) {
            const double* xc = x + static_cast<std::size_t>(ci) * T;
            for (int q = 0; q < K; ++q) {
                const double wq = wo[ci * K + q];
                const int shift = (K - 1 - q) * dilation;
                for (int t = shift; t < T; ++t) yo[t] += wq * xc[t - shift];
            }
        }
    }
}

void leaky_relu(const double* y, std::size_t n, double slope, double* z) {
    for (std::size_t i = 0; i < n; ++i) z[i] = y[i] > 0.0 ? y[i] : slope * y[i];
}

}  // namespace

void forward_trace(const EncoderParams& params, const KernelCache& cache,
                   const cplx* samples, int T, ForwardTrace& trace) {
    params.validate();
    require(T >= 1, "encoder forward: window must have at least one sample");
    const EncoderConfig& cfg = params.config;
    require(cfg.input_channels == 2, "encoder forward: expected 2 input channels (I/Q)");

    trace.T = T;
    trace.inputs.resize(static_cast<std::size_t>(cfg.depth) + 1);
    trace.preact.resize(static_cast<std::size_t>(cfg.depth));

    auto& x0 = trace.inputs[0];
    x0.resize(2 * static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        x0[static_cast<std::size_t>(t)] = samples[t].real();
        x0[static_cast<std::size_t>(T) + t] = samples[t].imag();
    }

    for (int i = 0; i < cfg.depth; ++i) {
        const int in = cfg.in_channels(i);
        auto& y = trace.preact[static_cast<std::size_t>(i)];
        auto& z = trace.inputs[static_cast<std::size_t>(i) + 1];
        y.resize(static_cast<std::size_t>(cfg.channels) * T);
        z.resize(y.size());
        conv_forward(trace.inputs[static_cast<std::size_t>(i)].data(), in,
                     cache.weights[static_cast<std::size_t>(i)].data(), params.b(i),
                     cfg.channels, cfg.kernel_size, cfg.dilation(i), T, y.data());
        leaky_relu(y.data(), y.size(), cfg.leaky_slope, z.data());
    }

    const auto& last = trace.inputs[static_cast<std::size_t>(cfg.depth)];
    trace.pooled.resize(static_cast<std::size_t>(cfg.channels));
    trace.argmax.resize(static_cast<std::size_t>(cfg.channels));
    for (int c = 0; c < cfg.channels; ++c) {
        const double* zc = last.data() + static_cast<std::size_t>(c) * T;
        int best = 0;
        for (int t = 1; t < T; ++t)
            if (zc[t] > zc[best]) best = t;  // strict: first max wins on ties
        trace.pooled[static_cast<std::size_t>(c)] = zc[best];
        trace.argmax[static_cast<std::size_t>(c)] = best;
    }

    trace.feature.resize(static_cast<std::size_t>(cfg.feature_dim));
    const double* hw = params.head_w();
    const double* hb = params.head_b();
    for (int f = 0; f < cfg.feature_dim; ++f) {
        double acc = hb[f];
        const double* row = hw + static_cast<std::size_t>(f) * cfg.channels;
        for (int c = 0; c < cfg.channels; ++c) acc += row[c] * trace.pooled[static_cast<std::size_t>(c)];
        trace.feature[static_cast<std::size_t>(f)] = acc;
    }
}

std::vector<double> forward(const EncoderParams& params, const KernelCache& cache,
                            const cplx* samples, int T) {
    static thread_local ForwardTrace trace;
    forward_trace(params, cache, samples, T, trace);
    return trace.feature;
}

std::vector<double> forward(const EncoderParams& params, const cplx* samples, int T) {
    const KernelCache cache = normalize_kernels(params);
    return forward(params, cache, samples, T);
}

void backward(const EncoderParams& params, const KernelCache& cache, const ForwardTrace& trace,
              const std::vector<double>& upstream, std::vector<double>& grad) {
    params.validate();
    const EncoderConfig& cfg = params.config;
    require(upstream.size() == static_cast<std::size_t>(cfg.feature_dim),
            "encoder backward: upstream size mismatch");
    require(grad.size() == params.flat.size(), "encoder backward: grad size mismatch");
    const int T = trace.T;

    // Head.
    double* g_hw = grad.data() + params.head_w_offset();
    double* g_hb = grad.data() + params.head_b_offset();
    static thread_local std::vector<double> dpool;
    dpool.assign(static_cast<std::size_t>(cfg.channels), 0.0);
    const double* hw = params.head_w();
    for (int f = 0; f < cfg.feature_dim; ++f) {
        const double u = upstream[static_cast<std::size_t>(f)];
        g_hb[f] += u;
        double* grow = g_hw + static_cast<std::size_t>(f) * cfg.channels;
        const double* row = hw + static_cast<std::size_t>(f) * cfg.channels;
        for (int c = 0; c < cfg.channels; ++c) {
            grow[c] += u * trace.pooled[static_cast<std::size_t>(c)];
            dpool[static_cast<std::size_t>(c)] += u * row[c];
        }
    }

    // Max-pool routes each channel's gradient to its (first) argmax position.
    static thread_local std::vector<double> dx, dxin, dy;
    dx.assign(static_cast<std::size_t>(cfg.channels) * T, 0.0);
    for (int c = 0; c < cfg.channels; ++c)
        dx[static_cast<std::size_t>(c) * T + trace.argmax[static_cast<std::size_t>(c)]] =
            dpool[static_cast<std::size_t>(c)];

    static thread_local std::vector<double> gwhat;
    for (int i = cfg.depth - 1; i >= 0; --i) {
        const int in = cfg.in_channels(i);
        const int K = cfg.kernel_size;
        const int dilation = cfg.dilation(i);
        const std::size_t row = static_cast<std::size_t>(in) * K;
        const auto& y = trace.preact[static_cast<std::size_t>(i)];
        const auto& xin = trace.inputs[static_cast<std::size_t>(i)];
        const auto& w = cache.weights[static_cast<std::size_t>(i)];

        // Through the leaky ReLU.
        dy.resize(dx.size());
        for (std::size_t k = 0; k < dx.size(); ++k)
            dy[k] = dx[k] * (y[k] > 0.0 ? 1.0 : cfg.leaky_slope);

        gwhat.assign(static_cast<std::size_t>(cfg.channels) * row, 0.0);
        double* g_b = grad.data() + params.b_offset(i);
        const bool need_dxin = i > 0;
        if (need_dxin) dxin.assign(static_cast<std::size_t>(in) * T, 0.0);

        for (int o = 0; o < cfg.channels; ++o) {
            const double* dyo = dy.data() + static_cast<std::size_t>(o) * T;
            double bsum = 0.0;
            for (int t = 0; t < T; ++t) bsum += dyo[t];
            g_b[o] += bsum;
            const double* wo = w.data() + static_cast<std::size_t>(o) * row;
            double* go = gwhat.data() + static_cast<std::size_t>(o) * row;
            for (int ci = 0; ci < in; ++ci) {
                const double* xc = xin.data() + static_cast<std::size_t>(ci) * T;
                double* dxc = need_dxin ? dxin.data() + static_cast<std::size_t>(ci) * T : nullptr;
                for (int q = 0; q < K; ++q) {
                    const int shift = (K - 1 - q) * dilation;
                    double acc = 0.0;
                    for (int t = shift; t < T; ++t) acc += dyo[t] * xc[t - shift];
                    go[ci * K + q] += acc;
                    if (need_dxin) {
                        const double wq = wo[ci * K + q];
                        for (int t = shift; t < T; ++t) dxc[t - shift] += wq * dyo[t];
                    }
                }
            }
        }

        // Weight-norm backsubstitution: w = g * v/||v||.
        const double* v = params.v(i);
        const double* g = params.g(i);
        const auto& norms = cache.norms[static_cast<std::size_t>(i)];
        double* g_v = grad.data() + params.v_offset(i);
        double* g_g = grad.data() + params.g_offset(i);
        for (int o = 0; o < cfg.channels; ++o) {
            const double norm = norms[static_cast<std::size_t>(o)];
            const double* vo = v + static_cast<std::size_t>(o) * row;
            const double* go = gwhat.data() + static_cast<std::size_t>(o) * row;
            double* gvo = g_v + static_cast<std::size_t>(o) * row;
            if (norm <= 0.0) continue;  // zero direction: treat as dead kernel
            double dot = 0.0;
            for (std::size_t k = 0; k < row; ++k) dot += vo[k] * go[k];
            dot /= norm;  // = vhat . gwhat
            g_g[o] += dot;
            const double scale = g[o] / norm;
            for (std::size_t k = 0; k < row; ++k)
                gvo[k] += scale * (go[k] - dot * vo[k] / norm);
        }

        if (need_dxin) dx.swap(dxin);
    }
}

void write_encp(const std::string& path, const EncoderParams& params) {
    params.validate();
    std::vector<unsigned char> out;
    out.reserve(4 + 2 + 2 + 5 * 4 + 8 + 8 + params.flat.size() * 8 + 8);
    out.insert(out.end(), {'E', 'N', 'C', 'P'});
    le::put<std::uint16_t>(out, kEncpVersion);
    le::put<std::uint16_t>(out, 0);  // reserved
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(params.config.depth));
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(params.config.kernel_size));
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(params.config.channels));
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(params.config.feature_dim));
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(params.config.input_channels));
    le::put<double>(out, params.config.leaky_slope);
    le::put<std::uint64_t>(out, static_cast<std::uint64_t>(params.flat.size()));
    for (double w : params.flat) le::put<double>(out, w);
    le::put<std::uint64_t>(out, fnv1a64(out.data() + 4, out.size() - 4));
    write_file_bytes(path, out);
}

EncoderParams read_encp(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    require(bytes.size() >= 4 + 2 + 2 + 5 * 4 + 8 + 8 + 8,
            "ENCP file " + path + " truncated (only " + std::to_string(bytes.size()) + " bytes)");
    require(bytes[0] == 'E' && bytes[1] == 'N' && bytes[2] == 'C' && bytes[3] == 'P',
            "not an ENCP file: " + path);
    std::size_t off = 4;
    const auto version = le::get<std::uint16_t>(&bytes[off]);
    require(version == kEncpVersion,
            "unsupported ENCP version " + std::to_string(version) + " in " + path);
    off += 4;  // version + reserved

    EncoderParams p;
    p.config.depth = static_cast<int>(le::get<std::uint32_t>(&bytes[off]));
    p.config.kernel_size = static_cast<int>(le::get<std::uint32_t>(&bytes[off + 4]));
    p.config.channels = static_cast<int>(le::get<std::uint32_t>(&bytes[off + 8]));
    p.config.feature_dim = static_cast<int>(le::get<std::uint32_t>(&bytes[off + 12]));
    p.config.input_channels = static_cast<int>(le::get<std::uint32_t>(&bytes[off + 16]));
    off += 20;
    p.config.leaky_slope = le::get<double>(&bytes[off]);
    off += 8;
    const auto count = le::get<std::uint64_t>(&bytes[off]);
    off += 8;
    require(bytes.size() == off + count * 8 + 8,
            "ENCP file " + path + " has wrong size for " + std::to_string(count) + " parameters");
    const auto stored = le::get<std::uint64_t>(&bytes[bytes.size() - 8]);
    const auto computed = fnv1a64(bytes.data() + 4, bytes.size() - 12);
    require(stored == computed, "ENCP file " + path + " failed checksum verification");

    p.flat.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) p.flat[i] = le::get<double>(&bytes[off + i * 8]);
    p.validate();  // also checks count against the config
    return p;
}

}  // namespace fediq
