#pragma once

// Dilated causal convolutional encoder.
//
// Layer k (0-based) applies a causal convolution with kernel size K and
// dilation 2^k: output[t] depends on input samples t, t-2^k, ..., back to
// t-(K-1)*2^k, with implicit left zero padding so the sequence length never
// changes. Kernels are weight-normalized (w = g * v / ||v|| per output
// channel), each layer adds a bias and a leaky ReLU, and the network ends
// with a global max-pool over time followed by an affine map to the feature
// dimension. The input is the 2xT plane of I and Q samples.
//
// Both the forward pass and the analytic backward pass are implemented by
// hand in double precision; the backward pass is validated against central
// finite differences in the test suite.

#include <complex>
#include <cstddef>
#include <vector>

#include "fediq/rng.hpp"
#include "fediq/signal.hpp"

namespace fediq {

struct EncoderConfig {
    int depth = 10;
    int kernel_size = 3;
    int channels = 40;       // hidden width, identical across layers
    int feature_dim = 320;
    int input_channels = 2;  // I and Q planes
    double leaky_slope = 0.01;

    void validate() const;
    int dilation(int layer) const { return 1 << layer; }
    int in_channels(int layer) const { return layer == 0 ? input_channels : channels; }
};

// Samples needed for one output to see the full history:
// 1 + (K-1) * (2^depth - 1).
int receptive_field(const EncoderConfig& cfg);

std::size_t param_count(const EncoderConfig& cfg);

// Parameters live in one flat double vector so that federated aggregation
// and quantization can treat them uniformly. Layout, in order, per layer:
// direction tensor v [out][in][K], gains g [out], biases b [out]; then the
// affine head weights [feature_dim][channels] and head bias [feature_dim].
struct EncoderParams {
    EncoderConfig config;
    std::vector<double> flat;

    std::size_t v_offset(int layer) const;
    std::size_t g_offset(int layer) const;
    std::size_t b_offset(int layer) const;
    std::size_t head_w_offset() const;
    std::size_t head_b_offset() const;

    double* v(int layer) { return flat.data() + v_offset(layer); }
    const double* v(int layer) const { return flat.data() + v_offset(layer); }
    double* g(int layer) { return flat.data() + g_offset(layer); }
    const double* g(int layer) const { return flat.data() + g_offset(layer); }
    double* b(int layer) { return flat.data() + b_offset(layer); }
    const double* b(int layer) const { return flat.data() + b_offset(layer); }
    double* head_w() { return flat.data() + head_w_offset(); }
    const double* head_w() const { return flat.data() + head_w_offset(); }
    double* head_b() { return flat.data() + head_b_offset(); }
    const double* head_b() const { return flat.data() + head_b_offset(); }

    void validate() const;
};

// Kernel directions ~ U(+-sqrt(6/(fan_in+fan_out))), gains 1, biases 0; the
// head weights use the same rule with fan_in = channels, fan_out =
// feature_dim. Draws are consumed in flat-layout order.
EncoderParams init_params(const EncoderConfig& cfg, Rng& rng);

// Weight-normalized kernels w = g * v/||v||, computed once per parameter
// state and shared across the windows of a batch.
struct KernelCache {
    std::vector<std::vector<double>> weights;  // [layer][out*in*K]
    std::vector<std::vector<double>> norms;    // [layer][out], ||v_o||
};

KernelCache normalize_kernels(const EncoderParams& params);

// Everything the backward pass needs from a forward pass.
struct ForwardTrace {
    int T = 0;
    std::vector<std::vector<double>> inputs;  // [depth+1][ch*T]; inputs[0] = I/Q planes
    std::vector<std::vector<double>> preact;  // [depth][ch*T]
    std::vector<double> pooled;               // [channels]
    std::vector<int> argmax;                  // [channels], earliest max wins
    std::vector<double> feature;              // [feature_dim]
};

// Forward pass over a window of T samples, recording activations.
void forward_trace(const EncoderParams& params, const KernelCache& cache,
                   const cplx* samples, int T, ForwardTrace& trace);

// Feature-only forward pass.
std::vector<double> forward(const EncoderParams& params, const KernelCache& cache,
                            const cplx* samples, int T);

std::vector<double> forward(const EncoderParams& params, const cplx* samples, int T);

inline std::vector<double> forward(const EncoderParams& params, const IqFrame& frame) {
    return forward(params, frame.samples.data(), static_cast<int>(frame.samples.size()));
}

// Accumulate d(upstream . feature)/d(params) into grad (size = flat size).
// upstream has feature_dim entries.
void backward(const EncoderParams& params, const KernelCache& cache, const ForwardTrace& trace,
              const std::vector<double>& upstream, std::vector<double>& grad);

// ENCP v1 checkpoint: magic "ENCP", u16 version, u16 reserved, the encoder
// config (u32 depth, kernel, channels, feature_dim, input_channels; f64
// leaky_slope), u64 count, count f64 parameters, and a trailing u64 FNV-1a
// checksum over all preceding bytes after the magic. Little-endian.
void write_encp(const std::string& path, const EncoderParams& params);
EncoderParams read_encp(const std::string& path);

}  // namespace fediq
