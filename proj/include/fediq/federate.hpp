#pragma once

// Federated averaging over flat parameter vectors.
//
// One round: every client downloads the global parameters (rounded to its
// wire precision), runs local triplet training on its own unlabeled pool,
// re-rounds on upload, and the server takes the weighted mean with weights
// proportional to unlabeled pool sizes. The reduction always runs in
// ascending client-id order, so aggregation is bitwise invariant to the
// order in which updates arrive.

#include <functional>
#include <string>
#include <vector>

#include "fediq/partition.hpp"
#include "fediq/ssl.hpp"

namespace fediq {

// Wire precision of a client's uplink/downlink. `None` keeps working
// precision (f64) and is the default; the other three simulate heterogeneous
// quantization hardware.
enum class QuantizationLevel : int { None = 0, F32 = 1, F16 = 2, Int8 = 3 };

const char* quant_name(QuantizationLevel q);
QuantizationLevel quant_from_name(const std::string& name);

// Round every entry to the target grid and back to f64. F32/F16 round to the
// IEEE-754 single/half grid (round-to-nearest-even, overflow to infinity);
// Int8 uses a symmetric per-tensor grid with scale max|w|/127 (all-zero
// input stays zero).
std::vector<double> quantize_roundtrip(const std::vector<double>& w, QuantizationLevel level);

// Int8 scale used by quantize_roundtrip, exposed for error-bound checks.
double int8_scale(const std::vector<double>& w);

// f64 -> IEEE half -> f64, round-to-nearest-even (single rounding step).
double f16_roundtrip(double x);

struct ClientUpdate {
    int client_id = 0;
    std::uint64_t weight = 0;  // n_c = unlabeled frame count
    std::vector<double> params;
};

// Weighted mean sum_c (n_c / n) * params_c, accumulated coordinate-major in
// ascending client-id order.
std::vector<double> aggregate(const std::vector<ClientUpdate>& updates);

struct FedConfig {
    int rounds = 10;
    LocalTrainOptions local;  // 2500 steps, batch 20 by default
    double lr = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 1;
    // Per-client wire precision; size 1 broadcasts to all clients.
    std::vector<QuantizationLevel> quant = {QuantizationLevel::None};
    // Worker threads for the client loop. Clients are independent given the
    // downloaded global parameters and results reduce in client order, so
    // any thread count yields bitwise identical training.
    int threads = 1;

    void validate() const;
    QuantizationLevel quant_for(std::size_t client) const;
};

struct RoundState {
    int round = 0;                // rounds completed so far
    std::vector<double> global;   // theta_round
    std::vector<std::vector<double>> client_params;  // last uploads
    std::vector<std::uint64_t> weights;              // n_c
};

struct RoundMetrics {
    int round = 0;
    int client = 0;
    double mean_loss = 0.0;
    double wall_ms = 0.0;
};

// Global parameters at round 0, drawn from the init substream of cfg.seed.
RoundState init_round_state(const EncoderConfig& enc, const FedConfig& cfg);

// Execute round state.round + 1. Each client's RNG stream is derived from
// (seed, client id, round), so rounds can be recomputed independently and a
// resumed run is bitwise identical to an uninterrupted one. Adam state is
// fresh each round (client optimizer state is discarded after upload).
// Appends one RoundMetrics per client; per-step loss traces are appended to
// *traces when given (indexed by client).
RoundState run_round(const RoundState& state, const std::vector<ClientDataset>& clients,
                     const EncoderConfig& enc, const FedConfig& cfg,
                     std::vector<RoundMetrics>& metrics,
                     std::vector<std::vector<double>>* traces = nullptr);

struct TrainResult {
    RoundState state;                          // after the final round
    std::vector<RoundMetrics> metrics;         // rounds x clients rows
    std::vector<std::vector<std::vector<double>>> traces;  // [round][client][step]
};

// Full training: init (or resume from a provided state) plus cfg.rounds
// rounds. The observer runs after every completed round.
TrainResult run_training(const std::vector<ClientDataset>& clients, const EncoderConfig& enc,
                         const FedConfig& cfg,
                         const std::function<void(const RoundState&)>& observer = {},
                         const RoundState* resume_from = nullptr);

}  // namespace fediq
