#include "fediq/federate.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>

namespace fediq {

const char* quant_name(QuantizationLevel q) {
    switch (q) {
        case QuantizationLevel::None: return "none";
        case QuantizationLevel::F32: return "f32";
        case QuantizationLevel::F16: return "f16";
        case QuantizationLevel::Int8: return "int8";
    }
    throw internal_error("quant_name: unknown level");
}

QuantizationLevel quant_from_name(const std::string& name) {
    if (name == "none" || name == "f64") return QuantizationLevel::None;
    if (name == "f32") return QuantizationLevel::F32;
    if (name == "f16") return QuantizationLevel::F16;
    if (name == "int8") return QuantizationLevel::Int8;
    throw config_error("unknown quantization level: " + name);
}

namespace {

// f64 -> IEEE binary16, round-to-nearest-even, in one rounding step.
std::uint16_t f64_to_f16_bits(double value) {
    const std::uint64_t x = std::bit_cast<std::uint64_t>(value);
    const std::uint16_t sign = static_cast<std::uint16_t>((x >> 48) & 0x8000u);
    const int exp = static_cast<int>((x >> 52) & 0x7ff);
    const std::uint64_t mant = x & 0xfffffffffffffULL;

    if (exp == 0x7ff)  // inf / nan
        return static_cast<std::uint16_t>(sign | 0x7c00u | (mant ? 0x200u : 0u));
    if (exp == 0 && mant == 0) return sign;  // +-0 (f64 subnormals underflow below anyway)

    const int half_exp = exp - 1023 + 15;
    if (half_exp >= 31) return static_cast<std::uint16_t>(sign | 0x7c00u);  // overflow -> inf
    if (half_exp < -10) return sign;  // underflows past the smallest subnormal

    std::uint64_t full = mant;
    int shift = 42;  // 52-bit mantissa -> 10 bits
    std::uint16_t base;
    if (half_exp <= 0) {
        // Subnormal half: include the implicit bit, shift further.
        full |= 1ULL << 52;
        shift = 43 - half_exp;
        base = sign;
    } else {
        base = static_cast<std::uint16_t>(sign | (half_exp << 10));
    }
    std::uint16_t bits = static_cast<std::uint16_t>(base | (full >> shift));
    const std::uint64_t rem = full & ((1ULL << shift) - 1);
    const std::uint64_t halfway = 1ULL << (shift - 1);
    if (rem > halfway || (rem == halfway && (bits & 1))) bits += 1;  // carry rolls into exponent
    return bits;
}

double f16_bits_to_f64(std::uint16_t h) {
    const int sign = (h & 0x8000) ? -1 : 1;
    const int exp = (h >> 10) & 0x1f;
    const int mant = h & 0x3ff;
    if (exp == 31) {
        if (mant) return std::numeric_limits<double>::quiet_NaN();
        return sign * std::numeric_limits<double>::infinity();
    }
    if (exp == 0) return sign * std::ldexp(static_cast<double>(mant), -24);
    return sign * std::ldexp(static_cast<double>(mant + 1024), exp - 25);
}

}  // namespace

double f16_roundtrip(double x) { return f16_bits_to_f64(f64_to_f16_bits(x)); }

double int8_scale(const std::vector<double>& w) {
    double max_abs = 0.0;
    for (double v : w) max_abs = std::max(max_abs, std::abs(v));
    return max_abs / 127.0;
}

std::vector<double> quantize_roundtrip(const std::vector<double>& w, QuantizationLevel level) {
    std::vector<double> out(w.size());
    switch (level) {
        case QuantizationLevel::None:
            out = w;
            break;
        case QuantizationLevel::F32:
            for (std::size_t i = 0; i < w.size(); ++i)
                out[i] = static_cast<double>(static_cast<float>(w[i]));
            break;
        case QuantizationLevel::F16:
            for (std::size_t i = 0; i < w.size(); ++i) out[i] = f16_roundtrip(w[i]);
            break;
        case QuantizationLevel::Int8: {
            const double scale = int8_scale(w);
            if (scale == 0.0) {
                std::fill(out.begin(), out.end(), 0.0);
                break;
            }
            for (std::size_t i = 0; i < w.size(); ++i) {
                long long q = std::llround(w[i] / scale);
                q = std::clamp(q, -127ll, 127ll);
                out[i] = static_cast<double>(q) * scale;
            }
            break;
        }
    }
    return out;
}

std::vector<double> aggregate(const std::vector<ClientUpdate>& updates) {
    require(!updates.empty(), "aggregate: no client updates");
    const std::size_t dim = updates[0].params.size();
    std::uint64_t total = 0;
    for (const auto& u : updates) {
        require(u.params.size() == dim, "aggregate: parameter length mismatch for client " +
                                            std::to_string(u.client_id));
        total += u.weight;
    }
    require(total > 0, "aggregate: total weight is zero");

    // Fixed-order reduction: ascending client id, whatever order updates
    // arrived in.
    std::vector<const ClientUpdate*> order;
    order.reserve(updates.size());
    for (const auto& u : updates) order.push_back(&u);
    std::sort(order.begin(), order.end(),
              [](const ClientUpdate* a, const ClientUpdate* b) { return a->client_id < b->client_id; });
    for (std::size_t i = 1; i < order.size(); ++i)
        require(order[i]->client_id != order[i - 1]->client_id,
                "aggregate: duplicate client id " + std::to_string(order[i]->client_id));

    std::vector<double> coef(order.size());
    for (std::size_t c = 0; c < order.size(); ++c)
        coef[c] = static_cast<double>(order[c]->weight) / static_cast<double>(total);

    std::vector<double> out(dim, 0.0);
    for (std::size_t c = 0; c < order.size(); ++c) {
        const double k = coef[c];
        const auto& p = order[c]->params;
        for (std::size_t j = 0; j < dim; ++j) out[j] += k * p[j];
    }
    return out;
}

void FedConfig::validate() const {
    require(rounds >= 0, "fed: negative round count");
    local.validate();
    require(lr > 0.0, "fed: lr must be positive");
    require(!quant.empty(), "fed: no quantization levels given");
    require(threads >= 1, "fed: threads must be >= 1");
}

QuantizationLevel FedConfig::quant_for(std::size_t client) const {
    if (quant.size() == 1) return quant[0];
    require(client < quant.size(), "fed: no quantization level for client " +
                                       std::to_string(client));
    return quant[client];
}

RoundState init_round_state(const EncoderConfig& enc, const FedConfig& cfg) {
    cfg.validate();
    Rng rng = Rng::derive(cfg.seed, {stream::kInit});
    RoundState s;
    s.round = 0;
    s.global = init_params(enc, rng).flat;
    return s;
}

RoundState run_round(const RoundState& state, const std::vector<ClientDataset>& clients,
                     const EncoderConfig& enc, const FedConfig& cfg,
                     std::vector<RoundMetrics>& metrics, std::vector<std::vector<double>>* traces) {
    cfg.validate();
    require(!clients.empty(), "run_round: no clients");
    require(state.global.size() == param_count(enc), "run_round: state/config size mismatch");
    const int round = state.round + 1;

    std::vector<ClientUpdate> updates(clients.size());
    std::vector<RoundMetrics> round_metrics(clients.size());
    std::vector<std::vector<double>> round_traces(clients.size());
    parallel_for_indexed(clients.size(), cfg.threads, [&](std::size_t c) {
        const auto t0 = std::chrono::steady_clock::now();
        const QuantizationLevel level = cfg.quant_for(c);
        require(!clients[c].unlabeled.empty(),
                "run_round: client " + std::to_string(clients[c].client_id) +
                    " has no unlabeled frames");

        EncoderParams local;
        local.config = enc;
        local.flat = quantize_roundtrip(state.global, level);  // download

        AdamState adam;
        adam.lr = cfg.lr;
        adam.beta1 = cfg.adam_beta1;
        adam.beta2 = cfg.adam_beta2;
        adam.eps = cfg.adam_eps;

        Rng rng = Rng::derive(cfg.seed, {stream::kFed,
                                         static_cast<std::uint64_t>(clients[c].client_id),
                                         static_cast<std::uint64_t>(round)});
        const std::vector<double> trace =
            local_train(local, clients[c].unlabeled, cfg.local, adam, rng);

        ClientUpdate up;
        up.client_id = clients[c].client_id;
        up.weight = clients[c].unlabeled.size();
        up.params = quantize_roundtrip(local.flat, level);  // upload

        double mean_loss = 0.0;
        for (double l : trace) mean_loss += l;
        if (!trace.empty()) mean_loss /= static_cast<double>(trace.size());
        const auto t1 = std::chrono::steady_clock::now();
        round_metrics[c] = {round, clients[c].client_id, mean_loss,
                            std::chrono::duration<double, std::milli>(t1 - t0).count()};
        round_traces[c] = trace;
        updates[c] = std::move(up);
    });
    for (std::size_t c = 0; c < clients.size(); ++c) {
        metrics.push_back(round_metrics[c]);
        if (traces) traces->push_back(std::move(round_traces[c]));
    }

    RoundState next;
    next.round = round;
    next.global = aggregate(updates);
    next.client_params.reserve(updates.size());
    for (auto& u : updates) {
        next.weights.push_back(u.weight);
        next.client_params.push_back(std::move(u.params));
    }
    return next;
}

TrainResult run_training(const std::vector<ClientDataset>& clients, const EncoderConfig& enc,
                         const FedConfig& cfg, const std::function<void(const RoundState&)>& observer,
                         const RoundState* resume_from) {
    TrainResult result;
    result.state = resume_from ? *resume_from : init_round_state(enc, cfg);
    while (result.state.round < cfg.rounds) {
        std::vector<std::vector<double>> round_traces;
        result.state = run_round(result.state, clients, enc, cfg, result.metrics, &round_traces);
        result.traces.push_back(std::move(round_traces));
        if (observer) observer(result.state);
    }
    return result;
}

}  // namespace fediq
