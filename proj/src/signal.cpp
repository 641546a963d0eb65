#include "fediq/signal.hpp"

#include <cmath>
#include <numbers>

namespace fediq {

namespace {

constexpr double kPi = std::numbers::pi;

// 3-bit Gray decode: position k on the circle carries symbol k ^ (k >> 1),
// so symbol s sits at position gray_inverse(s).
int gray_inverse(int g) {
    int k = g;
    k ^= k >> 1;
    k ^= k >> 2;
    return k;
}

// Per-axis 16-QAM level for a 2-bit Gray code: 00 -> -3, 01 -> -1,
// 11 -> +1, 10 -> +3 (neighboring levels differ in one bit).
double qam_level(int bits) {
    switch (bits & 3) {
        case 0b00: return -3.0;
        case 0b01: return -1.0;
        case 0b11: return +1.0;
        default: return +3.0;  // 0b10
    }
}

}  // namespace

const char* scheme_name(ModulationScheme s) {
    switch (s) {
        case ModulationScheme::Bpsk: return "bpsk";
        case ModulationScheme::Qpsk: return "qpsk";
        case ModulationScheme::Psk8: return "8psk";
        case ModulationScheme::Qam16: return "16qam";
    }
    throw internal_error("scheme_name: unknown scheme");
}

ModulationScheme scheme_from_name(const std::string& name) {
    if (name == "bpsk") return ModulationScheme::Bpsk;
    if (name == "qpsk") return ModulationScheme::Qpsk;
    if (name == "8psk" || name == "psk8") return ModulationScheme::Psk8;
    if (name == "16qam" || name == "qam16") return ModulationScheme::Qam16;
    throw config_error("unknown modulation scheme: " + name);
}

void ChannelRealization::validate() const {
    require(gain > 0.0, "channel: gain must be positive");
    require(std::isfinite(snr_db), "channel: snr_db must be finite");
    require(std::isfinite(phase) && std::isfinite(cfo), "channel: phase/cfo must be finite");
}

void CfoRegimeMix::validate() const {
    require(!regimes.empty(), "cfo mix: no regimes");
    require(regimes.size() == proportions.size(), "cfo mix: regimes/proportions size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < regimes.size(); ++i) {
        require(regimes[i].hi >= regimes[i].lo, "cfo mix: regime hi < lo");
        require(proportions[i] >= 0.0, "cfo mix: negative proportion");
        total += proportions[i];
    }
    require(std::abs(total - 1.0) <= 1e-9, "cfo mix: proportions must sum to 1");
}

void DopplerParams::validate() const {
    require(sample_rate > 0.0, "doppler: sample_rate must be positive");
    require(light_speed > 0.0, "doppler: light_speed must be positive");
    require(radial_velocity >= 0.0 && radial_velocity < light_speed,
            "doppler: radial velocity must satisfy 0 <= v < c");
}

void FrameLaw::validate() const {
    require(frame_len >= 1, "frame law: frame_len must be >= 1");
    require(snr_hi_db >= snr_lo_db, "frame law: snr_hi < snr_lo");
    require(phase_max >= 0.0, "frame law: phase_max must be >= 0");
    if (use_cfo_mix) cfo_mix.validate();
}

Constellation make_constellation(ModulationScheme scheme) {
    Constellation c;
    c.scheme = scheme;
    switch (scheme) {
        case ModulationScheme::Bpsk:
            c.points = {cplx(1.0, 0.0), cplx(-1.0, 0.0)};
            break;
        case ModulationScheme::Qpsk: {
            const double a = 1.0 / std::sqrt(2.0);
            for (int idx = 0; idx < 4; ++idx) {
                const int b0 = idx & 1, b1 = (idx >> 1) & 1;
                c.points.emplace_back((1 - 2 * b0) * a, (1 - 2 * b1) * a);
            }
            break;
        }
        case ModulationScheme::Psk8:
            for (int idx = 0; idx < 8; ++idx) {
                const double ang = 2.0 * kPi * gray_inverse(idx) / 8.0;
                c.points.emplace_back(std::cos(ang), std::sin(ang));
            }
            break;
        case ModulationScheme::Qam16: {
            const double a = 1.0 / std::sqrt(10.0);
            for (int idx = 0; idx < 16; ++idx) {
                c.points.emplace_back(qam_level(idx & 3) * a, qam_level((idx >> 2) & 3) * a);
            }
            break;
        }
    }
    return c;
}

std::vector<cplx> modulate(const Constellation& c, const std::vector<int>& symbols) {
    std::vector<cplx> out;
    out.reserve(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        const int s = symbols[i];
        require(s >= 0 && s < static_cast<int>(c.points.size()),
                "modulate: symbol index " + std::to_string(s) + " at position " +
                    std::to_string(i) + " outside constellation of size " +
                    std::to_string(c.points.size()));
        out.push_back(c.points[static_cast<std::size_t>(s)]);
    }
    return out;
}

std::vector<cplx> channel_response(const std::vector<cplx>& symbols,
                                   const ChannelRealization& ch) {
    ch.validate();
    require(!symbols.empty(), "channel_response: empty symbol sequence");
    const double n_total = static_cast<double>(symbols.size());
    std::vector<cplx> out(symbols.size());
    for (std::size_t n = 0; n < symbols.size(); ++n) {
        const double ang = ch.phase + 2.0 * kPi * ch.cfo * static_cast<double>(n) / n_total;
        out[n] = ch.gain * cplx(std::cos(ang), std::sin(ang)) * symbols[n];
    }
    return out;
}

double scale_noise_for_snr(const std::vector<cplx>& clean_signal,
                           const std::vector<cplx>& raw_noise, double snr_db) {
    require(clean_signal.size() == raw_noise.size() && !clean_signal.empty(),
            "scale_noise_for_snr: signal/noise length mismatch or empty");
    double e_sig = 0.0, e_noise = 0.0;
    for (const auto& v : clean_signal) e_sig += std::norm(v);
    for (const auto& v : raw_noise) e_noise += std::norm(v);
    require(e_sig > 0.0, "scale_noise_for_snr: zero-energy signal");
    require(e_noise > 0.0, "scale_noise_for_snr: zero-energy raw noise");
    const double target_ratio = std::pow(10.0, snr_db / 10.0);
    return std::sqrt(e_sig / (target_ratio * e_noise));
}

IqFrame apply_channel(const std::vector<cplx>& symbols, const ChannelRealization& ch) {
    std::vector<cplx> clean = channel_response(symbols, ch);

    Rng noise_rng(ch.noise_seed);
    std::vector<cplx> raw(clean.size());
    const double per_comp = 1.0 / std::sqrt(2.0);  // unit energy per complex sample
    for (auto& w : raw) w = cplx(per_comp * noise_rng.normal(), per_comp * noise_rng.normal());

    const double alpha = scale_noise_for_snr(clean, raw, ch.snr_db);

    IqFrame frame;
    frame.samples.resize(clean.size());
    for (std::size_t n = 0; n < clean.size(); ++n) frame.samples[n] = clean[n] + alpha * raw[n];
    frame.has_meta = true;
    frame.meta_gain = ch.gain;
    frame.meta_phase = ch.phase;
    frame.meta_cfo = ch.cfo;
    frame.meta_snr_db = ch.snr_db;
    return frame;
}

double sample_cfo(const CfoRegimeMix& mix, Rng& rng) {
    mix.validate();
    const double u = rng.uniform01();
    double acc = 0.0;
    std::size_t pick = mix.regimes.size() - 1;
    for (std::size_t i = 0; i < mix.proportions.size(); ++i) {
        acc += mix.proportions[i];
        if (u < acc) {
            pick = i;
            break;
        }
    }
    const CfoRegime& r = mix.regimes[pick];
    return rng.uniform(r.lo, r.hi);
}

double doppler_offset(const DopplerParams& p) {
    p.validate();
    return p.radial_velocity / (p.sample_rate * p.light_speed);
}

IqFrame generate_frame(ModulationScheme scheme, const FrameLaw& law, Rng& rng) {
    law.validate();
    const Constellation c = make_constellation(scheme);

    std::vector<int> symbols(static_cast<std::size_t>(law.frame_len));
    for (auto& s : symbols)
        s = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(c.points.size())));

    ChannelRealization ch;
    ch.gain = rng.rayleigh(1.0);
    ch.phase = rng.uniform(0.0, law.phase_max);
    if (law.use_cfo_mix) {
        ch.cfo = sample_cfo(law.cfo_mix, rng);
    } else {
        ch.cfo = law.cfo_fixed;
    }
    ch.snr_db = rng.uniform(law.snr_lo_db, law.snr_hi_db);
    ch.noise_seed = rng.next_u64();

    IqFrame frame = apply_channel(modulate(c, symbols), ch);
    frame.label = static_cast<int>(scheme);
    return frame;
}

std::vector<CfoRegime> default_cfo_regimes() {
    return {{0.0, 0.01}, {0.01, 0.1}, {0.1, 1.0}, {1.0, 20.0}};
}

}  // namespace fediq
