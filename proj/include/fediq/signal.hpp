#pragma once

// Synthetic I/Q frame generation.
//
// A frame is N complex baseband samples of one modulated burst passed through
// a stochastic single-tap channel:
//
//     r[n] = A * exp(j*(phase + 2*pi*cfo*n/N)) * s[n] + w[n]
//
// with A a Rayleigh gain, phase a uniform offset, cfo a normalized carrier
// frequency offset, and w complex circular Gaussian noise scaled so that the
// realized per-frame SNR (ratio of realized energy sums) hits the requested
// value exactly.

#include <complex>
#include <cstdint>
#include <vector>

#include "fediq/rng.hpp"

namespace fediq {

using cplx = std::complex<double>;

enum class ModulationScheme : int { Bpsk = 0, Qpsk = 1, Psk8 = 2, Qam16 = 3 };

const char* scheme_name(ModulationScheme s);
ModulationScheme scheme_from_name(const std::string& name);

// Gray-mapped constellation with unit average symbol energy.
struct Constellation {
    ModulationScheme scheme;
    std::vector<cplx> points;
};

// One realized channel: the deterministic tap plus the seed of the noise
// stream, so that applying the same realization twice is byte-identical.
struct ChannelRealization {
    double gain = 1.0;              // A > 0
    double phase = 0.0;             // radians
    double cfo = 0.0;               // normalized frequency offset
    double snr_db = 0.0;            // requested SNR, finite
    std::uint64_t noise_seed = 0;   // substream for w[n]

    void validate() const;
};

struct IqFrame {
    std::vector<cplx> samples;
    int label = -1;  // class index, -1 = unlabeled

    // Channel metadata, present for synthetic frames (serialized optionally).
    bool has_meta = false;
    double meta_gain = 0.0;
    double meta_phase = 0.0;
    double meta_cfo = 0.0;
    double meta_snr_db = 0.0;
};

// A half-open interval of normalized CFO values.
struct CfoRegime {
    double lo = 0.0;
    double hi = 0.0;
};

// Mixture over CFO regimes: pick a regime by proportion, then draw uniformly
// inside it.
struct CfoRegimeMix {
    std::vector<CfoRegime> regimes;
    std::vector<double> proportions;  // non-negative, sum to 1 (within 1e-9)

    void validate() const;
};

// Physical parameters from which a Doppler-induced CFO is computed.
struct DopplerParams {
    double radial_velocity = 0.0;           // m/s, >= 0 and << c
    double sample_rate = 1.0;               // Hz, > 0
    double light_speed = 299792458.0;       // m/s

    void validate() const;
};

// Per-class generation law used by dataset recipes.
struct FrameLaw {
    int frame_len = 100;
    double snr_lo_db = -10.0;
    double snr_hi_db = 10.0;
    bool use_cfo_mix = false;
    CfoRegimeMix cfo_mix;        // when use_cfo_mix
    double cfo_fixed = 0.01;     // otherwise
    double phase_max = 0.19634954084936207;  // pi/16

    void validate() const;
};

Constellation make_constellation(ModulationScheme scheme);

// Map symbol indices to constellation points. Throws on out-of-range indices.
std::vector<cplx> modulate(const Constellation& c, const std::vector<int>& symbols);

// The deterministic part of the channel: A * exp(j*(phase + 2*pi*cfo*n/N)) * s[n].
std::vector<cplx> channel_response(const std::vector<cplx>& symbols,
                                   const ChannelRealization& ch);

// Scale factor alpha such that 10*log10(E_sig / E(alpha*noise)) == snr_db
// exactly on the realized energy sums. Throws if either energy is zero.
double scale_noise_for_snr(const std::vector<cplx>& clean_signal,
                           const std::vector<cplx>& raw_noise, double snr_db);

// Deterministic channel response plus exactly-calibrated circular Gaussian
// noise drawn from ch.noise_seed. Frame metadata records the realization.
IqFrame apply_channel(const std::vector<cplx>& symbols, const ChannelRealization& ch);

// Draw a CFO from a regime mixture.
double sample_cfo(const CfoRegimeMix& mix, Rng& rng);

// Normalized CFO induced by radial motion: v / (f_s * c).
double doppler_offset(const DopplerParams& p);

// Draw one labeled frame of the given class under the law: i.i.d. uniform
// symbols, A ~ Rayleigh(1), phase ~ U(0, phase_max), cfo from the law, SNR
// ~ U(snr_lo, snr_hi). All draws come from `rng` in a fixed documented order
// (symbols, gain, phase, cfo, snr, noise-seed).
IqFrame generate_frame(ModulationScheme scheme, const FrameLaw& law, Rng& rng);

// The four CFO regimes used by the heterogeneity recipes:
// [0,0.01], [0.01,0.1], [0.1,1], [1,20].
std::vector<CfoRegime> default_cfo_regimes();

}  // namespace fediq
