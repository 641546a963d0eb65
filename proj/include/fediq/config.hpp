#pragma once

// Run configuration and the run manifest.
//
// Configuration is a flat set of typed keys grouped by module section
// ("federate.rounds", "signal.frame_len", ...). Values come from, in
// increasing precedence: compiled defaults, an INI-style config file, and
// command-line --set overrides. Unknown keys are rejected. The full
// resolved configuration is embedded in every run manifest, so any output
// directory can be reproduced from its manifest alone.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fediq/common.hpp"

namespace fediq {

struct AppConfig {
    // [run]
    std::uint64_t seed = 2024;
    std::string out_dir = "out";
    std::string experiment = "baseline";  // baseline|snr_het|cfo_het|quant_het|dirichlet|theory
    int threads = 1;

    // [signal] base frame law; heterogeneity experiments override per client
    int frame_len = 100;
    double snr_lo_db = -10.0;
    double snr_hi_db = 10.0;
    double cfo_fixed = 0.01;
    double phase_max = 0.19634954084936207;  // pi/16
    bool use_cfo_mix = false;
    std::vector<double> cfo_proportions = {0.25, 0.25, 0.25, 0.25};

    // [partition]
    std::string partition_mode = "fixed";  // fixed|dirichlet
    int clients = 4;
    double dirichlet_alpha = 0.5;
    int scale_divisor = 1;           // divides the built-in count table
    std::vector<int> classes = {0, 1, 2, 3};
    int unlabeled_per_client = 0;    // >0 replaces the table by a uniform split
    int test_per_class = 0;          // >0 overrides the labeled/10 default

    // [encoder]
    int enc_depth = 10;
    int enc_kernel = 3;
    int enc_channels = 40;
    int enc_feature_dim = 320;

    // [ssl]
    int ssl_negatives = 10;
    int ssl_min_window = 4;

    // [federate]
    int fed_rounds = 10;
    int fed_steps = 2500;
    int fed_batch = 20;
    double fed_lr = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::vector<std::string> fed_quant = {"none"};  // size 1 broadcasts

    // [train]
    std::string train_data_dir;          // default: <out_dir>/data
    std::string resume_checkpoint;       // ENCP path to resume from
    int resume_round = 0;                // rounds already completed in it

    // [classify]
    double svm_c_reg = 1.0;
    int svm_epochs = 200;

    // [evaluate]
    std::string eval_checkpoint;         // default: <out_dir>/checkpoints/final.encp
    std::string eval_data_dir;           // default: <out_dir>/data
    bool refit_per_snr = false;
    int sweep_lo = -10;
    int sweep_hi = 9;
    int sweep_test_multiplier = 4;

    // [theory]
    long long lemma_samples = 100000;
    std::vector<int> lemma_dims = {2, 4, 8};
    std::vector<double> lemma_snrs = {1.0, 10.0, 1000.0};
    std::vector<double> lemma_regs = {0.0, 0.1, 1.0};
    double trunc_c = 2.0;
    int thm1_runs = 5;
    int thm1_dim = 4;
    int thm1_clients = 4;
    int thm1_steps = 2000;
    std::vector<int> thm1_windows = {1, 8, 64};
    double thm1_kappa = 0.999999;
    double thm1_snr = 10.0;
    double thm1_reg = 0.1;
    double thm1_power = 1.0;
    double thm1_radius = 1.0;
    int thm2_instances = 20;
    long long thm2_trials = 10000;
    int thm2_max_points = 20;
    int thm2_max_dim = 8;
    double thm2_gamma = 100.0;

    // [ingest]
    std::string ingest_format = "raw_f32";  // raw_f32|iqds
    std::string ingest_input;
    std::string ingest_sidecar;
    std::string ingest_output;              // default: <out_dir>/ingested.iqds
    int ingest_frame_len = 100;

    void validate() const;
};

// One "key = value" assignment. Throws config_error on unknown keys or
// unparseable values.
void apply_kv(AppConfig& cfg, const std::string& key, const std::string& value);

// Every key in schema order with its canonical serialized value.
std::map<std::string, std::string> dump_config(const AppConfig& cfg);

// Parse INI text: [section] headers, key = value lines, comments with # or
// ;. Returns dotted-key assignments in file order.
std::vector<std::pair<std::string, std::string>> parse_ini(const std::string& text);

// defaults, then file (if non-null), then overrides ("sec.key=value").
AppConfig load_config(const std::string* file_text, const std::vector<std::string>& overrides);

inline constexpr const char* kToolName = "fediq";
inline constexpr const char* kToolVersion = "0.1.0";

// The manifest written next to every command's outputs. Paths are relative
// to the output root; no timestamps or absolute paths, so reruns are
// byte-identical.
struct RunManifest {
    std::string command;
    std::string experiment;
    std::uint64_t seed = 0;
    std::string out_dir;
    AppConfig config;
    // Hashes of consumed inputs (dataset files, partition manifest,
    // checkpoints): relative path -> 16-hex-digit FNV-1a of the bytes.
    std::map<std::string, std::string> input_hashes;
};

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);

// Canonical hex form used everywhere a hash is printed.
std::string hash_hex(std::uint64_t h);

}  // namespace fediq
