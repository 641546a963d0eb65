#pragma once

// Experiment recipes behind the CLI subcommands.
//
// Every command resolves the typed configuration into module configs (any
// failure there is a configuration error), writes a run manifest into the
// output directory first, and then produces only deterministic outputs:
// given the manifest and the binary, every file can be regenerated
// byte-for-byte. Wall-clock timings go to stderr, never into output files.
//
// All paths in configs and manifests are relative; they resolve against the
// output root taken from $FEDIQ_OUT_ROOT (default ".").

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fediq/classify.hpp"
#include "fediq/config.hpp"
#include "fediq/federate.hpp"
#include "fediq/theory.hpp"

namespace fediq {
namespace harness {

std::string out_root();
std::string resolve_path(const std::string& rel);

// Module configurations materialized from an AppConfig, with experiment
// presets applied. Throws config_error on any inconsistency.
struct Resolved {
    std::vector<FrameLaw> laws;          // one per client
    CountTable unlabeled_counts;         // [client][class slot]
    CountTable labeled_counts;           //   = unlabeled / 5
    CountTable test_counts;              //   = labeled / 10 or the override
    std::vector<int> classes;            // modulation id per class slot
    EncoderConfig enc;
    FedConfig fed;
    SvmOptions svm;
};

Resolved resolve_config(const AppConfig& cfg);

// "client_<id>_<pool>.iqds"
std::string client_file_name(int client, const std::string& pool);

struct ExperimentResult {
    std::vector<double> per_client_accuracy;
    double client_avg_accuracy = 0.0;
    std::vector<EvalResult> per_client;
};

struct ResourceRow {
    std::string component;  // conv<k>, head, total
    int in_ch = 0;
    int out_ch = 0;
    int kernel = 0;
    int t_out = 0;
    double flops = 0.0;  // 2 * out_ch * in_ch * kernel * t_out (multiply+add)
};

struct ResourceReport {
    std::size_t params = 0;
    int receptive = 0;
    std::vector<ResourceRow> rows;
    double total_flops = 0.0;
};

struct SweepRow {
    int snr_db = 0;
    int client = 0;  // -1 = client average
    double accuracy = 0.0;
};

// generate: per-client IQDS pools (unlabeled/labeled/test) under
// <out_dir>/data plus partition.json with per-file frame counts and hashes.
void cmd_generate(const AppConfig& cfg);

// train: federated training over the generated pools; ENCP checkpoints
// under <out_dir>/checkpoints (round_<k>.encp and final.encp), rounds.csv
// (round,client,mean_loss) and losses.csv (round,client,step,loss).
void cmd_train(const AppConfig& cfg);

// evaluate: per-client SVM fit on labeled features, accuracy and confusion
// on the test pools; results.csv, confusion.csv, models/svm_client_<id>.svml.
ExperimentResult cmd_evaluate(const AppConfig& cfg);

// sweep: accuracy vs test SNR over the integer grid
// [sweep_lo, sweep_hi]; fresh test frames per grid point;
// accuracy_vs_snr.csv (snr_db,client,accuracy with client -1 = average).
std::vector<SweepRow> cmd_sweep(const AppConfig& cfg);

// theory: Monte Carlo verification reports theory_lemma1.csv,
// theory_theorem1.csv, theory_theorem2.csv.
struct TheoryReport {
    std::vector<theory::Lemma1Check> lemma1;
    std::vector<double> lemma1_limit_gaps;   // |full-simplified|/full at snr 1e6, reg 0
    std::vector<theory::Theorem1Check> theorem1;
    bool theorem1_trend = false;             // widest window beats window 1 on average
    struct Thm2Row {
        int instance = 0;
        int dim = 0;
        int points = 0;
        double mu = 0.0;
        double rho = 0.0;
        double gamma_enc = 0.0;
        double frequency = 0.0;
        double se = 0.0;
        double bound_collapsed = 0.0;
        double bound_product = 0.0;
        double control_frequency = 0.0;      // at gamma_enc = 1e12
        bool pass = false;
    };
    std::vector<Thm2Row> theorem2;
    bool all_pass = false;
};

TheoryReport cmd_theory(const AppConfig& cfg);

// resources: analytic per-layer forward FLOPs at N = frame_len and the
// parameter count; resources.csv.
ResourceReport cmd_resources(const AppConfig& cfg);

// ingest: convert an external recording into IQDS. raw_f32 reads interleaved
// little-endian float32 I/Q plus a text label sidecar (one integer per
// frame, -1 = unlabeled); iqds re-encodes an existing container.
void cmd_ingest(const AppConfig& cfg);

// Dispatch by subcommand name (used by rerun).
void run_command(const std::string& name, const AppConfig& cfg);

// Re-execute the command recorded in a manifest file.
void cmd_rerun(const std::string& manifest_path);

}  // namespace harness
}  // namespace fediq
