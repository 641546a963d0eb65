#include "fediq/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>

#include "fediq/fileio.hpp"
#include "fediq/iqds.hpp"
#include "json.hpp"

namespace fediq {
namespace harness {

namespace fs = std::filesystem;

namespace {

std::string fmt_f64(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    require(!ec, "cannot create directory " + path + ": " + ec.message());
}

std::string file_hash(const std::string& abs_path) {
    const auto bytes = read_file_bytes(abs_path);
    return hash_hex(fnv1a64(bytes.data(), bytes.size()));
}

void write_manifest(const std::string& command, const AppConfig& cfg,
                    const std::map<std::string, std::string>& input_hashes) {
    RunManifest m;
    m.command = command;
    m.experiment = cfg.experiment;
    m.seed = cfg.seed;
    m.out_dir = cfg.out_dir;
    m.config = cfg;
    m.input_hashes = input_hashes;
    ensure_dir(resolve_path(cfg.out_dir));
    write_file_text(resolve_path(cfg.out_dir + "/manifest_" + command + ".json"),
                    manifest_to_json(m));
}

std::string data_dir_of(const AppConfig& cfg, const std::string& override_dir) {
    return override_dir.empty() ? cfg.out_dir + "/data" : override_dir;
}

std::string checkpoint_of(const AppConfig& cfg) {
    return cfg.eval_checkpoint.empty() ? cfg.out_dir + "/checkpoints/final.encp"
                                       : cfg.eval_checkpoint;
}

// Slot index (position in cfg.classes) for each modulation id, or -1.
std::vector<int> slot_of_class(const std::vector<int>& classes) {
    std::vector<int> slot(4, -1);
    for (std::size_t s = 0; s < classes.size(); ++s) slot[static_cast<std::size_t>(classes[s])] =
        static_cast<int>(s);
    return slot;
}

void require_same_encoder(const EncoderConfig& a, const EncoderConfig& b,
                          const std::string& path) {
    require(a.depth == b.depth && a.kernel_size == b.kernel_size && a.channels == b.channels &&
                a.feature_dim == b.feature_dim && a.input_channels == b.input_channels,
            "checkpoint " + path + " was trained with a different encoder configuration");
}

struct ClientFeatures {
    std::vector<std::vector<double>> x;
    std::vector<int> y;  // slot indices
};

ClientFeatures encode_pool(const EncoderParams& params, const KernelCache& cache,
                           const std::vector<IqFrame>& frames, const std::vector<int>& slot) {
    ClientFeatures out;
    out.x.reserve(frames.size());
    out.y.reserve(frames.size());
    for (const IqFrame& fr : frames) {
        require(fr.label >= 0 && fr.label <= 3 && slot[static_cast<std::size_t>(fr.label)] >= 0,
                "frame carries class " + std::to_string(fr.label) +
                    " which is not in partition.classes");
        out.x.push_back(forward(params, cache, fr.samples.data(),
                                static_cast<int>(fr.samples.size())));
        out.y.push_back(slot[static_cast<std::size_t>(fr.label)]);
    }
    return out;
}

IqFrame generate_pool_frame(const AppConfig& cfg, const FrameLaw& law, int class_id,
                            std::uint64_t pool_tag, int client, std::size_t ordinal) {
    Rng rng = Rng::derive(cfg.seed, {stream::kFrame, static_cast<std::uint64_t>(client),
                                     static_cast<std::uint64_t>(class_id), pool_tag, ordinal});
    return generate_frame(static_cast<ModulationScheme>(class_id), law, rng);
}

}  // namespace

std::string out_root() {
    const char* env = std::getenv("FEDIQ_OUT_ROOT");
    if (env && *env) return env;
    return ".";
}

std::string resolve_path(const std::string& rel) {
    if (!rel.empty() && rel.front() == '/') return rel;
    return out_root() + "/" + rel;
}

std::string client_file_name(int client, const std::string& pool) {
    return "client_" + std::to_string(client) + "_" + pool + ".iqds";
}

Resolved resolve_config(const AppConfig& cfg) {
    cfg.validate();
    try {
        Resolved r;
        r.classes = cfg.classes;

        FrameLaw base;
        base.frame_len = cfg.frame_len;
        base.snr_lo_db = cfg.snr_lo_db;
        base.snr_hi_db = cfg.snr_hi_db;
        base.cfo_fixed = cfg.cfo_fixed;
        base.phase_max = cfg.phase_max;
        base.use_cfo_mix = cfg.use_cfo_mix;
        if (cfg.use_cfo_mix) {
            base.cfo_mix.regimes = default_cfo_regimes();
            base.cfo_mix.proportions = cfg.cfo_proportions;
        }
        r.laws.assign(static_cast<std::size_t>(cfg.clients), base);

        std::vector<QuantizationLevel> quant;
        for (const std::string& name : cfg.fed_quant) quant.push_back(quant_from_name(name));

        if (cfg.experiment == "snr_het") {
            if (cfg.clients != 4)
                throw config_error("snr_het preset requires partition.clients = 4");
            const double ranges[4][2] = {{-10, -5}, {-5, 0}, {0, 5}, {5, 10}};
            for (int c = 0; c < 4; ++c) {
                r.laws[static_cast<std::size_t>(c)].snr_lo_db = ranges[c][0];
                r.laws[static_cast<std::size_t>(c)].snr_hi_db = ranges[c][1];
            }
        } else if (cfg.experiment == "cfo_het") {
            if (cfg.clients != 4)
                throw config_error("cfo_het preset requires partition.clients = 4");
            const double props[4][4] = {{0.4, 0.4, 0.1, 0.1},
                                        {0.4, 0.1, 0.4, 0.1},
                                        {0.1, 0.4, 0.4, 0.1},
                                        {0.1, 0.1, 0.4, 0.4}};
            for (int c = 0; c < 4; ++c) {
                FrameLaw& law = r.laws[static_cast<std::size_t>(c)];
                law.use_cfo_mix = true;
                law.cfo_mix.regimes = default_cfo_regimes();
                law.cfo_mix.proportions.assign(props[c], props[c] + 4);
            }
        } else if (cfg.experiment == "quant_het") {
            if (cfg.clients != 4)
                throw config_error("quant_het preset requires partition.clients = 4");
            quant = {QuantizationLevel::F32, QuantizationLevel::F16, QuantizationLevel::Int8,
                     QuantizationLevel::Int8};
        }
        for (FrameLaw& law : r.laws) law.validate();

        const std::string mode =
            cfg.experiment == "dirichlet" ? std::string("dirichlet") : cfg.partition_mode;
        const std::size_t slots = cfg.classes.size();
        if (cfg.unlabeled_per_client > 0) {
            if (cfg.unlabeled_per_client % static_cast<int>(slots) != 0)
                throw config_error("partition.unlabeled_per_client must be divisible by the "
                                   "number of classes");
            const std::size_t per =
                static_cast<std::size_t>(cfg.unlabeled_per_client) / slots;
            if (mode == "fixed") {
                r.unlabeled_counts.assign(static_cast<std::size_t>(cfg.clients),
                                          std::vector<std::size_t>(slots, per));
            } else {
                std::vector<std::size_t> totals(slots, per * static_cast<std::size_t>(cfg.clients));
                Rng rng = Rng::derive(cfg.seed, {stream::kPartition});
                r.unlabeled_counts = dirichlet_count_table(
                    totals, DirichletSpec{cfg.dirichlet_alpha, cfg.clients}, rng);
            }
        } else {
            const CountTable def = default_count_table();
            if (mode == "fixed") {
                if (cfg.clients != 4)
                    throw config_error("the built-in count table has 4 clients; set "
                                       "partition.unlabeled_per_client for other client counts");
                r.unlabeled_counts.assign(4, std::vector<std::size_t>(slots, 0));
                for (int c = 0; c < 4; ++c)
                    for (std::size_t s = 0; s < slots; ++s) {
                        const std::size_t n = def[static_cast<std::size_t>(c)]
                                                 [static_cast<std::size_t>(cfg.classes[s])];
                        if (n % static_cast<std::size_t>(cfg.scale_divisor) != 0)
                            throw config_error("partition.scale_divisor must divide the count "
                                               "table entries");
                        r.unlabeled_counts[static_cast<std::size_t>(c)][s] =
                            n / static_cast<std::size_t>(cfg.scale_divisor);
                    }
            } else {
                std::vector<std::size_t> totals(slots, 0);
                for (std::size_t s = 0; s < slots; ++s) {
                    std::size_t t = 0;
                    for (int c = 0; c < 4; ++c)
                        t += def[static_cast<std::size_t>(c)]
                                [static_cast<std::size_t>(cfg.classes[s])];
                    if (t % static_cast<std::size_t>(cfg.scale_divisor) != 0)
                        throw config_error("partition.scale_divisor must divide the class totals");
                    totals[s] = t / static_cast<std::size_t>(cfg.scale_divisor);
                }
                Rng rng = Rng::derive(cfg.seed, {stream::kPartition});
                r.unlabeled_counts = dirichlet_count_table(
                    totals, DirichletSpec{cfg.dirichlet_alpha, cfg.clients}, rng);
            }
        }

        r.labeled_counts = r.unlabeled_counts;
        r.test_counts = r.unlabeled_counts;
        for (std::size_t c = 0; c < r.unlabeled_counts.size(); ++c)
            for (std::size_t s = 0; s < slots; ++s) {
                r.labeled_counts[c][s] = r.unlabeled_counts[c][s] / 5;
                r.test_counts[c][s] = cfg.test_per_class > 0
                                          ? static_cast<std::size_t>(cfg.test_per_class)
                                          : r.labeled_counts[c][s] / 10;
            }

        r.enc.depth = cfg.enc_depth;
        r.enc.kernel_size = cfg.enc_kernel;
        r.enc.channels = cfg.enc_channels;
        r.enc.feature_dim = cfg.enc_feature_dim;
        r.enc.validate();

        r.fed.rounds = cfg.fed_rounds;
        r.fed.local.steps = cfg.fed_steps;
        r.fed.local.batch = cfg.fed_batch;
        r.fed.local.triplet.negatives = cfg.ssl_negatives;
        r.fed.local.triplet.min_window = cfg.ssl_min_window;
        r.fed.lr = cfg.fed_lr;
        r.fed.adam_beta1 = cfg.adam_beta1;
        r.fed.adam_beta2 = cfg.adam_beta2;
        r.fed.adam_eps = cfg.adam_eps;
        r.fed.seed = cfg.seed;
        r.fed.quant = quant;
        r.fed.threads = cfg.threads;
        r.fed.validate();
        if (cfg.ssl_min_window > cfg.frame_len)
            throw config_error("ssl.min_window exceeds signal.frame_len");

        r.svm.c_reg = cfg.svm_c_reg;
        r.svm.epochs = cfg.svm_epochs;
        r.svm.validate();
        return r;
    } catch (const data_error& e) {
        throw config_error(e.what());
    }
}

void cmd_generate(const AppConfig& cfg) {
    const Resolved r = resolve_config(cfg);
    write_manifest("generate", cfg, {});
    const std::string data_rel = cfg.out_dir + "/data";
    ensure_dir(resolve_path(data_rel));

    nlohmann::json files = nlohmann::json::object();
    for (int c = 0; c < cfg.clients; ++c) {
        struct Pool {
            const char* name;
            const CountTable* counts;
            std::uint64_t tag;  // 2 = test via the test stream
        };
        const Pool pools[3] = {{"unlabeled", &r.unlabeled_counts, 0},
                               {"labeled", &r.labeled_counts, 1},
                               {"test", &r.test_counts, 2}};
        for (const Pool& pool : pools) {
            std::vector<IqFrame> frames;
            for (std::size_t s = 0; s < r.classes.size(); ++s) {
                const std::size_t n = (*pool.counts)[static_cast<std::size_t>(c)][s];
                for (std::size_t k = 0; k < n; ++k) {
                    IqFrame fr;
                    if (pool.tag == 2) {
                        Rng rng = Rng::derive(cfg.seed,
                                              {stream::kTestSplit, static_cast<std::uint64_t>(c),
                                               static_cast<std::uint64_t>(r.classes[s]), k});
                        fr = generate_frame(static_cast<ModulationScheme>(r.classes[s]),
                                            r.laws[static_cast<std::size_t>(c)], rng);
                    } else {
                        fr = generate_pool_frame(cfg, r.laws[static_cast<std::size_t>(c)],
                                                 r.classes[s], pool.tag, c, k);
                    }
                    if (pool.tag == 0) fr.label = -1;
                    frames.push_back(std::move(fr));
                }
            }
            require(!frames.empty(), "generate: client " + std::to_string(c) + " " + pool.name +
                                         " pool is empty; adjust the partition configuration");
            const std::string name = client_file_name(c, pool.name);
            const std::string rel = data_rel + "/" + name;
            write_iqds(resolve_path(rel), frames, true);
            files[name] = {{"frames", frames.size()}, {"hash", file_hash(resolve_path(rel))}};
            std::fprintf(stderr, "generate: wrote %s (%zu frames)\n", rel.c_str(), frames.size());
        }
    }

    nlohmann::json part;
    part["clients"] = cfg.clients;
    part["classes"] = r.classes;
    part["unlabeled_counts"] = r.unlabeled_counts;
    part["labeled_counts"] = r.labeled_counts;
    part["test_counts"] = r.test_counts;
    part["files"] = files;
    write_file_text(resolve_path(data_rel + "/partition.json"), part.dump(2) + "\n");
}

void cmd_train(const AppConfig& cfg) {
    const Resolved r = resolve_config(cfg);
    const std::string data_rel = data_dir_of(cfg, cfg.train_data_dir);

    std::vector<ClientDataset> clients(static_cast<std::size_t>(cfg.clients));
    std::map<std::string, std::string> inputs;
    for (int c = 0; c < cfg.clients; ++c) {
        const std::string rel = data_rel + "/" + client_file_name(c, "unlabeled");
        clients[static_cast<std::size_t>(c)].client_id = c;
        clients[static_cast<std::size_t>(c)].unlabeled = read_iqds(resolve_path(rel));
        inputs[rel] = file_hash(resolve_path(rel));
    }
    const std::string part_rel = data_rel + "/partition.json";
    if (fs::exists(resolve_path(part_rel))) inputs[part_rel] = file_hash(resolve_path(part_rel));

    RoundState resume_state;
    const RoundState* resume_ptr = nullptr;
    if (!cfg.resume_checkpoint.empty()) {
        if (cfg.resume_round < 0 || cfg.resume_round > cfg.fed_rounds)
            throw config_error("train.resume_round must be in [0, federate.rounds]");
        EncoderParams p = read_encp(resolve_path(cfg.resume_checkpoint));
        require_same_encoder(p.config, r.enc, cfg.resume_checkpoint);
        resume_state.round = cfg.resume_round;
        resume_state.global = std::move(p.flat);
        resume_ptr = &resume_state;
        inputs[cfg.resume_checkpoint] = file_hash(resolve_path(cfg.resume_checkpoint));
    }

    write_manifest("train", cfg, inputs);
    const std::string ckpt_rel = cfg.out_dir + "/checkpoints";
    ensure_dir(resolve_path(ckpt_rel));

    auto observer = [&](const RoundState& state) {
        EncoderParams p;
        p.config = r.enc;
        p.flat = state.global;
        write_encp(resolve_path(ckpt_rel + "/round_" + std::to_string(state.round) + ".encp"), p);
    };
    const TrainResult result = run_training(clients, r.enc, r.fed, observer, resume_ptr);

    EncoderParams final_params;
    final_params.config = r.enc;
    final_params.flat = result.state.global;
    write_encp(resolve_path(ckpt_rel + "/final.encp"), final_params);

    std::string rounds_csv = "round,client,mean_loss\n";
    for (const RoundMetrics& m : result.metrics) {
        rounds_csv += std::to_string(m.round) + "," + std::to_string(m.client) + "," +
                      fmt_f64(m.mean_loss) + "\n";
        std::fprintf(stderr, "train: round %d client %d mean_loss %.6f wall %.0f ms\n", m.round,
                     m.client, m.mean_loss, m.wall_ms);
    }
    write_file_text(resolve_path(cfg.out_dir + "/rounds.csv"), rounds_csv);

    const int first_round = (resume_ptr ? cfg.resume_round : 0) + 1;
    std::string losses_csv = "round,client,step,loss\n";
    for (std::size_t i = 0; i < result.traces.size(); ++i)
        for (std::size_t c = 0; c < result.traces[i].size(); ++c)
            for (std::size_t s = 0; s < result.traces[i][c].size(); ++s)
                losses_csv += std::to_string(first_round + static_cast<int>(i)) + "," +
                              std::to_string(c) + "," + std::to_string(s) + "," +
                              fmt_f64(result.traces[i][c][s]) + "\n";
    write_file_text(resolve_path(cfg.out_dir + "/losses.csv"), losses_csv);
}

ExperimentResult cmd_evaluate(const AppConfig& cfg) {
    const Resolved r = resolve_config(cfg);
    const std::string data_rel = data_dir_of(cfg, cfg.eval_data_dir);
    const std::string ckpt_rel = checkpoint_of(cfg);

    std::map<std::string, std::string> inputs;
    inputs[ckpt_rel] = file_hash(resolve_path(ckpt_rel));
    for (int c = 0; c < cfg.clients; ++c)
        for (const char* pool : {"labeled", "test"}) {
            const std::string rel = data_rel + "/" + client_file_name(c, pool);
            inputs[rel] = file_hash(resolve_path(rel));
        }
    write_manifest("evaluate", cfg, inputs);

    const EncoderParams params = read_encp(resolve_path(ckpt_rel));
    require_same_encoder(params.config, r.enc, ckpt_rel);
    const KernelCache cache = normalize_kernels(params);
    const std::vector<int> slot = slot_of_class(r.classes);
    ensure_dir(resolve_path(cfg.out_dir + "/models"));

    ExperimentResult result;
    result.per_client_accuracy.resize(static_cast<std::size_t>(cfg.clients));
    result.per_client.resize(static_cast<std::size_t>(cfg.clients));
    std::vector<SvmModel> models(static_cast<std::size_t>(cfg.clients));
    parallel_for_indexed(static_cast<std::size_t>(cfg.clients), cfg.threads, [&](std::size_t c) {
        const auto labeled =
            read_iqds(resolve_path(data_rel + "/" + client_file_name(static_cast<int>(c), "labeled")));
        const auto test =
            read_iqds(resolve_path(data_rel + "/" + client_file_name(static_cast<int>(c), "test")));
        const ClientFeatures train_set = encode_pool(params, cache, labeled, slot);
        const ClientFeatures test_set = encode_pool(params, cache, test, slot);
        SvmOptions opts = r.svm;
        opts.shuffle_seed = Rng::derive_seed(cfg.seed, {stream::kSvm, c});
        const FitResult fit = fit_svm(train_set.x, train_set.y, opts);
        result.per_client[c] = evaluate(fit.model, test_set.x, test_set.y);
        result.per_client_accuracy[c] = result.per_client[c].accuracy;
        models[c] = fit.model;
    });
    for (int c = 0; c < cfg.clients; ++c)
        write_svml(resolve_path(cfg.out_dir + "/models/svm_client_" + std::to_string(c) + ".svml"),
                   models[static_cast<std::size_t>(c)]);

    double avg = 0.0;
    for (double a : result.per_client_accuracy) avg += a;
    result.client_avg_accuracy = avg / static_cast<double>(cfg.clients);

    std::string results_csv = "client,accuracy\n";
    for (int c = 0; c < cfg.clients; ++c)
        results_csv += std::to_string(c) + "," +
                       fmt_f64(result.per_client_accuracy[static_cast<std::size_t>(c)]) + "\n";
    results_csv += "-1," + fmt_f64(result.client_avg_accuracy) + "\n";
    write_file_text(resolve_path(cfg.out_dir + "/results.csv"), results_csv);

    std::string conf_csv = "client,true_class,pred_class,count,fraction\n";
    for (int c = 0; c < cfg.clients; ++c) {
        const EvalResult& ev = result.per_client[static_cast<std::size_t>(c)];
        for (std::size_t i = 0; i < ev.confusion.size(); ++i)
            for (std::size_t j = 0; j < ev.confusion[i].size(); ++j)
                conf_csv += std::to_string(c) + "," + std::to_string(r.classes[i]) + "," +
                            std::to_string(r.classes[j]) + "," +
                            std::to_string(ev.confusion[i][j]) + "," +
                            fmt_f64(ev.confusion_normalized[i][j]) + "\n";
    }
    write_file_text(resolve_path(cfg.out_dir + "/confusion.csv"), conf_csv);

    std::fprintf(stderr, "evaluate: client-averaged accuracy %.4f\n", result.client_avg_accuracy);
    return result;
}

std::vector<SweepRow> cmd_sweep(const AppConfig& cfg) {
    const Resolved r = resolve_config(cfg);
    const std::string data_rel = data_dir_of(cfg, cfg.eval_data_dir);
    const std::string ckpt_rel = checkpoint_of(cfg);

    std::map<std::string, std::string> inputs;
    inputs[ckpt_rel] = file_hash(resolve_path(ckpt_rel));
    for (int c = 0; c < cfg.clients; ++c) {
        const std::string rel = data_rel + "/" + client_file_name(c, "labeled");
        inputs[rel] = file_hash(resolve_path(rel));
    }
    write_manifest("sweep", cfg, inputs);

    const EncoderParams params = read_encp(resolve_path(ckpt_rel));
    require_same_encoder(params.config, r.enc, ckpt_rel);
    const KernelCache cache = normalize_kernels(params);
    const std::vector<int> slot = slot_of_class(r.classes);

    // One SVM per client fitted on the stored labeled pool (the default), or
    // refitted per grid point on a labeled pool regenerated at that SNR.
    std::vector<SvmModel> base_models(static_cast<std::size_t>(cfg.clients));
    if (!cfg.refit_per_snr) {
        for (int c = 0; c < cfg.clients; ++c) {
            const auto labeled =
                read_iqds(resolve_path(data_rel + "/" + client_file_name(c, "labeled")));
            const ClientFeatures train_set = encode_pool(params, cache, labeled, slot);
            SvmOptions opts = r.svm;
            opts.shuffle_seed =
                Rng::derive_seed(cfg.seed, {stream::kSvm, static_cast<std::uint64_t>(c)});
            base_models[static_cast<std::size_t>(c)] = fit_svm(train_set.x, train_set.y, opts).model;
        }
    }

    const int n_snr = cfg.sweep_hi - cfg.sweep_lo + 1;
    const std::size_t cells = static_cast<std::size_t>(n_snr) * static_cast<std::size_t>(cfg.clients);
    std::vector<double> acc(cells, 0.0);
    parallel_for_indexed(cells, cfg.threads, [&](std::size_t cell) {
        const int si = static_cast<int>(cell) / cfg.clients;
        const int c = static_cast<int>(cell) % cfg.clients;
        const int snr = cfg.sweep_lo + si;
        FrameLaw law = r.laws[static_cast<std::size_t>(c)];
        law.snr_lo_db = law.snr_hi_db = static_cast<double>(snr);

        std::vector<std::vector<double>> xs;
        std::vector<int> ys;
        for (std::size_t s = 0; s < r.classes.size(); ++s) {
            const std::size_t n = r.test_counts[static_cast<std::size_t>(c)][s] *
                                  static_cast<std::size_t>(cfg.sweep_test_multiplier);
            for (std::size_t k = 0; k < n; ++k) {
                Rng rng = Rng::derive(cfg.seed, {stream::kSweep, static_cast<std::uint64_t>(c),
                                                 static_cast<std::uint64_t>(si), 0,
                                                 static_cast<std::uint64_t>(r.classes[s]), k});
                const IqFrame fr =
                    generate_frame(static_cast<ModulationScheme>(r.classes[s]), law, rng);
                xs.push_back(forward(params, cache, fr.samples.data(),
                                     static_cast<int>(fr.samples.size())));
                ys.push_back(static_cast<int>(s));
            }
        }
        require(!xs.empty(), "sweep: client " + std::to_string(c) +
                                 " has no test frames; set partition.test_per_class");

        const SvmModel* model = &base_models[static_cast<std::size_t>(c)];
        SvmModel refit;
        if (cfg.refit_per_snr) {
            std::vector<std::vector<double>> lx;
            std::vector<int> ly;
            for (std::size_t s = 0; s < r.classes.size(); ++s) {
                const std::size_t n = r.labeled_counts[static_cast<std::size_t>(c)][s];
                for (std::size_t k = 0; k < n; ++k) {
                    Rng rng = Rng::derive(cfg.seed, {stream::kSweep, static_cast<std::uint64_t>(c),
                                                     static_cast<std::uint64_t>(si), 1,
                                                     static_cast<std::uint64_t>(r.classes[s]), k});
                    const IqFrame fr =
                        generate_frame(static_cast<ModulationScheme>(r.classes[s]), law, rng);
                    lx.push_back(forward(params, cache, fr.samples.data(),
                                         static_cast<int>(fr.samples.size())));
                    ly.push_back(static_cast<int>(s));
                }
            }
            SvmOptions opts = r.svm;
            opts.shuffle_seed = Rng::derive_seed(
                cfg.seed, {stream::kSvm, static_cast<std::uint64_t>(c),
                           static_cast<std::uint64_t>(si)});
            refit = fit_svm(lx, ly, opts).model;
            model = &refit;
        }

        std::size_t hits = 0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (predict(*model, xs[i]) == ys[i]) hits += 1;
        acc[cell] = static_cast<double>(hits) / static_cast<double>(xs.size());
    });

    std::vector<SweepRow> rows;
    std::string csv = "snr_db,client,accuracy\n";
    for (int si = 0; si < n_snr; ++si) {
        double avg = 0.0;
        for (int c = 0; c < cfg.clients; ++c) {
            const double a = acc[static_cast<std::size_t>(si) * cfg.clients + c];
            rows.push_back({cfg.sweep_lo + si, c, a});
            csv += std::to_string(cfg.sweep_lo + si) + "," + std::to_string(c) + "," + fmt_f64(a) +
                   "\n";
            avg += a;
        }
        avg /= static_cast<double>(cfg.clients);
        rows.push_back({cfg.sweep_lo + si, -1, avg});
        csv += std::to_string(cfg.sweep_lo + si) + ",-1," + fmt_f64(avg) + "\n";
    }
    write_file_text(resolve_path(cfg.out_dir + "/accuracy_vs_snr.csv"), csv);
    return rows;
}

TheoryReport cmd_theory(const AppConfig& cfg) {
    cfg.validate();
    write_manifest("theory", cfg, {});
    TheoryReport rep;

    // Gradient-variance bound over the (dim, snr, reg) grid.
    struct LemmaCell {
        int dim;
        double snr, reg;
    };
    std::vector<LemmaCell> cells;
    for (int m : cfg.lemma_dims)
        for (double snr : cfg.lemma_snrs)
            for (double reg : cfg.lemma_regs) cells.push_back({m, snr, reg});
    rep.lemma1.resize(cells.size());
    parallel_for_indexed(cells.size(), cfg.threads, [&](std::size_t i) {
        theory::LinearModelSpec spec;
        spec.dim = cells[i].dim;
        spec.radius = 1.0;
        spec.reg = cells[i].reg;
        spec.power = 1.0;
        spec.snr = cells[i].snr;
        rep.lemma1[i] = theory::lemma1_verify(
            spec, cfg.lemma_samples, cfg.trunc_c,
            Rng::derive_seed(cfg.seed, {stream::kTheory, 20, i}));
    });
    std::string lemma_csv = "dim,snr,reg,moment_bound,bound,max_variance,max_se,slack,pass\n";
    for (const theory::Lemma1Check& ck : rep.lemma1)
        lemma_csv += std::to_string(ck.spec.dim) + "," + fmt_f64(ck.spec.snr) + "," +
                     fmt_f64(ck.spec.reg) + "," + fmt_f64(ck.spec.moment_bound) + "," +
                     fmt_f64(ck.bound) + "," + fmt_f64(ck.max_variance) + "," +
                     fmt_f64(ck.max_se) + "," + fmt_f64(ck.bound - ck.max_variance) + "," +
                     (ck.pass ? "1" : "0") + "\n";
    write_file_text(resolve_path(cfg.out_dir + "/theory_lemma1.csv"), lemma_csv);

    // High-SNR / no-regularization limit agreement.
    std::string limit_csv = "dim,bound_full,bound_simplified,rel_gap\n";
    for (int m : cfg.lemma_dims) {
        theory::LinearModelSpec spec;
        spec.dim = m;
        spec.radius = 1.0;
        spec.reg = 0.0;
        spec.power = 1.0;
        spec.snr = 1e6;
        spec.moment_bound = theory::implied_moment_bound(spec.power, cfg.trunc_c);
        const double full = theory::lemma1_bound(spec);
        const double simp = theory::lemma1_bound_simplified(spec);
        const double gap = std::abs(full - simp) / full;
        rep.lemma1_limit_gaps.push_back(gap);
        limit_csv += std::to_string(m) + "," + fmt_f64(full) + "," + fmt_f64(simp) + "," +
                     fmt_f64(gap) + "\n";
    }
    write_file_text(resolve_path(cfg.out_dir + "/theory_lemma1_limit.csv"), limit_csv);

    // Time-smoothed SGD regret-gradient bound.
    const std::size_t n_runs = static_cast<std::size_t>(cfg.thm1_runs);
    const std::size_t n_windows = cfg.thm1_windows.size();
    rep.theorem1.resize(n_runs * n_windows);
    parallel_for_indexed(n_runs * n_windows, cfg.threads, [&](std::size_t i) {
        const std::size_t run = i / n_windows;
        const std::size_t wi = i % n_windows;
        theory::LinearModelSpec spec;
        spec.dim = cfg.thm1_dim;
        spec.radius = cfg.thm1_radius;
        spec.reg = cfg.thm1_reg;
        spec.power = cfg.thm1_power;
        spec.snr = cfg.thm1_snr;
        rep.theorem1[i] = theory::theorem1_verify(
            spec, cfg.thm1_clients, cfg.thm1_steps, cfg.thm1_windows[wi], cfg.thm1_kappa,
            cfg.trunc_c, Rng::derive_seed(cfg.seed, {stream::kTheory, 21, run, wi}));
    });
    std::string t1_csv =
        "run,window,kappa,eta,beta,weight_norm,loss_max,eps_grad,eps_clamp,measured_avg,"
        "bound_full,bound_simplified,slack,pass\n";
    double trend_first = 0.0, trend_last = 0.0;
    for (std::size_t i = 0; i < rep.theorem1.size(); ++i) {
        const theory::Theorem1Check& ck = rep.theorem1[i];
        const std::size_t run = i / n_windows;
        const std::size_t wi = i % n_windows;
        if (wi == 0) trend_first += ck.measured_avg;
        if (wi == n_windows - 1) trend_last += ck.measured_avg;
        t1_csv += std::to_string(run) + "," + std::to_string(ck.cfg.window) + "," +
                  fmt_f64(ck.cfg.kappa) + "," + fmt_f64(ck.eta) + "," + fmt_f64(ck.beta) + "," +
                  fmt_f64(ck.weight_norm) + "," + fmt_f64(ck.measured_loss_max) + "," +
                  fmt_f64(ck.eps_grad) + "," + fmt_f64(ck.eps_clamp) + "," +
                  fmt_f64(ck.measured_avg) + "," + fmt_f64(ck.bound.full) + "," +
                  fmt_f64(ck.bound.simplified) + "," +
                  fmt_f64(ck.bound.full - ck.measured_avg) + "," + (ck.pass ? "1" : "0") + "\n";
    }
    rep.theorem1_trend = n_windows < 2 || trend_last <= trend_first;
    write_file_text(resolve_path(cfg.out_dir + "/theory_theorem1.csv"), t1_csv);

    // Separability probability lower bound on random separable instances.
    rep.theorem2.resize(static_cast<std::size_t>(cfg.thm2_instances));
    parallel_for_indexed(rep.theorem2.size(), cfg.threads, [&](std::size_t i) {
        TheoryReport::Thm2Row row;
        row.instance = static_cast<int>(i);
        bool made = false;
        for (std::uint64_t attempt = 0; attempt < 16 && !made; ++attempt) {
            Rng gen = Rng::derive(cfg.seed, {stream::kTheory, 22, i, attempt});
            const int d = 2 + static_cast<int>(gen.uniform_int(
                                  static_cast<std::uint64_t>(cfg.thm2_max_dim - 1)));
            const int points = 2 + static_cast<int>(gen.uniform_int(
                                       static_cast<std::uint64_t>(cfg.thm2_max_points - 1)));
            std::vector<double> plane(static_cast<std::size_t>(d));
            double norm = 0.0;
            for (double& v : plane) {
                v = gen.normal();
                norm += v * v;
            }
            norm = std::sqrt(norm);
            if (norm < 1e-9) continue;
            for (double& v : plane) v /= norm;
            const double plane_bias = (gen.uniform01() - 0.5) * 0.4;

            std::vector<std::vector<double>> xs;
            std::vector<int> ys;
            bool ok = true;
            for (int l = 0; l < points && ok; ++l) {
                const double target = l % 2 == 0 ? 1.0 : -1.0;
                bool found = false;
                for (int tries = 0; tries < 400; ++tries) {
                    std::vector<double> x(static_cast<std::size_t>(d));
                    double score = plane_bias;
                    for (std::size_t j = 0; j < x.size(); ++j) {
                        x[j] = gen.uniform01() * 2.0 - 1.0;
                        score += plane[j] * x[j];
                    }
                    if (score * target >= 0.15) {
                        xs.push_back(std::move(x));
                        ys.push_back(target > 0 ? 1 : 0);
                        found = true;
                        break;
                    }
                }
                ok = found;
            }
            if (!ok) continue;

            SvmOptions opts;
            opts.c_reg = 1e6;
            opts.epochs = 400;
            opts.shuffle_seed = Rng::derive_seed(cfg.seed, {stream::kTheory, 23, i, attempt});
            const SeparabilityCertificate cert = check_separability(xs, ys, 0.0, opts);
            if (cert.margin <= 1e-3) continue;

            const double mu = cert.margin / 2.0;
            std::vector<double> margins(xs.size());
            for (std::size_t l = 0; l < xs.size(); ++l) {
                double score = cert.bias;
                for (std::size_t j = 0; j < xs[l].size(); ++j) score += cert.normal[j] * xs[l][j];
                margins[l] = (ys[l] == 1 ? 1.0 : -1.0) * score;
            }
            const theory::Theorem2Bound bound =
                theory::theorem2_prob_bound(margins, mu, cert.radius, cfg.thm2_gamma);
            Rng mc_rng = Rng::derive(cfg.seed, {stream::kTheory, 24, i});
            const theory::SeparabilityMc mc =
                theory::mc_separability(xs, ys, cert.normal, cert.bias, mu, cert.radius,
                                        cfg.thm2_gamma, cfg.thm2_trials, mc_rng);
            Rng control_rng = Rng::derive(cfg.seed, {stream::kTheory, 25, i});
            const theory::SeparabilityMc control =
                theory::mc_separability(xs, ys, cert.normal, cert.bias, mu, cert.radius, 1e12,
                                        cfg.thm2_trials, control_rng);

            row.dim = d;
            row.points = points;
            row.mu = mu;
            row.rho = cert.radius;
            row.gamma_enc = cfg.thm2_gamma;
            row.frequency = mc.frequency;
            row.se = mc.se;
            row.bound_collapsed = bound.collapsed;
            row.bound_product = bound.product;
            row.control_frequency = control.frequency;
            row.pass = mc.frequency >= bound.collapsed - 3.0 * mc.se &&
                       mc.frequency >= bound.product - 3.0 * mc.se &&
                       control.frequency == 1.0;
            made = true;
        }
        require(made, "theory: failed to construct separable instance " + std::to_string(i));
        rep.theorem2[i] = row;
    });
    std::string t2_csv =
        "instance,dim,points,gamma_enc,mu,rho,frequency,se,bound_collapsed,bound_product,"
        "slack,control_frequency,pass\n";
    for (const TheoryReport::Thm2Row& row : rep.theorem2)
        t2_csv += std::to_string(row.instance) + "," + std::to_string(row.dim) + "," +
                  std::to_string(row.points) + "," + fmt_f64(row.gamma_enc) + "," +
                  fmt_f64(row.mu) + "," + fmt_f64(row.rho) + "," + fmt_f64(row.frequency) + "," +
                  fmt_f64(row.se) + "," + fmt_f64(row.bound_collapsed) + "," +
                  fmt_f64(row.bound_product) + "," +
                  fmt_f64(row.frequency - row.bound_collapsed) + "," +
                  fmt_f64(row.control_frequency) + "," + (row.pass ? "1" : "0") + "\n";
    write_file_text(resolve_path(cfg.out_dir + "/theory_theorem2.csv"), t2_csv);

    rep.all_pass = rep.theorem1_trend;
    for (const theory::Lemma1Check& ck : rep.lemma1) rep.all_pass = rep.all_pass && ck.pass;
    for (double gap : rep.lemma1_limit_gaps) rep.all_pass = rep.all_pass && gap < 0.01;
    for (const theory::Theorem1Check& ck : rep.theorem1) rep.all_pass = rep.all_pass && ck.pass;
    for (const TheoryReport::Thm2Row& row : rep.theorem2) rep.all_pass = rep.all_pass && row.pass;
    std::fprintf(stderr, "theory: %s (%zu lemma cells, %zu sgd runs, %zu instances)\n",
                 rep.all_pass ? "all checks passed" : "CHECKS FAILED", rep.lemma1.size(),
                 rep.theorem1.size(), rep.theorem2.size());
    return rep;
}

ResourceReport cmd_resources(const AppConfig& cfg) {
    const Resolved r = resolve_config(cfg);
    write_manifest("resources", cfg, {});

    ResourceReport rep;
    rep.params = param_count(r.enc);
    rep.receptive = receptive_field(r.enc);
    // Multiply-accumulate counting, 2 FLOPs per MAC; bias, activation and
    // pooling are excluded. Causal padding keeps t_out = frame_len.
    for (int k = 0; k < r.enc.depth; ++k) {
        ResourceRow row;
        row.component = "conv" + std::to_string(k);
        row.in_ch = r.enc.in_channels(k);
        row.out_ch = r.enc.channels;
        row.kernel = r.enc.kernel_size;
        row.t_out = cfg.frame_len;
        row.flops = 2.0 * row.out_ch * row.in_ch * row.kernel * row.t_out;
        rep.total_flops += row.flops;
        rep.rows.push_back(row);
    }
    ResourceRow head;
    head.component = "head";
    head.in_ch = r.enc.channels;
    head.out_ch = r.enc.feature_dim;
    head.kernel = 1;
    head.t_out = 1;
    head.flops = 2.0 * head.out_ch * head.in_ch;
    rep.total_flops += head.flops;
    rep.rows.push_back(head);
    ResourceRow total;
    total.component = "total";
    total.flops = rep.total_flops;
    rep.rows.push_back(total);

    std::string csv = "component,in_ch,out_ch,kernel,t_out,flops\n";
    for (const ResourceRow& row : rep.rows)
        csv += row.component + "," + std::to_string(row.in_ch) + "," +
               std::to_string(row.out_ch) + "," + std::to_string(row.kernel) + "," +
               std::to_string(row.t_out) + "," + fmt_f64(row.flops) + "\n";
    write_file_text(resolve_path(cfg.out_dir + "/resources.csv"), csv);

    std::string summary = "params,receptive_field,frame_len,total_flops,total_mflops\n";
    summary += std::to_string(rep.params) + "," + std::to_string(rep.receptive) + "," +
               std::to_string(cfg.frame_len) + "," + fmt_f64(rep.total_flops) + "," +
               fmt_f64(rep.total_flops / 1e6) + "\n";
    write_file_text(resolve_path(cfg.out_dir + "/resources_summary.csv"), summary);

    std::printf("params %zu\nreceptive_field %d\nforward_flops %.0f (%.2f MFLOPs at N=%d)\n",
                rep.params, rep.receptive, rep.total_flops, rep.total_flops / 1e6, cfg.frame_len);
    return rep;
}

void cmd_ingest(const AppConfig& cfg) {
    cfg.validate();
    if (cfg.ingest_input.empty()) throw config_error("ingest.input is required");
    const std::string out_rel =
        cfg.ingest_output.empty() ? cfg.out_dir + "/ingested.iqds" : cfg.ingest_output;

    std::map<std::string, std::string> inputs;
    inputs[cfg.ingest_input] = file_hash(resolve_path(cfg.ingest_input));
    if (!cfg.ingest_sidecar.empty())
        inputs[cfg.ingest_sidecar] = file_hash(resolve_path(cfg.ingest_sidecar));
    write_manifest("ingest", cfg, inputs);

    std::vector<IqFrame> frames;
    bool with_meta = false;
    if (cfg.ingest_format == "iqds") {
        frames = read_iqds(resolve_path(cfg.ingest_input));
        with_meta = !frames.empty() && frames[0].has_meta;
    } else {
        if (cfg.ingest_sidecar.empty())
            throw config_error("ingest.sidecar is required for the raw_f32 format");
        const auto bytes = read_file_bytes(resolve_path(cfg.ingest_input));
        const std::size_t frame_bytes = static_cast<std::size_t>(cfg.ingest_frame_len) * 8;
        const std::size_t rem = bytes.size() % frame_bytes;
        require(rem == 0, "raw_f32 input " + cfg.ingest_input + " truncated at byte offset " +
                              std::to_string(bytes.size() - rem) + " (" +
                              std::to_string(frame_bytes) + "-byte frames)");
        const std::size_t count = bytes.size() / frame_bytes;
        require(count >= 1, "raw_f32 input " + cfg.ingest_input + " contains no frames");

        std::vector<int> labels;
        const std::string sidecar = read_file_text(resolve_path(cfg.ingest_sidecar));
        std::size_t pos = 0;
        int lineno = 0;
        while (pos <= sidecar.size()) {
            std::size_t eol = sidecar.find('\n', pos);
            if (eol == std::string::npos) eol = sidecar.size();
            std::string line = sidecar.substr(pos, eol - pos);
            pos = eol + 1;
            lineno += 1;
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
            while (!line.empty() && line.front() == ' ') line.erase(line.begin());
            if (line.empty()) {
                if (pos > sidecar.size()) break;
                continue;
            }
            char* end = nullptr;
            const long v = std::strtol(line.c_str(), &end, 10);
            require(end == line.c_str() + line.size() && v >= -1 && v <= 254,
                    "label sidecar " + cfg.ingest_sidecar + " line " + std::to_string(lineno) +
                        ": invalid label '" + line + "'");
            labels.push_back(static_cast<int>(v));
        }
        require(labels.size() == count,
                "label sidecar " + cfg.ingest_sidecar + " has " + std::to_string(labels.size()) +
                    " labels for " + std::to_string(count) + " frames");

        frames.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            IqFrame& fr = frames[i];
            fr.label = labels[i];
            fr.samples.resize(static_cast<std::size_t>(cfg.ingest_frame_len));
            const unsigned char* p = bytes.data() + i * frame_bytes;
            for (int k = 0; k < cfg.ingest_frame_len; ++k) {
                const float re = le::get<float>(p + 8 * k);
                const float im = le::get<float>(p + 8 * k + 4);
                fr.samples[static_cast<std::size_t>(k)] = cplx(re, im);
            }
        }
    }
    require(!frames.empty(), "ingest: no frames to write");
    write_iqds(resolve_path(out_rel), frames, with_meta);
    std::fprintf(stderr, "ingest: wrote %s (%zu frames)\n", out_rel.c_str(), frames.size());
}

void run_command(const std::string& name, const AppConfig& cfg) {
    if (name == "generate")
        cmd_generate(cfg);
    else if (name == "train")
        cmd_train(cfg);
    else if (name == "evaluate")
        cmd_evaluate(cfg);
    else if (name == "sweep")
        cmd_sweep(cfg);
    else if (name == "theory")
        cmd_theory(cfg);
    else if (name == "resources")
        cmd_resources(cfg);
    else if (name == "ingest")
        cmd_ingest(cfg);
    else
        throw config_error("unknown command '" + name + "'");
}

void cmd_rerun(const std::string& manifest_path) {
    const RunManifest m = manifest_from_json(read_file_text(manifest_path));
    std::fprintf(stderr, "rerun: %s from %s\n", m.command.c_str(), manifest_path.c_str());
    run_command(m.command, m.config);
}

}  // namespace harness
}  // namespace fediq
