#include "fediq/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <functional>

#include "json.hpp"

namespace fediq {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
    throw config_error("config key '" + key + "': cannot parse '" + value + "' as " + expected);
}

long long parse_ll(const std::string& key, const std::string& value) {
    const std::string t = trim(value);
    if (t.empty()) bad_value(key, value, "an integer");
    char* end = nullptr;
    errno = 0;
    long long v = std::strtoll(t.c_str(), &end, 10);
    if (errno != 0 || end != t.c_str() + t.size()) bad_value(key, value, "an integer");
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    const std::string t = trim(value);
    if (t.empty() || t[0] == '-') bad_value(key, value, "an unsigned integer");
    char* end = nullptr;
    errno = 0;
    unsigned long long v = std::strtoull(t.c_str(), &end, 10);
    if (errno != 0 || end != t.c_str() + t.size()) bad_value(key, value, "an unsigned integer");
    return v;
}

double parse_f64(const std::string& key, const std::string& value) {
    const std::string t = trim(value);
    if (t.empty()) bad_value(key, value, "a number");
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(t.c_str(), &end);
    if (errno != 0 || end != t.c_str() + t.size()) bad_value(key, value, "a number");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    const std::string t = trim(value);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    bad_value(key, value, "a boolean");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= value.size()) {
        std::size_t comma = value.find(',', pos);
        if (comma == std::string::npos) comma = value.size();
        out.push_back(trim(value.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    while (!out.empty() && out.back().empty()) out.pop_back();
    return out;
}

std::string format_f64(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join_list(const std::vector<std::string>& parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ",";
        out += parts[i];
    }
    return out;
}

struct Entry {
    std::string key;
    std::function<void(AppConfig&, const std::string&)> set;
    std::function<std::string(const AppConfig&)> get;
};

std::vector<Entry> make_schema() {
    std::vector<Entry> s;
    auto add_int = [&s](const char* k, int AppConfig::*f) {
        s.push_back({k,
                     [f, k](AppConfig& c, const std::string& v) {
                         long long x = parse_ll(k, v);
                         if (x < -(1LL << 31) || x > (1LL << 31) - 1) bad_value(k, v, "an int");
                         c.*f = static_cast<int>(x);
                     },
                     [f](const AppConfig& c) { return std::to_string(c.*f); }});
    };
    auto add_ll = [&s](const char* k, long long AppConfig::*f) {
        s.push_back({k,
                     [f, k](AppConfig& c, const std::string& v) { c.*f = parse_ll(k, v); },
                     [f](const AppConfig& c) { return std::to_string(c.*f); }});
    };
    auto add_u64 = [&s](const char* k, std::uint64_t AppConfig::*f) {
        s.push_back({k,
                     [f, k](AppConfig& c, const std::string& v) { c.*f = parse_u64(k, v); },
                     [f](const AppConfig& c) { return std::to_string(c.*f); }});
    };
    auto add_f64 = [&s](const char* k, double AppConfig::*f) {
        s.push_back({k,
                     [f, k](AppConfig& c, const std::string& v) { c.*f = parse_f64(k, v); },
                     [f](const AppConfig& c) { return format_f64(c.*f); }});
    };
    auto add_bool = [&s](const char* k, bool AppConfig::*f) {
        s.push_back({k,
                     [f, k](AppConfig& c, const std::string& v) { c.*f = parse_bool(k, v); },
                     [f](const AppConfig& c) { return c.*f ? "true" : "false"; }});
    };
    auto add_str = [&s](const char* k, std::string AppConfig::*f) {
        s.push_back({k,
                     [f](AppConfig& c, const std::string& v) { c.*f = trim(v); },
                     [f](const AppConfig& c) { return c.*f; }});
    };
    auto add_ints = [&s](const char* k, std::vector<int> AppConfig::*f) {
        s.push_back({k,
                     [f, k](AppConfig& c, const std::string& v) {
                         std::vector<int> xs;
                         for (const std::string& p : split_list(v))
                             xs.push_back(static_cast<int>(parse_ll(k, p)));
                         c.*f = std::move(xs);
                     },
                     [f](const AppConfig& c) {
                         std::vector<std::string> parts;
                         for (int x : c.*f) parts.push_back(std::to_string(x));
                         return join_list(parts);
                     }});
    };
    auto add_f64s = [&s](const char* k, std::vector<double> AppConfig::*f) {
        s.push_back({k,
                     [f, k](AppConfig& c, const std::string& v) {
                         std::vector<double> xs;
                         for (const std::string& p : split_list(v)) xs.push_back(parse_f64(k, p));
                         c.*f = std::move(xs);
                     },
                     [f](const AppConfig& c) {
                         std::vector<std::string> parts;
                         for (double x : c.*f) parts.push_back(format_f64(x));
                         return join_list(parts);
                     }});
    };
    auto add_strs = [&s](const char* k, std::vector<std::string> AppConfig::*f) {
        s.push_back({k,
                     [f](AppConfig& c, const std::string& v) { c.*f = split_list(v); },
                     [f](const AppConfig& c) { return join_list(c.*f); }});
    };

    add_u64("run.seed", &AppConfig::seed);
    add_str("run.out_dir", &AppConfig::out_dir);
    add_str("run.experiment", &AppConfig::experiment);
    add_int("run.threads", &AppConfig::threads);

    add_int("signal.frame_len", &AppConfig::frame_len);
    add_f64("signal.snr_lo_db", &AppConfig::snr_lo_db);
    add_f64("signal.snr_hi_db", &AppConfig::snr_hi_db);
    add_f64("signal.cfo_fixed", &AppConfig::cfo_fixed);
    add_f64("signal.phase_max", &AppConfig::phase_max);
    add_bool("signal.use_cfo_mix", &AppConfig::use_cfo_mix);
    add_f64s("signal.cfo_proportions", &AppConfig::cfo_proportions);

    add_str("partition.mode", &AppConfig::partition_mode);
    add_int("partition.clients", &AppConfig::clients);
    add_f64("partition.alpha", &AppConfig::dirichlet_alpha);
    add_int("partition.scale_divisor", &AppConfig::scale_divisor);
    add_ints("partition.classes", &AppConfig::classes);
    add_int("partition.unlabeled_per_client", &AppConfig::unlabeled_per_client);
    add_int("partition.test_per_class", &AppConfig::test_per_class);

    add_int("encoder.depth", &AppConfig::enc_depth);
    add_int("encoder.kernel_size", &AppConfig::enc_kernel);
    add_int("encoder.channels", &AppConfig::enc_channels);
    add_int("encoder.feature_dim", &AppConfig::enc_feature_dim);

    add_int("ssl.negatives", &AppConfig::ssl_negatives);
    add_int("ssl.min_window", &AppConfig::ssl_min_window);

    add_int("federate.rounds", &AppConfig::fed_rounds);
    add_int("federate.steps", &AppConfig::fed_steps);
    add_int("federate.batch", &AppConfig::fed_batch);
    add_f64("federate.lr", &AppConfig::fed_lr);
    add_f64("federate.adam_beta1", &AppConfig::adam_beta1);
    add_f64("federate.adam_beta2", &AppConfig::adam_beta2);
    add_f64("federate.adam_eps", &AppConfig::adam_eps);
    add_strs("federate.quant", &AppConfig::fed_quant);

    add_str("train.data_dir", &AppConfig::train_data_dir);
    add_str("train.resume_checkpoint", &AppConfig::resume_checkpoint);
    add_int("train.resume_round", &AppConfig::resume_round);

    add_f64("classify.c_reg", &AppConfig::svm_c_reg);
    add_int("classify.epochs", &AppConfig::svm_epochs);

    add_str("evaluate.checkpoint", &AppConfig::eval_checkpoint);
    add_str("evaluate.data_dir", &AppConfig::eval_data_dir);
    add_bool("evaluate.refit_per_snr", &AppConfig::refit_per_snr);
    add_int("evaluate.sweep_lo", &AppConfig::sweep_lo);
    add_int("evaluate.sweep_hi", &AppConfig::sweep_hi);
    add_int("evaluate.sweep_test_multiplier", &AppConfig::sweep_test_multiplier);

    add_ll("theory.lemma_samples", &AppConfig::lemma_samples);
    add_ints("theory.lemma_dims", &AppConfig::lemma_dims);
    add_f64s("theory.lemma_snrs", &AppConfig::lemma_snrs);
    add_f64s("theory.lemma_regs", &AppConfig::lemma_regs);
    add_f64("theory.trunc_c", &AppConfig::trunc_c);
    add_int("theory.thm1_runs", &AppConfig::thm1_runs);
    add_int("theory.thm1_dim", &AppConfig::thm1_dim);
    add_int("theory.thm1_clients", &AppConfig::thm1_clients);
    add_int("theory.thm1_steps", &AppConfig::thm1_steps);
    add_ints("theory.thm1_windows", &AppConfig::thm1_windows);
    add_f64("theory.thm1_kappa", &AppConfig::thm1_kappa);
    add_f64("theory.thm1_snr", &AppConfig::thm1_snr);
    add_f64("theory.thm1_reg", &AppConfig::thm1_reg);
    add_f64("theory.thm1_power", &AppConfig::thm1_power);
    add_f64("theory.thm1_radius", &AppConfig::thm1_radius);
    add_int("theory.thm2_instances", &AppConfig::thm2_instances);
    add_ll("theory.thm2_trials", &AppConfig::thm2_trials);
    add_int("theory.thm2_max_points", &AppConfig::thm2_max_points);
    add_int("theory.thm2_max_dim", &AppConfig::thm2_max_dim);
    add_f64("theory.thm2_gamma", &AppConfig::thm2_gamma);

    add_str("ingest.format", &AppConfig::ingest_format);
    add_str("ingest.input", &AppConfig::ingest_input);
    add_str("ingest.sidecar", &AppConfig::ingest_sidecar);
    add_str("ingest.output", &AppConfig::ingest_output);
    add_int("ingest.frame_len", &AppConfig::ingest_frame_len);
    return s;
}

const std::vector<Entry>& schema() {
    static const std::vector<Entry> s = make_schema();
    return s;
}

void check(bool cond, const std::string& msg) {
    if (!cond) throw config_error(msg);
}

}  // namespace

void AppConfig::validate() const {
    check(threads >= 1, "run.threads must be >= 1");
    check(!out_dir.empty(), "run.out_dir must not be empty");
    check(out_dir.front() != '/', "run.out_dir must be a relative path");
    check(experiment == "baseline" || experiment == "snr_het" || experiment == "cfo_het" ||
              experiment == "quant_het" || experiment == "dirichlet" || experiment == "theory",
          "run.experiment must be one of baseline, snr_het, cfo_het, quant_het, dirichlet, "
          "theory (got '" + experiment + "')");
    check(partition_mode == "fixed" || partition_mode == "dirichlet",
          "partition.mode must be 'fixed' or 'dirichlet'");
    check(clients >= 1, "partition.clients must be >= 1");
    check(scale_divisor >= 1, "partition.scale_divisor must be >= 1");
    check(!classes.empty(), "partition.classes must not be empty");
    for (int c : classes) check(c >= 0 && c <= 3, "partition.classes entries must be in 0..3");
    for (std::size_t i = 0; i < classes.size(); ++i)
        for (std::size_t j = i + 1; j < classes.size(); ++j)
            check(classes[i] != classes[j], "partition.classes entries must be distinct");
    check(unlabeled_per_client >= 0, "partition.unlabeled_per_client must be >= 0");
    check(test_per_class >= 0, "partition.test_per_class must be >= 0");
    check(frame_len >= 2, "signal.frame_len must be >= 2");
    check(snr_lo_db <= snr_hi_db, "signal.snr_lo_db must be <= signal.snr_hi_db");
    check(sweep_lo <= sweep_hi, "evaluate.sweep_lo must be <= evaluate.sweep_hi");
    check(sweep_test_multiplier >= 1, "evaluate.sweep_test_multiplier must be >= 1");
    check(ingest_format == "raw_f32" || ingest_format == "iqds",
          "ingest.format must be 'raw_f32' or 'iqds'");
    check(ingest_frame_len >= 1, "ingest.frame_len must be >= 1");
    check(!fed_quant.empty(), "federate.quant must not be empty");
    check(fed_quant.size() == 1 || static_cast<int>(fed_quant.size()) == clients,
          "federate.quant must list one level or one per client");
}

void apply_kv(AppConfig& cfg, const std::string& key, const std::string& value) {
    for (const Entry& e : schema()) {
        if (e.key == key) {
            e.set(cfg, value);
            return;
        }
    }
    throw config_error("unknown config key '" + key + "'");
}

std::map<std::string, std::string> dump_config(const AppConfig& cfg) {
    std::map<std::string, std::string> out;
    for (const Entry& e : schema()) out[e.key] = e.get(cfg);
    return out;
}

std::vector<std::pair<std::string, std::string>> parse_ini(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::string section;
    std::size_t pos = 0;
    int lineno = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        lineno += 1;
        std::size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error("config line " + std::to_string(lineno) +
                                   ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw config_error("config line " + std::to_string(lineno) + ": empty section name");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw config_error("config line " + std::to_string(lineno) + ": empty key");
        if (section.empty())
            throw config_error("config line " + std::to_string(lineno) +
                               ": key outside any [section]");
        out.emplace_back(section + "." + key, value);
    }
    return out;
}

AppConfig load_config(const std::string* file_text, const std::vector<std::string>& overrides) {
    AppConfig cfg;
    if (file_text) {
        for (const auto& [key, value] : parse_ini(*file_text)) apply_kv(cfg, key, value);
    }
    for (const std::string& ov : overrides) {
        std::size_t eq = ov.find('=');
        if (eq == std::string::npos)
            throw config_error("--set expects section.key=value, got '" + ov + "'");
        apply_kv(cfg, trim(ov.substr(0, eq)), ov.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string manifest_to_json(const RunManifest& m) {
    nlohmann::json j;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["command"] = m.command;
    j["experiment"] = m.experiment;
    j["seed"] = m.seed;
    j["out_dir"] = m.out_dir;
    j["config"] = dump_config(m.config);
    j["input_hashes"] = m.input_hashes;
    return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("manifest: invalid JSON: ") + e.what());
    }
    RunManifest m;
    try {
        require(j.at("tool").get<std::string>() == kToolName, "manifest: wrong tool field");
        m.command = j.at("command").get<std::string>();
        m.experiment = j.at("experiment").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.out_dir = j.at("out_dir").get<std::string>();
        for (const auto& [key, value] : j.at("config").items())
            apply_kv(m.config, key, value.get<std::string>());
        if (j.contains("input_hashes"))
            for (const auto& [key, value] : j.at("input_hashes").items())
                m.input_hashes[key] = value.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("manifest: missing or mistyped field: ") + e.what());
    }
    m.config.validate();
    return m;
}

}  // namespace fediq
