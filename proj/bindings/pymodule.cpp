// Python bindings for the main operations: frame synthesis, the encoder,
// triplet loss, aggregation/quantization, linear classification, the
// closed-form theory bounds, IQDS container IO, and the CLI commands.

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fediq/harness.hpp"
#include "fediq/iqds.hpp"
#include "fediq/ssl.hpp"
#include "fediq/theory.hpp"

namespace py = pybind11;
using namespace fediq;

namespace {

struct PyEncoder {
    EncoderParams params;
    KernelCache cache;

    explicit PyEncoder(EncoderParams p) : params(std::move(p)), cache(normalize_kernels(params)) {}

    std::vector<double> forward_samples(const std::vector<cplx>& samples) const {
        require(!samples.empty(), "forward: empty sample window");
        return forward(params, cache, samples.data(), static_cast<int>(samples.size()));
    }
};

PyEncoder make_encoder(int depth, int kernel, int channels, int feature_dim,
                       std::uint64_t seed) {
    EncoderConfig cfg;
    cfg.depth = depth;
    cfg.kernel_size = kernel;
    cfg.channels = channels;
    cfg.feature_dim = feature_dim;
    Rng rng = Rng::derive(seed, {stream::kInit});
    return PyEncoder(init_params(cfg, rng));
}

struct PySvm {
    SvmModel model;
    std::vector<double> objective_trace;
};

PySvm fit(const std::vector<std::vector<double>>& features, const std::vector<int>& labels,
          double c_reg, int epochs, std::uint64_t shuffle_seed) {
    SvmOptions opts;
    opts.c_reg = c_reg;
    opts.epochs = epochs;
    opts.shuffle_seed = shuffle_seed;
    FitResult fr = fit_svm(features, labels, opts);
    return PySvm{std::move(fr.model), std::move(fr.objective_trace)};
}

py::dict frame_to_dict(const IqFrame& fr) {
    py::dict d;
    d["label"] = fr.label;
    d["samples"] = fr.samples;
    if (fr.has_meta) {
        py::dict meta;
        meta["gain"] = fr.meta_gain;
        meta["phase"] = fr.meta_phase;
        meta["cfo"] = fr.meta_cfo;
        meta["snr_db"] = fr.meta_snr_db;
        d["meta"] = meta;
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "federated self-supervised I/Q representation learning: core operations";
    m.attr("__version__") = kToolVersion;

    py::register_exception<config_error>(m, "ConfigError");
    py::register_exception<data_error>(m, "DataError");
    py::register_exception<internal_error>(m, "InternalError");

    // ---- signal ----
    m.def(
        "modulate",
        [](const std::string& scheme, const std::vector<int>& symbols) {
            return modulate(make_constellation(scheme_from_name(scheme)), symbols);
        },
        py::arg("scheme"), py::arg("symbols"),
        "Map symbol indices onto the Gray-coded unit-energy constellation "
        "(bpsk|qpsk|8psk|16qam).");
    m.def(
        "generate_frame",
        [](const std::string& scheme, int frame_len, double snr_lo_db, double snr_hi_db,
           double cfo, double phase_max, std::uint64_t seed) {
            FrameLaw law;
            law.frame_len = frame_len;
            law.snr_lo_db = snr_lo_db;
            law.snr_hi_db = snr_hi_db;
            law.cfo_fixed = cfo;
            law.phase_max = phase_max;
            Rng rng(seed);
            return frame_to_dict(generate_frame(scheme_from_name(scheme), law, rng));
        },
        py::arg("scheme"), py::arg("frame_len") = 100, py::arg("snr_lo_db") = -10.0,
        py::arg("snr_hi_db") = 10.0, py::arg("cfo") = 0.01,
        py::arg("phase_max") = 0.19634954084936207, py::arg("seed") = 0,
        "Draw one labeled frame through the stochastic single-tap channel.");
    m.def("scale_noise_for_snr", &scale_noise_for_snr, py::arg("clean_signal"),
          py::arg("raw_noise"), py::arg("snr_db"),
          "Noise scale that hits the requested realized SNR exactly.");
    m.def("doppler_offset",
          [](double velocity, double sample_rate) {
              DopplerParams p;
              p.radial_velocity = velocity;
              p.sample_rate = sample_rate;
              return doppler_offset(p);
          },
          py::arg("radial_velocity"), py::arg("sample_rate"),
          "Normalized CFO induced by radial motion: v / (f_s * c).");

    // ---- encoder ----
    py::class_<PyEncoder>(m, "Encoder",
                          "Dilated causal convolutional encoder with frozen parameters.")
        .def(py::init(&make_encoder), py::arg("depth") = 10, py::arg("kernel") = 3,
             py::arg("channels") = 40, py::arg("feature_dim") = 320, py::arg("seed") = 2024)
        .def_static(
            "load", [](const std::string& path) { return PyEncoder(read_encp(path)); },
            py::arg("path"), "Load an ENCP checkpoint.")
        .def("save",
             [](const PyEncoder& e, const std::string& path) { write_encp(path, e.params); },
             py::arg("path"))
        .def("forward", &PyEncoder::forward_samples, py::arg("samples"),
             "Feature vector of one complex sample window.")
        .def_property_readonly(
            "param_count", [](const PyEncoder& e) { return param_count(e.params.config); })
        .def_property_readonly(
            "receptive_field", [](const PyEncoder& e) { return receptive_field(e.params.config); })
        .def_property_readonly("feature_dim",
                               [](const PyEncoder& e) { return e.params.config.feature_dim; });
    m.def(
        "receptive_field",
        [](int depth, int kernel) {
            EncoderConfig cfg;
            cfg.depth = depth;
            cfg.kernel_size = kernel;
            return receptive_field(cfg);
        },
        py::arg("depth"), py::arg("kernel") = 3, "1 + (K-1) * (2^depth - 1).");
    m.def(
        "param_count",
        [](int depth, int kernel, int channels, int feature_dim) {
            EncoderConfig cfg;
            cfg.depth = depth;
            cfg.kernel_size = kernel;
            cfg.channels = channels;
            cfg.feature_dim = feature_dim;
            return param_count(cfg);
        },
        py::arg("depth"), py::arg("kernel"), py::arg("channels"), py::arg("feature_dim"));

    // ---- ssl ----
    m.def(
        "triplet_loss",
        [](const std::vector<double>& f_ref, const std::vector<double>& f_pos,
           const std::vector<std::vector<double>>& f_negs) {
            return triplet_loss(f_ref, f_pos, f_negs);
        },
        py::arg("f_ref"), py::arg("f_pos"), py::arg("f_negs"),
        "softplus(-ref.pos) + sum_k softplus(ref.neg_k) on encoded features.");

    // ---- federate ----
    m.def(
        "aggregate",
        [](const std::vector<std::tuple<int, std::uint64_t, std::vector<double>>>& updates) {
            std::vector<ClientUpdate> ups;
            for (const auto& [id, weight, params] : updates) ups.push_back({id, weight, params});
            return aggregate(ups);
        },
        py::arg("updates"),
        "Weighted mean of (client_id, weight, params) updates; reduction order is "
        "ascending client id regardless of input order.");
    m.def(
        "quantize_roundtrip",
        [](const std::vector<double>& w, const std::string& level) {
            return quantize_roundtrip(w, quant_from_name(level));
        },
        py::arg("w"), py::arg("level"), "Round to the wire grid (none|f32|f16|int8) and back.");
    m.def("f16_roundtrip", &f16_roundtrip, py::arg("x"));
    m.def("int8_scale", &int8_scale, py::arg("w"));

    // ---- classify ----
    py::class_<PySvm>(m, "Svm", "One-vs-rest linear SVM on frozen features.")
        .def_static("fit", &fit, py::arg("features"), py::arg("labels"), py::arg("c_reg") = 1.0,
                    py::arg("epochs") = 200, py::arg("shuffle_seed") = 0)
        .def_static(
            "load", [](const std::string& path) { return PySvm{read_svml(path), {}}; },
            py::arg("path"), "Load an SVML model file.")
        .def("save", [](const PySvm& s, const std::string& path) { write_svml(path, s.model); },
             py::arg("path"))
        .def("predict",
             [](const PySvm& s, const std::vector<double>& x) { return predict(s.model, x); },
             py::arg("x"))
        .def("accuracy",
             [](const PySvm& s, const std::vector<std::vector<double>>& x,
                const std::vector<int>& y) { return evaluate(s.model, x, y).accuracy; },
             py::arg("features"), py::arg("labels"))
        .def_property_readonly("objective_trace",
                               [](const PySvm& s) { return s.objective_trace; })
        .def_property_readonly("num_classes", [](const PySvm& s) { return s.model.num_classes; })
        .def_property_readonly("dim", [](const PySvm& s) { return s.model.dim; });

    // ---- theory ----
    m.def("q_function", &theory::q_function, py::arg("x"), "Gaussian upper tail probability.");
    m.def("implied_moment_bound", &theory::implied_moment_bound, py::arg("power"),
          py::arg("trunc_c") = 2.0);
    auto spec_of = [](int dim, double radius, double reg, double power, double moment_bound,
                      double snr) {
        theory::LinearModelSpec spec;
        spec.dim = dim;
        spec.radius = radius;
        spec.reg = reg;
        spec.power = power;
        spec.moment_bound = moment_bound;
        spec.snr = snr;
        return spec;
    };
    m.def(
        "gradient_variance_bound",
        [spec_of](int dim, double radius, double reg, double power, double moment_bound,
                  double snr) {
            return theory::lemma1_bound(spec_of(dim, radius, reg, power, moment_bound, snr));
        },
        py::arg("dim"), py::arg("radius") = 1.0, py::arg("reg") = 0.0, py::arg("power") = 1.0,
        py::arg("moment_bound") = 2.0, py::arg("snr") = 1.0,
        "Closed-form per-entry second-moment bound on the stochastic gradient.");
    m.def(
        "gradient_variance_bound_simplified",
        [spec_of](int dim, double radius, double reg, double power, double moment_bound,
                  double snr) {
            return theory::lemma1_bound_simplified(
                spec_of(dim, radius, reg, power, moment_bound, snr));
        },
        py::arg("dim"), py::arg("radius") = 1.0, py::arg("reg") = 0.0, py::arg("power") = 1.0,
        py::arg("moment_bound") = 2.0, py::arg("snr") = 1.0,
        "High-SNR / no-regularization limit m^2 R^2 B.");
    m.def(
        "separability_prob_bound",
        [](const std::vector<double>& margins, double mu, double rho, double gamma_enc) {
            theory::Theorem2Bound b = theory::theorem2_prob_bound(margins, mu, rho, gamma_enc);
            return py::make_tuple(b.collapsed, b.product);
        },
        py::arg("margins"), py::arg("mu"), py::arg("rho"), py::arg("gamma_enc"),
        "Lower bounds on the probability that noisy features stay separable: "
        "(collapsed, per-point product).");

    // ---- containers ----
    m.def(
        "read_iqds",
        [](const std::string& path) {
            py::list out;
            for (const IqFrame& fr : read_iqds(path)) out.append(frame_to_dict(fr));
            return out;
        },
        py::arg("path"));
    m.def(
        "write_iqds",
        [](const std::string& path,
           const std::vector<std::pair<int, std::vector<cplx>>>& frames) {
            std::vector<IqFrame> fs;
            for (const auto& [label, samples] : frames) {
                IqFrame fr;
                fr.label = label;
                fr.samples = samples;
                fs.push_back(std::move(fr));
            }
            write_iqds(path, fs, false);
        },
        py::arg("path"), py::arg("frames"),
        "Write (label, samples) pairs; label -1 marks unlabeled frames.");

    // ---- harness ----
    m.def(
        "run",
        [](const std::string& command, const std::vector<std::string>& overrides,
           const py::object& config_text) {
            AppConfig cfg;
            if (config_text.is_none()) {
                cfg = load_config(nullptr, overrides);
            } else {
                const std::string text = py::cast<std::string>(config_text);
                cfg = load_config(&text, overrides);
            }
            harness::run_command(command, cfg);
        },
        py::arg("command"), py::arg("overrides") = std::vector<std::string>{},
        py::arg("config_text") = py::none(),
        "Run one CLI command (generate|train|evaluate|sweep|theory|resources|ingest) "
        "with --set style overrides.");
    m.def("rerun", &harness::cmd_rerun, py::arg("manifest_path"),
          "Re-execute the command recorded in a manifest file.");
    m.def("out_root", &harness::out_root,
          "Output root directory ($FEDIQ_OUT_ROOT, default '.').");
}
