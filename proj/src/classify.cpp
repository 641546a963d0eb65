#include "fediq/classify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fediq/common.hpp"
#include "fediq/fileio.hpp"

namespace fediq {

inline constexpr std::uint16_t kSvmlVersion = 1;

void SvmOptions::validate() const {
    require(c_reg > 0.0, "svm: c_reg must be positive");
    require(epochs >= 1, "svm: epochs must be >= 1");
}

void SvmModel::validate() const {
    require(num_classes >= 1 && dim >= 1, "svm model: empty shape");
    require(weights.size() == static_cast<std::size_t>(num_classes) * dim,
            "svm model: weight size mismatch");
    require(bias.size() == static_cast<std::size_t>(num_classes), "svm model: bias size mismatch");
}

namespace {

void check_dataset(const std::vector<std::vector<double>>& features,
                   const std::vector<int>& labels) {
    require(!features.empty(), "svm: empty dataset");
    require(features.size() == labels.size(), "svm: features/labels length mismatch");
    for (const auto& f : features)
        require(f.size() == features[0].size() && !f.empty(), "svm: ragged feature vectors");
    for (int l : labels) require(l >= 0, "svm: negative label");
}

double hinge_mean(const double* w, double b, const std::vector<std::vector<double>>& features,
                  const std::vector<int>& labels, int cls) {
    double total = 0.0;
    const std::size_t dim = features[0].size();
    for (std::size_t l = 0; l < features.size(); ++l) {
        const double y = labels[l] == cls ? 1.0 : -1.0;
        double score = b;
        for (std::size_t j = 0; j < dim; ++j) score += w[j] * features[l][j];
        total += std::max(0.0, 1.0 - y * score);
    }
    return total / static_cast<double>(features.size());
}

}  // namespace

double svm_objective(const SvmModel& model, const std::vector<std::vector<double>>& features,
                     const std::vector<int>& labels) {
    model.validate();
    check_dataset(features, labels);
    double obj = 0.0;
    for (int k = 0; k < model.num_classes; ++k) {
        const double* w = model.weights.data() + static_cast<std::size_t>(k) * model.dim;
        double sq = 0.0;
        for (int j = 0; j < model.dim; ++j) sq += w[j] * w[j];
        obj += sq / (2.0 * model.c_reg) + hinge_mean(w, model.bias[static_cast<std::size_t>(k)],
                                                     features, labels, k);
    }
    return obj;
}

FitResult fit_svm(const std::vector<std::vector<double>>& features, const std::vector<int>& labels,
                  const SvmOptions& opts) {
    opts.validate();
    check_dataset(features, labels);
    const int num_classes = 1 + *std::max_element(labels.begin(), labels.end());
    require(*std::min_element(labels.begin(), labels.end()) != num_classes - 1,
            "svm: training data contains a single class");
    const std::size_t dim = features[0].size();
    const std::size_t n = features.size();

    FitResult out;
    SvmModel& m = out.model;
    m.num_classes = num_classes;
    m.dim = static_cast<int>(dim);
    m.weights.assign(static_cast<std::size_t>(num_classes) * dim, 0.0);
    m.bias.assign(static_cast<std::size_t>(num_classes), 0.0);
    m.c_reg = opts.c_reg;
    m.epochs = opts.epochs;

    const double lambda = 1.0 / opts.c_reg;
    Rng rng = Rng::derive(opts.shuffle_seed, {stream::kSvm});
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    double best_obj = svm_objective(m, features, labels);
    std::vector<double> snap_w, snap_b;
    for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
        const double lr = 0.1 / std::sqrt(static_cast<double>(epoch));
        // Fisher-Yates with the dedicated shuffle stream.
        for (std::size_t i = n - 1; i > 0; --i)
            std::swap(order[i], order[rng.uniform_int(i + 1)]);

        snap_w = m.weights;
        snap_b = m.bias;
        for (std::size_t idx : order) {
            const auto& x = features[idx];
            for (int k = 0; k < num_classes; ++k) {
                double* w = m.weights.data() + static_cast<std::size_t>(k) * dim;
                const double y = labels[idx] == k ? 1.0 : -1.0;
                double score = m.bias[static_cast<std::size_t>(k)];
                for (std::size_t j = 0; j < dim; ++j) score += w[j] * x[j];
                const double shrink = 1.0 - lr * lambda;
                if (y * score < 1.0) {
                    for (std::size_t j = 0; j < dim; ++j) w[j] = shrink * w[j] + lr * y * x[j];
                    m.bias[static_cast<std::size_t>(k)] += lr * y;
                } else {
                    for (std::size_t j = 0; j < dim; ++j) w[j] = shrink * w[j];
                }
            }
        }
        const double obj = svm_objective(m, features, labels);
        if (obj > best_obj) {
            // Roll the epoch back so the recorded objective never increases;
            // later epochs retry with a smaller step.
            m.weights = snap_w;
            m.bias = snap_b;
        } else {
            best_obj = obj;
        }
        out.objective_trace.push_back(best_obj);
    }
    return out;
}

int predict(const SvmModel& model, const std::vector<double>& x) {
    model.validate();
    require(x.size() == static_cast<std::size_t>(model.dim), "predict: feature size mismatch");
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < model.num_classes; ++k) {
        const double* w = model.weights.data() + static_cast<std::size_t>(k) * model.dim;
        double score = model.bias[static_cast<std::size_t>(k)];
        for (int j = 0; j < model.dim; ++j) score += w[j] * x[static_cast<std::size_t>(j)];
        if (score > best_score) {  // strict: ties keep the lowest index
            best_score = score;
            best = k;
        }
    }
    return best;
}

EvalResult evaluate(const SvmModel& model, const std::vector<std::vector<double>>& features,
                    const std::vector<int>& labels) {
    model.validate();
    check_dataset(features, labels);
    EvalResult out;
    out.confusion.assign(static_cast<std::size_t>(model.num_classes),
                         std::vector<std::size_t>(static_cast<std::size_t>(model.num_classes), 0));
    std::size_t hits = 0;
    for (std::size_t l = 0; l < features.size(); ++l) {
        require(labels[l] < model.num_classes, "evaluate: label outside model classes");
        const int pred = predict(model, features[l]);
        out.confusion[static_cast<std::size_t>(labels[l])][static_cast<std::size_t>(pred)] += 1;
        if (pred == labels[l]) ++hits;
    }
    out.accuracy = static_cast<double>(hits) / static_cast<double>(features.size());
    out.confusion_normalized.assign(out.confusion.size(),
                                    std::vector<double>(out.confusion.size(), 0.0));
    for (std::size_t r = 0; r < out.confusion.size(); ++r) {
        const std::size_t row_total =
            std::accumulate(out.confusion[r].begin(), out.confusion[r].end(), std::size_t{0});
        if (row_total == 0) continue;
        for (std::size_t c = 0; c < out.confusion[r].size(); ++c)
            out.confusion_normalized[r][c] =
                static_cast<double>(out.confusion[r][c]) / static_cast<double>(row_total);
    }
    return out;
}

SeparabilityCertificate check_separability(const std::vector<std::vector<double>>& features,
                                           const std::vector<int>& binary_labels, double mu,
                                           const SvmOptions& opts) {
    check_dataset(features, binary_labels);
    require(mu >= 0.0, "check_separability: mu must be >= 0");
    for (int y : binary_labels) require(y == 0 || y == 1, "check_separability: labels must be 0/1");

    // Hard-margin surrogate: same trainer, one binary machine, near-zero
    // regularization.
    FitResult fr = fit_svm(features, binary_labels, opts);
    // Decision direction for class 1 vs class 0: w_1 - w_0, b_1 - b_0.
    const std::size_t dim = features[0].size();
    std::vector<double> w(dim);
    for (std::size_t j = 0; j < dim; ++j)
        w[j] = fr.model.weights[dim + j] - fr.model.weights[j];
    double b = fr.model.bias[1] - fr.model.bias[0];

    SeparabilityCertificate cert;
    double norm = 0.0;
    for (double v : w) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        // Degenerate separator (e.g. contradictory data): report an
        // arbitrary unit direction; the margin below will disqualify it.
        w[0] = 1.0;
        norm = 1.0;
        b = 0.0;
    }
    cert.normal.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) cert.normal[j] = w[j] / norm;
    cert.bias = b / norm;

    cert.margin = std::numeric_limits<double>::infinity();
    cert.radius = 0.0;
    for (std::size_t l = 0; l < features.size(); ++l) {
        const double y = binary_labels[l] == 1 ? 1.0 : -1.0;
        double score = cert.bias;
        double sq = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            score += cert.normal[j] * features[l][j];
            sq += features[l][j] * features[l][j];
        }
        cert.margin = std::min(cert.margin, y * score);
        cert.radius = std::max(cert.radius, std::sqrt(sq));
    }
    cert.separable = cert.margin >= mu;
    return cert;
}

void write_svml(const std::string& path, const SvmModel& model) {
    model.validate();
    std::vector<unsigned char> out;
    out.insert(out.end(), {'S', 'V', 'M', 'L'});
    le::put<std::uint16_t>(out, kSvmlVersion);
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(model.num_classes));
    le::put<std::uint32_t>(out, static_cast<std::uint32_t>(model.dim));
    le::put<double>(out, model.c_reg);
    for (double w : model.weights) le::put<double>(out, w);
    for (double b : model.bias) le::put<double>(out, b);
    le::put<std::uint64_t>(out, fnv1a64(out.data() + 4, out.size() - 4));
    write_file_bytes(path, out);
}

SvmModel read_svml(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    require(bytes.size() >= 4 + 2 + 4 + 4 + 8 + 8, "SVML file " + path + " truncated");
    require(bytes[0] == 'S' && bytes[1] == 'V' && bytes[2] == 'M' && bytes[3] == 'L',
            "not an SVML file: " + path);
    std::size_t off = 4;
    const auto version = le::get<std::uint16_t>(&bytes[off]);
    require(version == kSvmlVersion,
            "unsupported SVML version " + std::to_string(version) + " in " + path);
    off += 2;
    SvmModel m;
    m.num_classes = static_cast<int>(le::get<std::uint32_t>(&bytes[off]));
    m.dim = static_cast<int>(le::get<std::uint32_t>(&bytes[off + 4]));
    off += 8;
    m.c_reg = le::get<double>(&bytes[off]);
    off += 8;
    const std::size_t count =
        static_cast<std::size_t>(m.num_classes) * m.dim + static_cast<std::size_t>(m.num_classes);
    require(bytes.size() == off + count * 8 + 8, "SVML file " + path + " has wrong size");
    const auto stored = le::get<std::uint64_t>(&bytes[bytes.size() - 8]);
    require(stored == fnv1a64(bytes.data() + 4, bytes.size() - 12),
            "SVML file " + path + " failed checksum verification");
    m.weights.resize(static_cast<std::size_t>(m.num_classes) * m.dim);
    for (auto& w : m.weights) {
        w = le::get<double>(&bytes[off]);
        off += 8;
    }
    m.bias.resize(static_cast<std::size_t>(m.num_classes));
    for (auto& b : m.bias) {
        b = le::get<double>(&bytes[off]);
        off += 8;
    }
    m.validate();
    return m;
}

}  // namespace fediq
