#include <cmath>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "fediq/classify.hpp"
#include "fediq/common.hpp"
#include "fediq/fileio.hpp"

using namespace fediq;

namespace {

// Four well-separated 2-D blobs, one per class.
void blobs(int per_class, std::uint64_t seed, std::vector<std::vector<double>>& x,
           std::vector<int>& y) {
    const double cx[4] = {10.0, -10.0, 10.0, -10.0};
    const double cy[4] = {10.0, 10.0, -10.0, -10.0};
    Rng rng(seed);
    for (int c = 0; c < 4; ++c)
        for (int i = 0; i < per_class; ++i) {
            x.push_back({cx[c] + 0.5 * rng.normal(), cy[c] + 0.5 * rng.normal()});
            y.push_back(c);
        }
}

}  // namespace

TEST_CASE("classify: distant blobs are classified almost perfectly") {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    blobs(40, 71, x, y);
    SvmOptions opts;
    opts.epochs = 100;
    const FitResult fit = fit_svm(x, y, opts);
    const EvalResult eval = evaluate(fit.model, x, y);
    CHECK(eval.accuracy >= 0.99);
    CHECK(fit.model.num_classes == 4);
    CHECK(fit.model.dim == 2);
}

TEST_CASE("classify: one-hot features are learned exactly") {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 10; ++i) {
            std::vector<double> v(3, 0.0);
            v[static_cast<std::size_t>(c)] = 1.0;
            x.push_back(v);
            y.push_back(c);
        }
    const FitResult fit = fit_svm(x, y, SvmOptions{});
    CHECK(evaluate(fit.model, x, y).accuracy == 1.0);
}

TEST_CASE("classify: the objective trace never increases") {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    blobs(25, 72, x, y);
    SvmOptions opts;
    opts.epochs = 60;
    const FitResult fit = fit_svm(x, y, opts);
    REQUIRE(fit.objective_trace.size() == 60);
    for (std::size_t i = 1; i < fit.objective_trace.size(); ++i)
        CHECK(fit.objective_trace[i] <= fit.objective_trace[i - 1] + 1e-12);
    // The recorded tail matches an independent objective evaluation.
    CHECK(fit.objective_trace.back() ==
          doctest::Approx(svm_objective(fit.model, x, y)).epsilon(1e-12));
}

TEST_CASE("classify: the objective uses the mean hinge, not the sum") {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    blobs(10, 73, x, y);
    const FitResult fit = fit_svm(x, y, SvmOptions{});
    std::vector<std::vector<double>> x2 = x;
    std::vector<int> y2 = y;
    x2.insert(x2.end(), x.begin(), x.end());
    y2.insert(y2.end(), y.begin(), y.end());
    CHECK(svm_objective(fit.model, x, y) ==
          doctest::Approx(svm_objective(fit.model, x2, y2)).epsilon(1e-12));
}

TEST_CASE("classify: prediction ties resolve to the lowest class") {
    SvmModel m;
    m.num_classes = 3;
    m.dim = 1;
    m.weights = {0.0, 0.0, 0.0};
    m.bias = {1.0, 1.0, 0.5};
    CHECK(predict(m, {123.0}) == 0);
    m.bias = {0.5, 1.0, 1.0};
    CHECK(predict(m, {123.0}) == 1);
}

TEST_CASE("classify: the hard-margin surrogate recovers the max-margin separator") {
    // Two points at x = -1 and x = +1: optimal margin 1, radius 1.
    const std::vector<std::vector<double>> x = {{-1.0, 0.0}, {1.0, 0.0}};
    const std::vector<int> y = {0, 1};
    SvmOptions opts;
    opts.c_reg = 1e6;
    opts.epochs = 400;
    const SeparabilityCertificate cert = check_separability(x, y, 0.5, opts);
    CHECK(cert.separable);
    CHECK(cert.radius == 1.0);
    double norm = 0.0;
    for (double v : cert.normal) norm += v * v;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(cert.margin >= 0.9);
    CHECK(cert.margin <= 1.0 + 1e-6);
    // The certificate margin is the worst case over the data.
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double side = y[i] == 1 ? 1.0 : -1.0;
        double score = cert.bias;
        for (std::size_t d = 0; d < x[i].size(); ++d) score += cert.normal[d] * x[i][d];
        CHECK(side * score >= cert.margin - 1e-12);
    }
}

TEST_CASE("classify: contradictory data is reported as non-separable") {
    const std::vector<std::vector<double>> x = {{1.0}, {1.0}};
    const std::vector<int> y = {0, 1};
    SvmOptions opts;
    opts.c_reg = 1e6;
    opts.epochs = 100;
    const SeparabilityCertificate cert = check_separability(x, y, 0.1, opts);
    CHECK_FALSE(cert.separable);
}

TEST_CASE("classify: separability requires binary 0/1 labels") {
    const std::vector<std::vector<double>> x = {{-1.0}, {1.0}};
    SvmOptions opts;
    CHECK_THROWS_AS(check_separability(x, {0, 2}, 0.1, opts), data_error);
    CHECK_THROWS_AS(check_separability(x, {-1, 1}, 0.1, opts), data_error);
}

TEST_CASE("classify: SVML model files round-trip bitwise and detect corruption") {
    std::filesystem::create_directories("tmp_unit");
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    blobs(15, 74, x, y);
    const FitResult fit = fit_svm(x, y, SvmOptions{});
    const std::string path = "tmp_unit/model.svml";
    write_svml(path, fit.model);
    const SvmModel back = read_svml(path);
    CHECK(back.num_classes == fit.model.num_classes);
    CHECK(back.dim == fit.model.dim);
    CHECK(back.weights == fit.model.weights);
    CHECK(back.bias == fit.model.bias);
    CHECK(back.c_reg == fit.model.c_reg);

    auto bytes = read_file_bytes(path);
    bytes[bytes.size() - 9] ^= 0x01;  // flip a payload bit under the checksum
    const std::string bad = "tmp_unit/model_bad.svml";
    write_file_bytes(bad, bytes);
    CHECK_THROWS_AS(read_svml(bad), data_error);
}

TEST_CASE("classify: evaluation fills a consistent confusion matrix") {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    blobs(20, 75, x, y);
    const FitResult fit = fit_svm(x, y, SvmOptions{});
    const EvalResult eval = evaluate(fit.model, x, y);
    REQUIRE(eval.confusion.size() == 4);
    std::size_t total = 0, diag = 0;
    for (std::size_t t = 0; t < 4; ++t) {
        REQUIRE(eval.confusion[t].size() == 4);
        std::size_t row = 0;
        double frac = 0.0;
        for (std::size_t p = 0; p < 4; ++p) {
            row += eval.confusion[t][p];
            frac += eval.confusion_normalized[t][p];
        }
        CHECK(row == 20);
        CHECK(frac == doctest::Approx(1.0).epsilon(1e-12));
        total += row;
        diag += eval.confusion[t][t];
    }
    CHECK(eval.accuracy == doctest::Approx(static_cast<double>(diag) /
                                           static_cast<double>(total)).epsilon(1e-12));
}

TEST_CASE("classify: training rejects degenerate inputs") {
    SvmOptions opts;
    CHECK_THROWS_AS(fit_svm({}, {}, opts), data_error);
    CHECK_THROWS_AS(fit_svm({{1.0}, {2.0}}, {0, 0}, opts), data_error);       // one class
    CHECK_THROWS_AS(fit_svm({{1.0}, {2.0, 3.0}}, {0, 1}, opts), data_error);  // ragged dims
    CHECK_THROWS_AS(fit_svm({{1.0}, {2.0}}, {0}, opts), data_error);          // count mismatch
    SvmOptions bad;
    bad.c_reg = 0.0;
    CHECK_THROWS_AS(bad.validate(), data_error);
    bad = SvmOptions{};
    bad.epochs = 0;
    CHECK_THROWS_AS(bad.validate(), data_error);
}

TEST_CASE("classify: refitting with the same options is bitwise reproducible") {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    blobs(12, 76, x, y);
    SvmOptions opts;
    opts.shuffle_seed = 5;
    const FitResult a = fit_svm(x, y, opts);
    const FitResult b = fit_svm(x, y, opts);
    CHECK(a.model.weights == b.model.weights);
    CHECK(a.model.bias == b.model.bias);
    CHECK(a.objective_trace == b.objective_trace);
}
