#pragma once

// Per-client linear classification on frozen encoder features.
//
// One-vs-rest L2-regularized hinge loss, trained by deterministic epoch-wise
// subgradient descent with a fixed shuffling seed. The objective per class
// machine is
//
//     J(w, b) = ||w||^2 / (2 c_reg) + mean_l max(0, 1 - y_l (w . x_l + b))
//
// (mean, not sum, so duplicating the training set leaves the objective
// unchanged). After every epoch the full objective is evaluated; an epoch
// that would increase it is rolled back, which makes the recorded objective
// trace non-increasing. A large c_reg (1e6) turns the same trainer into the
// hard-margin surrogate used for separability certificates.

#include <cstdint>
#include <string>
#include <vector>

#include "fediq/rng.hpp"

namespace fediq {

struct SvmOptions {
    double c_reg = 1.0;
    int epochs = 200;
    std::uint64_t shuffle_seed = 0;

    void validate() const;
};

struct SvmModel {
    int num_classes = 0;
    int dim = 0;
    std::vector<double> weights;  // [num_classes][dim], row-major
    std::vector<double> bias;     // [num_classes]
    double c_reg = 1.0;
    int epochs = 0;

    void validate() const;
};

struct FitResult {
    SvmModel model;
    std::vector<double> objective_trace;  // one entry per epoch, non-increasing
};

// Train one-vs-rest machines for labels 0..num_classes-1. Throws if fewer
// than two distinct labels are present.
FitResult fit_svm(const std::vector<std::vector<double>>& features,
                  const std::vector<int>& labels, const SvmOptions& opts);

// argmax_k (w_k . x + b_k); ties resolve to the lowest class index.
int predict(const SvmModel& model, const std::vector<double>& x);

// Full one-vs-rest objective at the given parameters (sum over machines).
double svm_objective(const SvmModel& model, const std::vector<std::vector<double>>& features,
                     const std::vector<int>& labels);

struct EvalResult {
    double accuracy = 0.0;
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
    std::vector<std::vector<double>> confusion_normalized;  // rows sum to 1
};

EvalResult evaluate(const SvmModel& model, const std::vector<std::vector<double>>& features,
                    const std::vector<int>& labels);

// Margin-based separability certificate for binary labels (+-1): a
// unit-norm separator (theta, b) from the hard-margin surrogate, the
// realized minimum margin mu_hat = min_l y_l (theta . x_l + b), and the
// realized radius rho_hat = max_l ||x_l||. The data is (mu, rho)-separable
// in the certified sense iff mu_hat >= mu and rho_hat <= rho.
struct SeparabilityCertificate {
    std::vector<double> normal;  // unit l2 norm
    double bias = 0.0;
    double margin = 0.0;  // mu_hat
    double radius = 0.0;  // rho_hat
    bool separable = false;
};

SeparabilityCertificate check_separability(const std::vector<std::vector<double>>& features,
                                           const std::vector<int>& binary_labels, double mu,
                                           const SvmOptions& opts);

// SVML v1 model file: magic "SVML", u16 version, u32 num_classes, u32 dim,
// f64 c_reg, then weights row-major and biases, all little-endian f64, with
// a trailing u64 FNV-1a checksum over everything after the magic.
void write_svml(const std::string& path, const SvmModel& model);
SvmModel read_svml(const std::string& path);

}  // namespace fediq
