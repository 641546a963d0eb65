#pragma once

// Self-supervised objective and local training loop.
//
// A training example is a triplet of windows: a reference window cut from one
// frame, a positive window contained inside the reference, and K negative
// windows of the positive's length cut from other frames. The loss rewards a
// large inner product between reference and positive features and penalizes
// large inner products with negative features:
//
//     L = softplus(-f_ref . f_pos) + sum_k softplus(f_ref . f_neg_k)
//
// (softplus(-z) = -log sigmoid(z), computed in its overflow-safe form).
// Local optimization is Adam on the mean loss of a triplet batch.

#include <vector>

#include "fediq/encoder.hpp"

namespace fediq {

// A window into a pool frame.
struct WindowRef {
    std::size_t frame = 0;
    int start = 0;
    int len = 0;
};

struct Triplet {
    WindowRef ref;
    WindowRef pos;
    std::vector<WindowRef> negs;
};

struct TripletOptions {
    int negatives = 10;  // K
    int min_window = 4;

    void validate() const;
};

// Draw one triplet. Draw order is fixed: reference frame, reference length
// U{min..T}, reference start, positive length U{min..ref_len}, positive
// start inside the reference, then per negative the frame (rejecting the
// reference frame and frames shorter than the positive window) and start.
Triplet sample_triplet(const std::vector<IqFrame>& pool, const TripletOptions& opts, Rng& rng);

struct TripletFeatureGrads {
    std::vector<double> ref;
    std::vector<double> pos;
    std::vector<std::vector<double>> negs;
};

// Loss on already-encoded features; optionally also the analytic gradients
// with respect to each feature vector.
double triplet_loss(const std::vector<double>& f_ref, const std::vector<double>& f_pos,
                    const std::vector<std::vector<double>>& f_negs,
                    TripletFeatureGrads* grads = nullptr);

// Loss of one triplet and its gradient with respect to the encoder
// parameters, accumulated into grad.
double triplet_param_grad(const EncoderParams& params, const KernelCache& cache,
                          const std::vector<IqFrame>& pool, const Triplet& triplet,
                          std::vector<double>& grad);

struct AdamState {
    std::vector<double> m;  // first-moment accumulator
    std::vector<double> v;  // second-moment accumulator
    long long step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate(std::size_t dim) const;
};

// One bias-corrected Adam step: params -= lr * mhat / (sqrt(vhat) + eps).
// Moment vectors are lazily sized on first use.
void adam_update(AdamState& state, std::vector<double>& params, const std::vector<double>& grad);

struct LocalTrainOptions {
    int steps = 2500;
    int batch = 20;
    TripletOptions triplet;

    void validate() const;
};

// Run `steps` Adam steps of batched triplet training on one unlabeled pool.
// Returns the per-step mean batch loss. Batch gradients accumulate in triplet
// order, so the run is bitwise reproducible from (params, pool, rng).
std::vector<double> local_train(EncoderParams& params, const std::vector<IqFrame>& pool,
                                const LocalTrainOptions& opts, AdamState& adam, Rng& rng);

}  // namespace fediq
