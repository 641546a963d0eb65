#pragma once

// Numerical verification of the convergence and separability theory on the
// analytically tractable linear model.
//
// The model: parameters Theta (m x m, entries clamped to [-R, R]), inputs
// r = x + noise with i.i.d. signal entries of power P (truncated Gaussian,
// so all moments exist and are computable) and Gaussian noise of variance
// P/gamma. Stochastic loss and gradient:
//
//     f(Theta; r)  = -1/2 r' Theta' Theta r + (lambda/2) tr(Theta' Theta)
//     grad         = -Theta r r' + lambda Theta
//
// Three closed forms are checked against Monte Carlo / measured runs:
//   * a per-entry gradient-variance bound (five dominance groups),
//   * a regret-gradient bound for projected time-smoothed SGD,
//   * a lower bound on the probability that a margin-separable feature set
//     stays separable under Gaussian feature noise.

#include <deque>
#include <vector>

#include "fediq/rng.hpp"

namespace fediq {
namespace theory {

// Dense row-major matrix, just large enough for this module.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}
    double& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
    double frobenius() const;
};

struct LinearModelSpec {
    int dim = 4;                // m
    double radius = 1.0;        // R, entrywise parameter bound
    double reg = 0.0;           // lambda
    double power = 1.0;         // P = E[x_i^2]
    double moment_bound = 2.0;  // B, bound on all cross moments up to order 4
    double snr = 1.0;           // gamma; noise variance is P/gamma

    double noise_var() const { return power / snr; }
    void validate() const;
};

double linear_loss(const Mat& theta, const std::vector<double>& r, double reg);
Mat linear_grad(const Mat& theta, const std::vector<double>& r, double reg);
void linear_grad_into(const Mat& theta, const std::vector<double>& r, double reg, Mat& out);

// Project g onto the Frobenius ball of the given radius. Returns the
// projection error ||g|| - radius when the ball was exceeded, else 0.
double project_grad(Mat& g, double radius);

// Moments of the standard normal truncated to [-c, c].
double trunc_normal_variance(double c);
double trunc_normal_fourth(double c);

// The smallest admissible cross-moment bound B for i.i.d. signal entries
// drawn as scaled truncated normals with E[x^2] = power: the maximum of
// |E[x^q] E[x^s] E[x^v]| over exponents q, s, v <= 4 (not all zero).
double implied_moment_bound(double power, double trunc_c);

// Closed-form per-entry second-moment bound on the stochastic gradient
// (five dominance groups), and its high-SNR / no-regularization limit
// m^2 R^2 B.
double lemma1_bound(const LinearModelSpec& spec);
double lemma1_bound_simplified(const LinearModelSpec& spec);

// Per-entry Welford accumulator tracking central moments up to order 4, so
// the sample variance comes with a distribution-free standard error.
struct MomentAccumulator {
    long long n = 0;
    double mean = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;

    void add(double x);
    double variance() const;
    double variance_se() const;
};

struct VarianceEstimate {
    Mat variance;      // per-entry sample variance of the stochastic gradient
    Mat se;            // per-entry standard error of that variance estimate
    double max_variance = 0.0;
    double max_se = 0.0;
};

// Estimate the per-entry gradient variance at a fixed admissible Theta by
// sampling r = x + noise. Signal entries are truncated normals (|z| <=
// trunc_c before scaling); spec.moment_bound should be
// implied_moment_bound(spec.power, trunc_c) for a sound comparison.
VarianceEstimate mc_gradient_variance(const LinearModelSpec& spec, const Mat& theta,
                                      long long samples, double trunc_c, Rng& rng);

struct Lemma1Check {
    LinearModelSpec spec;
    double bound = 0.0;
    double max_variance = 0.0;
    double max_se = 0.0;
    // max over entries of (variance - bound) / bound; negative when the
    // bound dominates everywhere.
    double worst_margin = 0.0;
    bool pass = false;  // every entry: variance <= bound + 3 se
};

// Variance bound check at a random admissible Theta (entries U(-R, R)).
Lemma1Check lemma1_verify(const LinearModelSpec& spec, long long samples, double trunc_c,
                          std::uint64_t seed);

// ---- Projected time-smoothed SGD ----

struct SmoothedSgdConfig {
    LinearModelSpec spec;
    int clients = 1;
    int window = 1;      // w
    double kappa = 1.0;  // forgetting factor in (0, 1]
    double eta = 0.0;    // step size; 0 selects 1/beta with analytic beta
    double grad_radius = 0.0;  // gradient projection radius; 0 selects 3 m R (P + sigma^2)

    void validate() const;
};

// Smoothness constant of the expected clamped quadratic:
// beta = m (P + sigma^2) + lambda.
double analytic_beta(const LinearModelSpec& spec);
double default_grad_radius(const LinearModelSpec& spec);

struct StepRecord {
    Mat theta;                   // iterate the gradients were evaluated at
    std::vector<Mat> grads;      // raw per-client gradients
    std::vector<Mat> proj_grads; // projected gradients
    std::vector<double> losses;  // per-client stochastic losses
};

struct SmoothedSgdState {
    SmoothedSgdConfig cfg;
    Mat theta;
    std::deque<StepRecord> buffer;  // newest at the back, size <= window
    long long t = 0;                // completed steps
    double eps_grad = 0.0;          // max gradient projection error
    double eps_clamp = 0.0;         // max iterate clamp displacement
    double max_abs_loss = 0.0;      // running max |f|, the measured M
    double sum_grad_sq = 0.0;       // sum over steps of ||grad S||_F^2
};

SmoothedSgdState make_smoothed_sgd(const SmoothedSgdConfig& cfg, const Mat& theta0);

// One step: evaluate per-client losses/gradients at the current iterate,
// push them into the window, update each client with the kappa-weighted
// average of its buffered projected gradients (normalized by the partial
// weight sum while the buffer fills), average clients, clamp to [-R, R].
void smoothed_step(SmoothedSgdState& state, const std::vector<std::vector<double>>& inputs);

struct RegretRecord {
    double regret_global = 0.0;            // mean over clients of S_{t,w,kappa,c}
    std::vector<double> regret_clients;
    double grad_norm_sq = 0.0;             // ||grad S||_F^2 at the current window
};

// Time-smoothed regret and its gradient over the current buffer contents.
// Throws if no step has been taken yet.
RegretRecord regret_track(const SmoothedSgdState& state);

struct Theorem1Bound {
    double full = 0.0;        // 64 beta M / W + (2/W) lemma1 + (5/8) eps^2
    double simplified = 0.0;  // (64 beta M + 2 m^2 R^2 B) / W + (5/8) eps^2
};

// W is the full window normalizer sum_{j<w} kappa^j; eps bounds the
// gradient projection error (the bound adds (5/8) eps^2).
Theorem1Bound theorem1_bound(double beta, double loss_bound, double weight_norm,
                             const LinearModelSpec& spec, double eps);

struct Theorem1Check {
    SmoothedSgdConfig cfg;
    double beta = 0.0;
    double eta = 0.0;
    double weight_norm = 0.0;       // W
    double measured_avg = 0.0;      // (1/T) sum_t ||grad S||^2
    double measured_loss_max = 0.0; // M
    double eps_grad = 0.0;
    double eps_clamp = 0.0;
    double eps_used = 0.0;          // max projection overage, the theorem's eps
    Theorem1Bound bound;
    bool pass = false;              // measured_avg <= bound.full
};

// Run `steps` iterations from a random admissible start and compare the
// measured average squared regret-gradient norm against the closed form.
Theorem1Check theorem1_verify(const LinearModelSpec& spec, int clients, int steps, int window,
                              double kappa, double trunc_c, std::uint64_t seed);

// ---- Separability under feature noise ----

// Gaussian upper tail Q(x) = P(N(0,1) > x) via erfc.
double q_function(double x);

struct Theorem2Bound {
    double collapsed = 0.0;  // (1 - Q(min slack / s))^L, s = sqrt(rho/gamma)
    double product = 0.0;    // prod_l (1 - Q(slack_l / s))
};

// margins[l] = y_l (theta* . x_l + b*). Slack is margin - mu; both forms are
// clamped into [0, 1].
Theorem2Bound theorem2_prob_bound(const std::vector<double>& margins, double mu, double rho,
                                  double gamma_enc);

struct SeparabilityMc {
    double frequency = 0.0;
    double se = 0.0;
};

// Empirical probability that all points keep margin >= mu when i.i.d.
// N(0, (rho/gamma) I) noise is added to each feature vector. Only the noise
// projection onto the unit separator matters, so each trial draws one
// N(0, rho/gamma) scalar per point.
SeparabilityMc mc_separability(const std::vector<std::vector<double>>& features,
                               const std::vector<int>& binary_labels,
                               const std::vector<double>& unit_normal, double bias, double mu,
                               double rho, double gamma_enc, long long trials, Rng& rng);

}  // namespace theory
}  // namespace fediq
