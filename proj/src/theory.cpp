#include "fediq/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fediq/common.hpp"

namespace fediq {
namespace theory {

namespace {

constexpr double kPi = 3.14159265358979323846;

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

// Mass of the standard normal on [-c, c].
double trunc_mass(double c) { return std::erf(c / std::sqrt(2.0)); }

void clamp_box(Mat& theta, double radius) {
    for (double& v : theta.a) v = std::clamp(v, -radius, radius);
}

double draw_truncated(Rng& rng, double c) {
    for (;;) {
        double z = rng.normal();
        if (std::fabs(z) <= c) return z;
    }
}

}  // namespace

double Mat::frobenius() const {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

void LinearModelSpec::validate() const {
    require(dim >= 1, "linear model: dim must be >= 1");
    require(radius > 0.0, "linear model: radius must be positive");
    require(reg >= 0.0, "linear model: reg must be nonnegative");
    require(power > 0.0, "linear model: power must be positive");
    require(moment_bound > 0.0, "linear model: moment_bound must be positive");
    require(snr > 0.0, "linear model: snr must be positive");
}

double linear_loss(const Mat& theta, const std::vector<double>& r, double reg) {
    require(theta.rows == theta.cols, "linear_loss: square parameter matrix expected");
    require(static_cast<int>(r.size()) == theta.cols, "linear_loss: input dimension mismatch");
    double quad = 0.0;
    for (int i = 0; i < theta.rows; ++i) {
        double y = 0.0;
        for (int j = 0; j < theta.cols; ++j) y += theta.at(i, j) * r[j];
        quad += y * y;
    }
    double frob = 0.0;
    for (double v : theta.a) frob += v * v;
    return -0.5 * quad + 0.5 * reg * frob;
}

void linear_grad_into(const Mat& theta, const std::vector<double>& r, double reg, Mat& out) {
    require(theta.rows == theta.cols, "linear_grad: square parameter matrix expected");
    require(static_cast<int>(r.size()) == theta.cols, "linear_grad: input dimension mismatch");
    out.rows = theta.rows;
    out.cols = theta.cols;
    out.a.assign(theta.a.size(), 0.0);
    for (int i = 0; i < theta.rows; ++i) {
        double y = 0.0;
        for (int j = 0; j < theta.cols; ++j) y += theta.at(i, j) * r[j];
        for (int j = 0; j < theta.cols; ++j)
            out.at(i, j) = -y * r[j] + reg * theta.at(i, j);
    }
}

Mat linear_grad(const Mat& theta, const std::vector<double>& r, double reg) {
    Mat g;
    linear_grad_into(theta, r, reg, g);
    return g;
}

double project_grad(Mat& g, double radius) {
    require(radius > 0.0, "project_grad: radius must be positive");
    double n = g.frobenius();
    if (n <= radius) return 0.0;
    double scale = radius / n;
    for (double& v : g.a) v *= scale;
    return n - radius;
}

double trunc_normal_variance(double c) {
    require(c > 0.0, "truncation level must be positive");
    return 1.0 - 2.0 * c * std_normal_pdf(c) / trunc_mass(c);
}

double trunc_normal_fourth(double c) {
    require(c > 0.0, "truncation level must be positive");
    // E[z^4] = 3 E[z^2] - 2 c^3 phi(c)/Z from integration by parts.
    return 3.0 * trunc_normal_variance(c) - 2.0 * c * c * c * std_normal_pdf(c) / trunc_mass(c);
}

double implied_moment_bound(double power, double trunc_c) {
    require(power > 0.0, "power must be positive");
    double vt = trunc_normal_variance(trunc_c);
    double mu4 = trunc_normal_fourth(trunc_c) * (power / vt) * (power / vt);
    // Odd moments vanish; the nonzero absolute moments up to order 4 are
    // E[x^0] = 1, E[x^2] = power, E[x^4] = mu4.
    const double vals[3] = {1.0, power, mu4};
    double best = 0.0;
    for (int q = 0; q < 3; ++q)
        for (int s = 0; s < 3; ++s)
            for (int v = 0; v < 3; ++v) {
                if (q == 0 && s == 0 && v == 0) continue;
                best = std::max(best, vals[q] * vals[s] * vals[v]);
            }
    return best;
}

double lemma1_bound(const LinearModelSpec& spec) {
    spec.validate();
    double m = static_cast<double>(spec.dim);
    double r2 = spec.radius * spec.radius;
    double b = spec.moment_bound;
    double p = spec.power;
    double gi = 1.0 / spec.snr;
    double lam = spec.reg;
    double g1 = (m - 1.0) * r2 * (3.0 * b + 2.0 * gi * b * p + gi * p * p + gi * gi * p * p);
    double g2 = r2 * (b + 6.0 * gi * p * p + 3.0 * gi * gi * p * p);
    double g3 = (m - 1.0) * (m - 2.0) * r2 * b * (1.0 + gi * p);
    double g4 = 2.0 * lam * r2 * ((m - 1.0) * b + p + gi * p);
    double g5 = lam * lam * r2;
    return g1 + g2 + g3 + g4 + g5;
}

double lemma1_bound_simplified(const LinearModelSpec& spec) {
    spec.validate();
    double m = static_cast<double>(spec.dim);
    return m * m * spec.radius * spec.radius * spec.moment_bound;
}

void MomentAccumulator::add(double x) {
    long long n1 = n;
    n += 1;
    double delta = x - mean;
    double delta_n = delta / static_cast<double>(n);
    double delta_n2 = delta_n * delta_n;
    double term1 = delta * delta_n * static_cast<double>(n1);
    mean += delta_n;
    m4 += term1 * delta_n2 * static_cast<double>(n * n - 3 * n + 3) + 6.0 * delta_n2 * m2 -
          4.0 * delta_n * m3;
    m3 += term1 * delta_n * static_cast<double>(n - 2) - 3.0 * delta_n * m2;
    m2 += term1;
}

double MomentAccumulator::variance() const {
    require(n >= 2, "variance needs at least two samples");
    return m2 / static_cast<double>(n - 1);
}

double MomentAccumulator::variance_se() const {
    require(n >= 2, "variance needs at least two samples");
    double nn = static_cast<double>(n);
    double s2 = variance();
    double m4c = m4 / nn;
    // Var(s^2) = (1/n)(mu4 - s^4 (n-3)/(n-1)), distribution-free.
    double v = (m4c - s2 * s2 * (nn - 3.0) / (nn - 1.0)) / nn;
    return v > 0.0 ? std::sqrt(v) : 0.0;
}

VarianceEstimate mc_gradient_variance(const LinearModelSpec& spec, const Mat& theta,
                                      long long samples, double trunc_c, Rng& rng) {
    spec.validate();
    require(samples >= 2, "mc_gradient_variance: need at least two samples");
    require(theta.rows == spec.dim && theta.cols == spec.dim,
            "mc_gradient_variance: theta dimension mismatch");
    int m = spec.dim;
    double scale = std::sqrt(spec.power / trunc_normal_variance(trunc_c));
    double noise_sd = std::sqrt(spec.noise_var());
    std::vector<MomentAccumulator> acc(static_cast<std::size_t>(m) * m);
    std::vector<double> r(static_cast<std::size_t>(m));
    Mat g;
    for (long long s = 0; s < samples; ++s) {
        for (int i = 0; i < m; ++i) r[static_cast<std::size_t>(i)] = scale * draw_truncated(rng, trunc_c);
        for (int i = 0; i < m; ++i) r[static_cast<std::size_t>(i)] += noise_sd * rng.normal();
        linear_grad_into(theta, r, spec.reg, g);
        for (std::size_t k = 0; k < g.a.size(); ++k) acc[k].add(g.a[k]);
    }
    VarianceEstimate est;
    est.variance = Mat(m, m);
    est.se = Mat(m, m);
    for (std::size_t k = 0; k < acc.size(); ++k) {
        est.variance.a[k] = acc[k].variance();
        est.se.a[k] = acc[k].variance_se();
        est.max_variance = std::max(est.max_variance, est.variance.a[k]);
        est.max_se = std::max(est.max_se, est.se.a[k]);
    }
    return est;
}

Lemma1Check lemma1_verify(const LinearModelSpec& spec, long long samples, double trunc_c,
                          std::uint64_t seed) {
    Lemma1Check check;
    check.spec = spec;
    check.spec.moment_bound = implied_moment_bound(spec.power, trunc_c);
    check.bound = lemma1_bound(check.spec);
    Rng rng_theta = Rng::derive(seed, {stream::kTheory, 1});
    Mat theta(spec.dim, spec.dim);
    for (double& v : theta.a) v = (2.0 * rng_theta.uniform01() - 1.0) * spec.radius;
    Rng rng_mc = Rng::derive(seed, {stream::kTheory, 2});
    VarianceEstimate est = mc_gradient_variance(check.spec, theta, samples, trunc_c, rng_mc);
    check.max_variance = est.max_variance;
    check.max_se = est.max_se;
    check.pass = true;
    check.worst_margin = -1.0;
    for (std::size_t k = 0; k < est.variance.a.size(); ++k) {
        double var = est.variance.a[k];
        double se = est.se.a[k];
        if (var > check.bound + 3.0 * se) check.pass = false;
        check.worst_margin = std::max(check.worst_margin, (var - check.bound) / check.bound);
    }
    return check;
}

void SmoothedSgdConfig::validate() const {
    spec.validate();
    require(clients >= 1, "smoothed sgd: clients must be >= 1");
    require(window >= 1, "smoothed sgd: window must be >= 1");
    require(kappa > 0.0 && kappa <= 1.0, "smoothed sgd: kappa must be in (0, 1]");
    require(eta >= 0.0, "smoothed sgd: eta must be nonnegative");
    require(grad_radius >= 0.0, "smoothed sgd: grad_radius must be nonnegative");
}

double analytic_beta(const LinearModelSpec& spec) {
    spec.validate();
    return spec.dim * (spec.power + spec.noise_var()) + spec.reg;
}

double default_grad_radius(const LinearModelSpec& spec) {
    spec.validate();
    return 3.0 * spec.dim * spec.radius * (spec.power + spec.noise_var());
}

SmoothedSgdState make_smoothed_sgd(const SmoothedSgdConfig& cfg, const Mat& theta0) {
    cfg.validate();
    require(theta0.rows == cfg.spec.dim && theta0.cols == cfg.spec.dim,
            "smoothed sgd: theta0 dimension mismatch");
    SmoothedSgdState state;
    state.cfg = cfg;
    if (state.cfg.eta == 0.0) state.cfg.eta = 1.0 / analytic_beta(cfg.spec);
    if (state.cfg.grad_radius == 0.0) state.cfg.grad_radius = default_grad_radius(cfg.spec);
    state.theta = theta0;
    clamp_box(state.theta, cfg.spec.radius);
    return state;
}

void smoothed_step(SmoothedSgdState& state, const std::vector<std::vector<double>>& inputs) {
    const SmoothedSgdConfig& cfg = state.cfg;
    require(static_cast<int>(inputs.size()) == cfg.clients,
            "smoothed_step: one input per client expected");
    StepRecord rec;
    rec.theta = state.theta;
    rec.grads.reserve(inputs.size());
    rec.proj_grads.reserve(inputs.size());
    rec.losses.reserve(inputs.size());
    for (const std::vector<double>& r : inputs) {
        double loss = linear_loss(state.theta, r, cfg.spec.reg);
        state.max_abs_loss = std::max(state.max_abs_loss, std::fabs(loss));
        rec.losses.push_back(loss);
        Mat g = linear_grad(state.theta, r, cfg.spec.reg);
        Mat pg = g;
        double overage = project_grad(pg, cfg.grad_radius);
        state.eps_grad = std::max(state.eps_grad, overage);
        rec.grads.push_back(std::move(g));
        rec.proj_grads.push_back(std::move(pg));
    }
    state.buffer.push_back(std::move(rec));
    if (static_cast<int>(state.buffer.size()) > cfg.window) state.buffer.pop_front();
    state.t += 1;

    RegretRecord reg = regret_track(state);
    state.sum_grad_sq += reg.grad_norm_sq;

    // Partial normalizer while the window is still filling.
    std::size_t len = state.buffer.size();
    double wp = 0.0;
    double kpow = 1.0;
    for (std::size_t j = 0; j < len; ++j) {
        wp += kpow;
        kpow *= cfg.kappa;
    }
    int m = cfg.spec.dim;
    Mat next(m, m);
    for (int c = 0; c < cfg.clients; ++c) {
        Mat local = state.theta;
        kpow = 1.0;
        for (std::size_t j = 0; j < len; ++j) {
            const Mat& pg = state.buffer[len - 1 - j].proj_grads[static_cast<std::size_t>(c)];
            double coef = cfg.eta * kpow / wp;
            for (std::size_t k = 0; k < local.a.size(); ++k) local.a[k] -= coef * pg.a[k];
            kpow *= cfg.kappa;
        }
        for (std::size_t k = 0; k < next.a.size(); ++k) next.a[k] += local.a[k];
    }
    for (double& v : next.a) v /= static_cast<double>(cfg.clients);
    double displacement = 0.0;
    for (double& v : next.a) {
        double clamped = std::clamp(v, -cfg.spec.radius, cfg.spec.radius);
        displacement += (v - clamped) * (v - clamped);
        v = clamped;
    }
    state.eps_clamp = std::max(state.eps_clamp, std::sqrt(displacement));
    state.theta = std::move(next);
}

RegretRecord regret_track(const SmoothedSgdState& state) {
    require(!state.buffer.empty(), "regret_track: no steps taken yet");
    const SmoothedSgdConfig& cfg = state.cfg;
    std::size_t len = state.buffer.size();
    double wp = 0.0;
    double kpow = 1.0;
    for (std::size_t j = 0; j < len; ++j) {
        wp += kpow;
        kpow *= cfg.kappa;
    }
    RegretRecord out;
    out.regret_clients.assign(static_cast<std::size_t>(cfg.clients), 0.0);
    Mat gsum(cfg.spec.dim, cfg.spec.dim);
    for (int c = 0; c < cfg.clients; ++c) {
        kpow = 1.0;
        double s = 0.0;
        for (std::size_t j = 0; j < len; ++j) {
            const StepRecord& rec = state.buffer[len - 1 - j];
            s += kpow * rec.losses[static_cast<std::size_t>(c)];
            const Mat& g = rec.grads[static_cast<std::size_t>(c)];
            for (std::size_t k = 0; k < gsum.a.size(); ++k) gsum.a[k] += kpow * g.a[k];
            kpow *= cfg.kappa;
        }
        out.regret_clients[static_cast<std::size_t>(c)] = s / wp;
        out.regret_global += s / wp;
    }
    out.regret_global /= static_cast<double>(cfg.clients);
    double norm = cfg.clients * wp;
    double nsq = 0.0;
    for (double v : gsum.a) nsq += (v / norm) * (v / norm);
    out.grad_norm_sq = nsq;
    return out;
}

Theorem1Bound theorem1_bound(double beta, double loss_bound, double weight_norm,
                             const LinearModelSpec& spec, double eps) {
    spec.validate();
    require(beta > 0.0, "theorem1_bound: beta must be positive");
    require(loss_bound >= 0.0, "theorem1_bound: loss bound must be nonnegative");
    require(weight_norm > 0.0, "theorem1_bound: weight norm must be positive");
    require(eps >= 0.0, "theorem1_bound: eps must be nonnegative");
    Theorem1Bound b;
    b.full = 64.0 * beta * loss_bound / weight_norm + 2.0 / weight_norm * lemma1_bound(spec) +
             0.625 * eps * eps;
    double m = static_cast<double>(spec.dim);
    b.simplified = (64.0 * beta * loss_bound +
                    2.0 * m * m * spec.radius * spec.radius * spec.moment_bound) /
                       weight_norm +
                   0.625 * eps * eps;
    return b;
}

Theorem1Check theorem1_verify(const LinearModelSpec& spec, int clients, int steps, int window,
                              double kappa, double trunc_c, std::uint64_t seed) {
    require(steps >= 1, "theorem1_verify: steps must be >= 1");
    SmoothedSgdConfig cfg;
    cfg.spec = spec;
    cfg.spec.moment_bound = implied_moment_bound(spec.power, trunc_c);
    cfg.clients = clients;
    cfg.window = window;
    cfg.kappa = kappa;
    cfg.validate();

    Rng rng_theta = Rng::derive(seed, {stream::kTheory, 10});
    Mat theta0(spec.dim, spec.dim);
    for (double& v : theta0.a) v = (2.0 * rng_theta.uniform01() - 1.0) * spec.radius;
    SmoothedSgdState state = make_smoothed_sgd(cfg, theta0);

    Rng rng_data = Rng::derive(seed, {stream::kTheory, 11});
    double scale = std::sqrt(spec.power / trunc_normal_variance(trunc_c));
    double noise_sd = std::sqrt(spec.noise_var());
    std::vector<std::vector<double>> inputs(static_cast<std::size_t>(clients),
                                            std::vector<double>(static_cast<std::size_t>(spec.dim)));
    for (int t = 0; t < steps; ++t) {
        for (std::vector<double>& r : inputs) {
            for (double& v : r) v = scale * draw_truncated(rng_data, trunc_c);
            for (double& v : r) v += noise_sd * rng_data.normal();
        }
        smoothed_step(state, inputs);
    }

    Theorem1Check check;
    check.cfg = state.cfg;
    check.beta = analytic_beta(cfg.spec);
    check.eta = state.cfg.eta;
    double w = 0.0;
    double kpow = 1.0;
    for (int j = 0; j < window; ++j) {
        w += kpow;
        kpow *= kappa;
    }
    check.weight_norm = w;
    check.measured_avg = state.sum_grad_sq / static_cast<double>(steps);
    check.measured_loss_max = state.max_abs_loss;
    check.eps_grad = state.eps_grad;
    check.eps_clamp = state.eps_clamp;
    check.eps_used = state.eps_grad;
    check.bound = theorem1_bound(check.beta, check.measured_loss_max, w, cfg.spec, check.eps_used);
    check.pass = check.measured_avg <= check.bound.full;
    return check;
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

Theorem2Bound theorem2_prob_bound(const std::vector<double>& margins, double mu, double rho,
                                  double gamma_enc) {
    require(!margins.empty(), "theorem2_prob_bound: empty margin list");
    require(rho > 0.0, "theorem2_prob_bound: rho must be positive");
    require(gamma_enc > 0.0, "theorem2_prob_bound: gamma_enc must be positive");
    double s = std::sqrt(rho / gamma_enc);
    auto factor = [&](double slack) {
        double arg;
        if (s == 0.0)
            arg = slack > 0.0 ? HUGE_VAL : (slack < 0.0 ? -HUGE_VAL : 0.0);
        else
            arg = slack / s;
        return 1.0 - q_function(arg);
    };
    Theorem2Bound b;
    b.product = 1.0;
    double min_slack = HUGE_VAL;
    for (double m : margins) {
        double slack = m - mu;
        min_slack = std::min(min_slack, slack);
        b.product *= factor(slack);
    }
    b.collapsed = std::pow(factor(min_slack), static_cast<double>(margins.size()));
    b.product = std::clamp(b.product, 0.0, 1.0);
    b.collapsed = std::clamp(b.collapsed, 0.0, 1.0);
    return b;
}

SeparabilityMc mc_separability(const std::vector<std::vector<double>>& features,
                               const std::vector<int>& binary_labels,
                               const std::vector<double>& unit_normal, double bias, double mu,
                               double rho, double gamma_enc, long long trials, Rng& rng) {
    require(!features.empty(), "mc_separability: empty feature set");
    require(features.size() == binary_labels.size(), "mc_separability: feature/label count mismatch");
    require(rho > 0.0, "mc_separability: rho must be positive");
    require(gamma_enc > 0.0, "mc_separability: gamma_enc must be positive");
    require(trials >= 1, "mc_separability: trials must be >= 1");
    double norm_sq = 0.0;
    for (double v : unit_normal) norm_sq += v * v;
    require(std::fabs(norm_sq - 1.0) < 1e-6, "mc_separability: separator must be unit length");

    std::vector<double> slack(features.size());
    for (std::size_t l = 0; l < features.size(); ++l) {
        require(features[l].size() == unit_normal.size(),
                "mc_separability: feature dimension mismatch");
        int lab = binary_labels[l];
        require(lab == 0 || lab == 1, "mc_separability: labels must be 0 or 1");
        double y = lab == 1 ? 1.0 : -1.0;
        double score = bias;
        for (std::size_t k = 0; k < unit_normal.size(); ++k) score += unit_normal[k] * features[l][k];
        double margin = y * score;
        require(margin >= mu - 1e-9, "mc_separability: input certificate violates the margin");
        slack[l] = margin - mu;
    }

    // Only the noise projection onto the unit separator shifts the margin,
    // and that projection is N(0, rho/gamma_enc) regardless of the label
    // sign, so one scalar draw per point suffices.
    double sd = std::sqrt(rho / gamma_enc);
    long long ok = 0;
    for (long long t = 0; t < trials; ++t) {
        bool all = true;
        for (std::size_t l = 0; l < slack.size(); ++l) {
            double shifted = slack[l] + sd * rng.normal();
            if (shifted < 0.0) all = false;
        }
        if (all) ok += 1;
    }
    SeparabilityMc out;
    out.frequency = static_cast<double>(ok) / static_cast<double>(trials);
    out.se = std::sqrt(out.frequency * (1.0 - out.frequency) / static_cast<double>(trials));
    return out;
}

}  // namespace theory
}  // namespace fediq
