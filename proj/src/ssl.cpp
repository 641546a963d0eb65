#include "fediq/ssl.hpp"

#include <cmath>

namespace fediq {

namespace {

// Overflow-safe softplus(z) = log(1 + exp(z)).
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace

void TripletOptions::validate() const {
    require(negatives >= 1, "triplet: need at least one negative");
    require(min_window >= 1, "triplet: min_window must be >= 1");
}

Triplet sample_triplet(const std::vector<IqFrame>& pool, const TripletOptions& opts, Rng& rng) {
    opts.validate();
    require(pool.size() >= 2, "sample_triplet: pool needs at least two frames");

    Triplet t;
    t.ref.frame = rng.uniform_int(pool.size());
    const int T = static_cast<int>(pool[t.ref.frame].samples.size());
    require(T >= opts.min_window, "sample_triplet: frame shorter than min_window");

    t.ref.len = opts.min_window +
                static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(T - opts.min_window + 1)));
    t.ref.start = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(T - t.ref.len + 1)));

    t.pos.frame = t.ref.frame;
    t.pos.len = opts.min_window + static_cast<int>(rng.uniform_int(
                                      static_cast<std::uint64_t>(t.ref.len - opts.min_window + 1)));
    t.pos.start = t.ref.start + static_cast<int>(rng.uniform_int(
                                    static_cast<std::uint64_t>(t.ref.len - t.pos.len + 1)));

    t.negs.resize(static_cast<std::size_t>(opts.negatives));
    for (auto& neg : t.negs) {
        const std::size_t cap = 16 + 10 * pool.size();
        std::size_t tries = 0;
        std::size_t j;
        int tj;
        do {
            require(tries++ < cap,
                    "sample_triplet: no frame other than the reference can host a window of "
                    "length " +
                        std::to_string(t.pos.len));
            j = rng.uniform_int(pool.size());
            tj = static_cast<int>(pool[j].samples.size());
        } while (j == t.ref.frame || tj < t.pos.len);
        neg.frame = j;
        neg.len = t.pos.len;
        neg.start = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(tj - t.pos.len + 1)));
    }
    return t;
}

double triplet_loss(const std::vector<double>& f_ref, const std::vector<double>& f_pos,
                    const std::vector<std::vector<double>>& f_negs, TripletFeatureGrads* grads) {
    require(f_ref.size() == f_pos.size() && !f_ref.empty(),
            "triplet_loss: ref/pos feature size mismatch");
    require(!f_negs.empty(), "triplet_loss: no negative features");
    for (const auto& fn : f_negs)
        require(fn.size() == f_ref.size(), "triplet_loss: negative feature size mismatch");

    const double d_pos = dot(f_ref, f_pos);
    double loss = softplus(-d_pos);

    if (grads) {
        grads->ref.assign(f_ref.size(), 0.0);
        grads->pos.assign(f_ref.size(), 0.0);
        grads->negs.assign(f_negs.size(), std::vector<double>(f_ref.size(), 0.0));
        const double a = sigmoid(-d_pos);  // d softplus(-z)/dz = -sigmoid(-z)
        for (std::size_t i = 0; i < f_ref.size(); ++i) {
            grads->pos[i] = -a * f_ref[i];
            grads->ref[i] = -a * f_pos[i];
        }
    }

    for (std::size_t k = 0; k < f_negs.size(); ++k) {
        const double d_neg = dot(f_ref, f_negs[k]);
        loss += softplus(d_neg);
        if (grads) {
            const double s = sigmoid(d_neg);
            for (std::size_t i = 0; i < f_ref.size(); ++i) {
                grads->negs[k][i] = s * f_ref[i];
                grads->ref[i] += s * f_negs[k][i];
            }
        }
    }
    return loss;
}

double triplet_param_grad(const EncoderParams& params, const KernelCache& cache,
                          const std::vector<IqFrame>& pool, const Triplet& triplet,
                          std::vector<double>& grad) {
    require(grad.size() == params.flat.size(), "triplet_param_grad: grad size mismatch");

    static thread_local ForwardTrace ref_trace, pos_trace;
    static thread_local std::vector<ForwardTrace> neg_traces;
    neg_traces.resize(triplet.negs.size());

    auto window = [&](const WindowRef& w) -> const cplx* {
        const auto& frame = pool[w.frame].samples;
        require(w.start >= 0 && w.len >= 1 &&
                    static_cast<std::size_t>(w.start + w.len) <= frame.size(),
                "triplet_param_grad: window outside frame");
        return frame.data() + w.start;
    };

    forward_trace(params, cache, window(triplet.ref), triplet.ref.len, ref_trace);
    forward_trace(params, cache, window(triplet.pos), triplet.pos.len, pos_trace);
    std::vector<std::vector<double>> f_negs(triplet.negs.size());
    for (std::size_t k = 0; k < triplet.negs.size(); ++k) {
        forward_trace(params, cache, window(triplet.negs[k]), triplet.negs[k].len, neg_traces[k]);
        f_negs[k] = neg_traces[k].feature;
    }

    TripletFeatureGrads fg;
    const double loss = triplet_loss(ref_trace.feature, pos_trace.feature, f_negs, &fg);

    backward(params, cache, ref_trace, fg.ref, grad);
    backward(params, cache, pos_trace, fg.pos, grad);
    for (std::size_t k = 0; k < triplet.negs.size(); ++k)
        backward(params, cache, neg_traces[k], fg.negs[k], grad);
    return loss;
}

void AdamState::validate(std::size_t dim) const {
    require(lr > 0.0 && eps > 0.0, "adam: lr and eps must be positive");
    require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
            "adam: betas must lie in [0, 1)");
    require(m.size() == v.size() && (m.empty() || m.size() == dim),
            "adam: moment vectors do not match parameter size");
    require(step >= 0, "adam: negative step count");
}

void adam_update(AdamState& state, std::vector<double>& params, const std::vector<double>& grad) {
    require(params.size() == grad.size(), "adam_update: params/grad size mismatch");
    state.validate(params.size());
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    state.step += 1;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

void LocalTrainOptions::validate() const {
    require(steps >= 0, "local_train: negative step count");
    require(batch >= 1, "local_train: batch must be >= 1");
    triplet.validate();
}

std::vector<double> local_train(EncoderParams& params, const std::vector<IqFrame>& pool,
                                const LocalTrainOptions& opts, AdamState& adam, Rng& rng) {
    opts.validate();
    params.validate();

    std::vector<double> trace;
    trace.reserve(static_cast<std::size_t>(opts.steps));
    std::vector<double> grad(params.flat.size());
    for (int step = 0; step < opts.steps; ++step) {
        const KernelCache cache = normalize_kernels(params);
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss_sum = 0.0;
        for (int b = 0; b < opts.batch; ++b) {
            const Triplet t = sample_triplet(pool, opts.triplet, rng);
            loss_sum += triplet_param_grad(params, cache, pool, t, grad);
        }
        const double inv = 1.0 / static_cast<double>(opts.batch);
        for (auto& g : grad) g *= inv;
        adam_update(adam, params.flat, grad);
        trace.push_back(loss_sum * inv);
    }
    return trace;
}

}  // namespace fediq
