#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "onmf/coeff_solver.hpp"
#include "onmf/constraints.hpp"
#include "onmf/divergence.hpp"
#include "onmf/errors.hpp"
#include "onmf/rng.hpp"
#include "onmf/stream.hpp"

namespace onmf {

// eta_t = a / (tau * t + b): sums diverge, squared sums converge.
struct StepSchedule {
    double a;
    double b;
    int tau;  // mini-batch size

    StepSchedule(double a_, double b_, int tau_) : a(a_), b(b_), tau(tau_) {
        if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("step schedule: a, b must be > 0");
        if (tau < 1) throw ConfigError("step schedule: tau must be >= 1");
    }

    double step_size(std::uint64_t t) const {
        if (t < 1) throw ConfigError("step schedule: t must be >= 1");
        return a / (static_cast<double>(tau) * static_cast<double>(t) + b);
    }
};

enum class HistoryMode {
    Window,      // keep only the most recent pairs (bounded memory)
    Diagnostic,  // keep every (v, h) pair, matching the offline loss definition
};

struct TraceRecord {
    std::uint64_t t = 0;
    std::uint64_t samples_seen = 0;
    double empirical_loss = 0.0;
    double eta = 0.0;
    double stationarity_residual = std::numeric_limits<double>::quiet_NaN();
    std::int64_t wall_ms = 0;
};

struct LossTrace {
    std::uint64_t seed = 0;
    std::string generator = kGeneratorName;
    HistoryMode history = HistoryMode::Window;
    std::vector<TraceRecord> records;
};

struct LearnerConfig {
    DivergenceSpec divergence = DivergenceSpec::kl();
    std::size_t F = 0;
    std::size_t K = 40;
    double eps = 1e-8;
    double eps_prime = 1e-8;
    double u_bound = 1e8;
    StepSchedule schedule{2e4, 2e4, 1};
    std::uint64_t T = 1;
    std::uint64_t seed = 0;
    std::uint64_t eval_every = 1;
    std::optional<StepPolicy> h_policy;  // nullopt: pick by divergence kind
    int h_max_iters = 500;
    double h_tol = 1e-6;
    bool warm_start = false;
    HistoryMode history = HistoryMode::Window;
    std::size_t window = 1000;
    std::size_t eval_holdout = 0;  // samples held out for the residual column
    bool timing = false;           // when off, wall_ms is written as 0

    void validate() const {
        if (F == 0 || K == 0) throw ConfigError("config: F and K must be positive");
        if (T < 1) throw ConfigError("config: T must be >= 1");
        if (eval_every < 1) throw ConfigError("config: eval_every must be >= 1");
        if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("config: eps must be in (0,1)");
        if (!(eps_prime > 0.0 && u_bound > eps_prime))
            throw ConfigError("config: need 0 < eps_prime < u_bound");
        if (h_max_iters < 1) throw ConfigError("config: h_max_iters must be >= 1");
        if (!(h_tol > 0.0)) throw ConfigError("config: h_tol must be > 0");
        if (h_policy) h_policy->validate();
    }

    DictConstraint dict_constraint() const { return DictConstraint(F, K, eps); }
    CoeffConstraint coeff_constraint() const { return CoeffConstraint(K, eps_prime, u_bound); }
    StepPolicy policy() const { return h_policy ? *h_policy : default_policy(divergence); }
};

struct OnlineResult {
    Matrix W;
    LossTrace trace;
    std::size_t peak_history_pairs = 0;  // memory-contract accounting
};

inline double empirical_loss(const DivergenceSpec& div,
                             const std::deque<std::pair<Vector, Vector>>& pairs,
                             const Matrix& w) {
    if (pairs.empty()) throw DataError("empirical_loss: empty history");
    double s = 0.0;
    for (const auto& [v, h] : pairs) s += eval(div, v, w.mul(h));
    return s / static_cast<double>(pairs.size());
}

// Single projected-subgradient dictionary step on a mini-batch of solved
// (v, h) pairs. The mini-batch gradient is the arithmetic mean.
inline Matrix update_dictionary(const Matrix& w_prev,
                                const std::vector<std::pair<Vector, Vector>>& batch,
                                double eta, const DivergenceSpec& div,
                                const DictConstraint& dc) {
    if (batch.empty()) throw DataError("update_dictionary: empty batch");
    if (!(eta > 0.0)) throw ConfigError("update_dictionary: eta must be > 0");
    Matrix g(w_prev.rows(), w_prev.cols());
    for (const auto& [v, h] : batch) g += grad_W(div, v, w_prev, h);
    g *= 1.0 / static_cast<double>(batch.size());
    return project_C(w_prev - eta * g, dc);
}

// Gradient-mapping residual ||Pi_C(W - eta grad fhat(W)) - W|| / eta, where
// fhat averages the loss over the given samples with freshly solved
// coefficients. Vanishes exactly at fixed points of the projected step.
inline double stationarity_residual(const Matrix& w, const std::vector<Vector>& samples,
                                    const DivergenceSpec& div, const LearnerConfig& cfg,
                                    double probe_eta = 1e-2) {
    if (!class_of(div).in_D1)
        throw ConfigError("stationarity_residual: divergence must be in D1");
    if (samples.empty()) throw DataError("stationarity_residual: empty dataset");
    const auto dc = cfg.dict_constraint();
    const auto cc = cfg.coeff_constraint();
    const Vector h0 = project_H(Vector(cfg.K, 1.0), cc);
    Matrix g(w.rows(), w.cols());
    for (const Vector& v : samples) {
        const auto rep = solve_h(div, v, w, h0, cfg.policy(), cc, cfg.h_max_iters, cfg.h_tol);
        g += grad_W(div, v, w, rep.h);
    }
    g *= 1.0 / static_cast<double>(samples.size());
    const Matrix moved = project_C(w - probe_eta * g, dc);
    return (moved - w).frobenius_norm() / probe_eta;
}

// Empirical counterpart of the unbiased-gradient identity: the average of
// per-sample dictionary gradients must coincide with the full-dataset
// gradient computed in one pass over the same solved coefficients.
inline double unbiasedness_check(const Matrix& w, const std::vector<Vector>& samples,
                                 const DivergenceSpec& div, const LearnerConfig& cfg) {
    const auto cls = class_of(div);
    if (!cls.in_D1 || !cls.in_D2)
        throw ConfigError("unbiasedness_check: divergence must be in D1 and D2");
    if (samples.empty()) throw DataError("unbiasedness_check: empty dataset");
    const auto cc = cfg.coeff_constraint();
    const Vector h0 = project_H(Vector(cfg.K, 1.0), cc);

    std::vector<Vector> solved;
    solved.reserve(samples.size());
    for (const Vector& v : samples)
        solved.push_back(solve_h(div, v, w, h0, cfg.policy(), cc, cfg.h_max_iters, cfg.h_tol).h);

    const double inv_n = 1.0 / static_cast<double>(samples.size());

    // route one: running mean of per-sample gradients
    Matrix mean_grad(w.rows(), w.cols());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        Matrix gi = grad_W(div, samples[i], w, solved[i]);
        gi *= inv_n;
        mean_grad += gi;
    }

    // route two: gradient of the summed batch objective, accumulated
    // entrywise in reverse order, then normalized
    Matrix full_grad(w.rows(), w.cols());
    for (std::size_t i = samples.size(); i-- > 0;) {
        const Vector gy = grad_y(div, samples[i], w.mul(solved[i]));
        for (std::size_t r = 0; r < w.rows(); ++r)
            for (std::size_t c = 0; c < w.cols(); ++c)
                full_grad(r, c) += gy[r] * solved[i][c];
    }
    full_grad *= inv_n;

    return (mean_grad - full_grad).frobenius_norm();
}

using OnlineObserver = std::function<void(std::uint64_t t, const Matrix& w)>;

// Algorithm driver: draw tau samples, solve each coefficient vector against
// W_{t-1}, take the averaged projected subgradient step, repeat.
inline OnlineResult run_online(const LearnerConfig& cfg, SampleStream& stream,
                               const OnlineObserver& observer = nullptr) {
    cfg.validate();
    if (stream.dim() != cfg.F)
        throw DataError("run_online: stream dimension does not match F");
    const auto dc = cfg.dict_constraint();
    const auto cc = cfg.coeff_constraint();
    const DivergenceSpec& div = cfg.divergence;
    const StepPolicy policy = cfg.policy();
    const Vector h_default = project_H(Vector(cfg.K, 1.0), cc);

    const auto start = std::chrono::steady_clock::now();

    std::vector<Vector> holdout;
    holdout.reserve(cfg.eval_holdout);
    for (std::size_t i = 0; i < cfg.eval_holdout; ++i) holdout.push_back(stream.next());

    auto rng = make_rng(cfg.seed, "init");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix w(cfg.F, cfg.K);
    for (std::size_t i = 0; i < cfg.F; ++i)
        for (std::size_t j = 0; j < cfg.K; ++j) w(i, j) = unif(rng);
    w = project_C(w, dc);

    OnlineResult out;
    out.trace.seed = cfg.seed;
    out.trace.history = cfg.history;

    std::deque<std::pair<Vector, Vector>> history;
    Vector h_prev = h_default;
    std::uint64_t samples_seen = 0;

    for (std::uint64_t t = 1; t <= cfg.T; ++t) {
        std::vector<std::pair<Vector, Vector>> batch;
        batch.reserve(static_cast<std::size_t>(cfg.schedule.tau));
        for (int s = 0; s < cfg.schedule.tau; ++s) {
            Vector v = stream.next();
            const Vector& h0 = cfg.warm_start ? h_prev : h_default;
            SolveReport rep;
            try {
                rep = solve_h(div, v, w, h0, policy, cc, cfg.h_max_iters, cfg.h_tol);
            } catch (const std::exception& e) {
                throw NumericalError("coefficient solve failed at iteration " +
                                     std::to_string(t) + ": " + e.what());
            }
            h_prev = rep.h;
            batch.emplace_back(std::move(v), std::move(rep.h));
            ++samples_seen;
        }

        const double eta = cfg.schedule.step_size(t);
        w = update_dictionary(w, batch, eta, div, dc);
        if (w.has_nan()) throw NumericalError("NaN in dictionary at iteration " +
                                              std::to_string(t));

        for (auto& pr : batch) history.push_back(std::move(pr));
        if (cfg.history == HistoryMode::Window)
            while (history.size() > cfg.window) history.pop_front();
        out.peak_history_pairs = std::max(out.peak_history_pairs, history.size());

        if (t % cfg.eval_every == 0 || t == cfg.T) {
            TraceRecord rec;
            rec.t = t;
            rec.samples_seen = samples_seen;
            rec.empirical_loss = empirical_loss(div, history, w);
            rec.eta = eta;
            if (!holdout.empty() && class_of(div).in_D1)
                rec.stationarity_residual = stationarity_residual(w, holdout, div, cfg);
            if (cfg.timing)
                rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  std::chrono::steady_clock::now() - start)
                                  .count();
            out.trace.records.push_back(rec);
            if (observer) observer(t, w);
        }
    }

    out.W = std::move(w);
    return out;
}

}  // namespace onmf
