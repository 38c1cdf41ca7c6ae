#pragma once

#include <vector>

#include "onmf/coeff_solver.hpp"
#include "onmf/constraints.hpp"
#include "onmf/divergence.hpp"
#include "onmf/errors.hpp"
#include "onmf/online.hpp"
#include "onmf/rng.hpp"

namespace onmf {

struct BatchReport {
    Matrix W;
    Matrix H;  // K x N, columns in H
    std::vector<double> objective_per_iter;  // mean divergence per sample
};

namespace detail {

inline double batch_objective(const DivergenceSpec& div, const Matrix& v, const Matrix& w,
                              const Matrix& h) {
    double s = 0.0;
    for (std::size_t n = 0; n < v.cols(); ++n) s += eval(div, v.col(n), w.mul(h.col(n)));
    return s / static_cast<double>(v.cols());
}

}  // namespace detail

// Full-batch alternating baseline: per-column coefficient solves, then an
// Armijo-searched projected subgradient step on W over the batch objective.
// This stands in for the multiplicative-update batch algorithms from the
// literature; it reuses the same divergence and projection machinery as the
// online learner. Coefficient and dictionary updates are accepted only when
// they do not increase the objective, so the outer objective is monotone
// whenever the inner policies guarantee descent.
inline BatchReport run_batch(const Matrix& v, const LearnerConfig& cfg, int outer_iters) {
    cfg.validate();
    if (outer_iters < 1) throw ConfigError("run_batch: outer_iters must be >= 1");
    if (v.rows() != cfg.F) throw DataError("run_batch: V row count does not match F");
    if (v.cols() == 0) throw DataError("run_batch: V has no columns");
    const std::size_t n_cols = v.cols();
    const auto dc = cfg.dict_constraint();
    const auto cc = cfg.coeff_constraint();
    const DivergenceSpec& div = cfg.divergence;
    const StepPolicy policy = cfg.policy();

    auto rng = make_rng(cfg.seed, "batch-init");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix w(cfg.F, cfg.K);
    for (std::size_t i = 0; i < cfg.F; ++i)
        for (std::size_t j = 0; j < cfg.K; ++j) w(i, j) = unif(rng);
    w = project_C(w, dc);

    Matrix h(cfg.K, n_cols);
    const Vector h0 = project_H(Vector(cfg.K, 1.0), cc);
    for (std::size_t n = 0; n < n_cols; ++n) h.set_col(n, h0);

    BatchReport rep;
    rep.objective_per_iter.reserve(static_cast<std::size_t>(outer_iters));

    for (int it = 0; it < outer_iters; ++it) {
        // (a) coefficient pass, warm-started from the previous H
        for (std::size_t n = 0; n < n_cols; ++n) {
            const Vector vn = v.col(n);
            const Vector old = h.col(n);
            const auto sol = solve_h(div, vn, w, old, policy, cc, cfg.h_max_iters, cfg.h_tol);
            if (sol.final_objective <= eval(div, vn, w.mul(old))) h.set_col(n, sol.h);
        }

        // (b) dictionary pass
        Matrix g(cfg.F, cfg.K);
        for (std::size_t n = 0; n < n_cols; ++n) g += grad_W(div, v.col(n), w, h.col(n));
        g *= 1.0 / static_cast<double>(n_cols);
        const double g2 = g.frobenius_norm() * g.frobenius_norm();
        const double f0 = detail::batch_objective(div, v, w, h);
        StepPolicy armijo = StepPolicy::armijo();
        double xi = 1.0;
        for (int i = 0; i <= armijo.armijo_q; ++i) {
            const Matrix trial = project_C(w - xi * g, dc);
            if (detail::batch_objective(div, v, trial, h) <=
                f0 - armijo.armijo_alpha * xi * g2) {
                w = trial;
                break;
            }
            xi *= armijo.armijo_gamma;
        }
        if (w.has_nan()) throw NumericalError("run_batch: NaN in dictionary");
        rep.objective_per_iter.push_back(detail::batch_objective(div, v, w, h));
    }

    rep.W = std::move(w);
    rep.H = std::move(h);
    return rep;
}

}  // namespace onmf
