#pragma once

#include <cmath>

#include "onmf/constraints.hpp"
#include "onmf/divergence.hpp"
#include "onmf/errors.hpp"

namespace onmf {

enum class StepPolicyKind { Armijo, ConstantMM, Polyak };

struct StepPolicy {
    StepPolicyKind kind = StepPolicyKind::Armijo;
    double armijo_alpha = 0.01;  // sufficient-decrease constant, in (0, 0.5)
    double armijo_gamma = 0.1;   // shrink factor, in (0, 1)
    int armijo_q = 10;           // maximum shrinkages
    double polyak_delta = 0.01;  // tolerance of the modified Polyak rule

    static StepPolicy armijo() { return {StepPolicyKind::Armijo}; }
    static StepPolicy constant_mm() { return {StepPolicyKind::ConstantMM}; }
    static StepPolicy polyak() { return {StepPolicyKind::Polyak}; }

    void validate() const {
        if (!(armijo_alpha > 0.0 && armijo_alpha < 0.5))
            throw ConfigError("armijo_alpha must be in (0, 0.5)");
        if (!(armijo_gamma > 0.0 && armijo_gamma < 1.0))
            throw ConfigError("armijo_gamma must be in (0, 1)");
        if (armijo_q < 1) throw ConfigError("armijo_q must be >= 1");
        if (!(polyak_delta > 0.0)) throw ConfigError("polyak_delta must be > 0");
    }
};

// Step policy guidance: constant 1/L for kinds whose gradient smoothness is
// uniform over H, Armijo where the curvature blows up near the boundary,
// Polyak for the l1 metric.
inline StepPolicy default_policy(const DivergenceSpec& div) {
    switch (div.kind()) {
        case DivKind::Huber:
        case DivKind::SquaredL2:
        case DivKind::Mahalanobis:
            return StepPolicy::constant_mm();
        case DivKind::RobustL1:
        case DivKind::CsiszarL1:
            return StepPolicy::polyak();
        default:
            return StepPolicy::armijo();
    }
}

struct SolveReport {
    Vector h;
    int iterations = 0;
    double final_objective = 0.0;
    bool converged = false;
};

// Backtracking line search on the unprojected gradient step. The trial point
// is clamped into H for the objective evaluation only, since d(v||.) may be
// undefined outside the feasible box.
inline double armijo_step(const DivergenceSpec& div, const Vector& v, const Matrix& w,
                          const Vector& h, const CoeffConstraint& cc,
                          const StepPolicy& pol = StepPolicy::armijo()) {
    const Vector g = grad_h(div, v, w, h);
    const double g2 = dot(g, g);
    const double f0 = eval(div, v, w.mul(h));
    double xi = 1.0;
    for (int i = 0; i <= pol.armijo_q; ++i) {
        Vector trial(h.size());
        for (std::size_t j = 0; j < h.size(); ++j) trial[j] = h[j] - xi * g[j];
        trial = project_H(trial, cc);
        if (eval(div, v, w.mul(trial)) <= f0 - pol.armijo_alpha * xi * g2) return xi;
        if (i < pol.armijo_q) xi *= pol.armijo_gamma;
    }
    return xi;  // gamma^q, all shrinkages exhausted
}

// Modified Polyak step with tolerance delta_tol: (f_k - f_best + delta) / ||g||^2.
inline double polyak_step(double f_k, double f_best, const Vector& g, double delta_tol) {
    const double g2 = dot(g, g);
    if (!(g2 > 0.0)) throw NumericalError("polyak_step: zero subgradient");
    return (f_k - f_best + delta_tol) / g2;
}

// Projected subgradient descent on h |-> d(v||Wh) over H.
inline SolveReport solve_h(const DivergenceSpec& div, const Vector& v, const Matrix& w,
                           const Vector& h0, const StepPolicy& policy,
                           const CoeffConstraint& cc, int max_iters = 500,
                           double tol = 1e-6) {
    policy.validate();
    if (!is_member(h0, cc)) throw DataError("solve_h: h0 not in H");

    double inv_l = 0.0;
    if (policy.kind == StepPolicyKind::ConstantMM) {
        const auto l = lipschitz_bound(div, v, w, CoeffBox{cc.eps_prime, cc.upper});
        if (!l)
            throw ConfigError("solve_h: constant-step policy needs a divergence in D1 (" +
                              div.name() + " is not)");
        inv_l = *l > 0.0 ? 1.0 / *l : 1.0;
    }

    SolveReport rep;
    Vector h = project_H(h0, cc);
    double f_best = eval(div, v, w.mul(h));
    bool converged = false;
    int k = 0;
    while (k < max_iters && !converged) {
        ++k;
        const Vector g = grad_h(div, v, w, h);
        double step = 0.0;
        switch (policy.kind) {
            case StepPolicyKind::ConstantMM:
                step = inv_l;
                break;
            case StepPolicyKind::Armijo:
                step = armijo_step(div, v, w, h, cc, policy);
                break;
            case StepPolicyKind::Polyak: {
                if (!(dot(g, g) > 0.0)) {
                    converged = true;  // optimal up to delta_tol
                    continue;
                }
                const double f_k = eval(div, v, w.mul(h));
                f_best = std::min(f_best, f_k);
                step = polyak_step(f_k, f_best, g, policy.polyak_delta);
                break;
            }
        }
        Vector next(h.size());
        for (std::size_t j = 0; j < h.size(); ++j) next[j] = h[j] - step * g[j];
        next = project_H(next, cc);
        double delta = 0.0;
        for (std::size_t j = 0; j < h.size(); ++j) {
            const double d = next[j] - h[j];
            delta += d * d;
        }
        converged = std::sqrt(delta) <= tol * std::max(1.0, norm2(h));
        h = std::move(next);
    }
    rep.h = std::move(h);
    rep.iterations = k;
    rep.final_objective = eval(div, v, w.mul(rep.h));
    rep.converged = converged;
    return rep;
}

}  // namespace onmf
