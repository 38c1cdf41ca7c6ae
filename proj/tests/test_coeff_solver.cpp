#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "onmf/coeff_solver.hpp"

using namespace onmf;

namespace {

// brute-force oracle for min_h d(v||Wh) over the box, K = 2
Vector grid_argmin(const DivergenceSpec& div, const Vector& v, const Matrix& w,
                   const CoeffConstraint& cc, int steps = 400) {
    Vector best = {cc.eps_prime, cc.eps_prime};
    double fbest = eval(div, v, w.mul(best));
    for (int i = 0; i <= steps; ++i)
        for (int j = 0; j <= steps; ++j) {
            const Vector h = {
                cc.eps_prime + (cc.upper - cc.eps_prime) * i / steps,
                cc.eps_prime + (cc.upper - cc.eps_prime) * j / steps};
            const double f = eval(div, v, w.mul(h));
            if (f < fbest) {
                fbest = f;
                best = h;
            }
        }
    return best;
}

}  // namespace

TEST_CASE("polyak_step worked examples") {
    CHECK(polyak_step(1.0, 1.0, {1.0}, 0.01) == Catch::Approx(0.01));
    CHECK(polyak_step(2.0, 1.0, {1.0}, 0.0) == Catch::Approx(1.0));
    CHECK(polyak_step(1.0, 1.0, {2.0}, 0.01) == Catch::Approx(0.0025));
    CHECK_THROWS_AS(polyak_step(1.0, 1.0, {0.0, 0.0}, 0.01), NumericalError);
}

TEST_CASE("armijo accepts the unit step on a well-conditioned quadratic") {
    // with W = I and the squared metric, the full gradient step lands exactly
    // on the target, so the sufficient-decrease test passes at xi = 1
    const Matrix w = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    const CoeffConstraint cc(2, 1e-8, 1e8);
    CHECK(armijo_step(DivergenceSpec::squared_l2(), {1.0, 2.0}, w, {1.5, 1.5}, cc) == 1.0);
}

TEST_CASE("armijo exhausts shrinkages when no progress is possible") {
    // h sits at the upper bound and the gradient pushes further up, so every
    // clamped trial equals h and the test can never pass
    const Matrix w = Matrix::from_rows({{1.0}});
    const CoeffConstraint cc(1, 1e-8, 2.0);
    const double xi = armijo_step(DivergenceSpec::kl(), {4.0}, w, {2.0}, cc);
    CHECK(xi == Catch::Approx(std::pow(0.1, 10)).epsilon(1e-9));
}

TEST_CASE("armijo step satisfies sufficient decrease when it claims to") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.3, 2.0);
    const CoeffConstraint cc(2, 1e-3, 10.0);
    const StepPolicy pol = StepPolicy::armijo();
    for (const auto& div :
         {DivergenceSpec::kl(), DivergenceSpec::is(), DivergenceSpec::squared_l2(),
          DivergenceSpec::hellinger(), DivergenceSpec::beta(1.5)}) {
        for (int rep = 0; rep < 50; ++rep) {
            Matrix w(3, 2);
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 2; ++j) w(i, j) = u(rng);
            const Vector v = {u(rng), u(rng), u(rng)};
            const Vector h = {u(rng), u(rng)};
            const double xi = armijo_step(div, v, w, h, cc, pol);
            const Vector g = grad_h(div, v, w, h);
            Vector trial(2);
            for (std::size_t j = 0; j < 2; ++j) trial[j] = h[j] - xi * g[j];
            trial = project_H(trial, cc);
            const double f0 = eval(div, v, w.mul(h));
            const double ft = eval(div, v, w.mul(trial));
            const bool decreased = ft <= f0 - pol.armijo_alpha * xi * dot(g, g) + 1e-12;
            const bool exhausted = xi == Catch::Approx(std::pow(0.1, 10)).epsilon(1e-9);
            CHECK((decreased || exhausted));
        }
    }
}

TEST_CASE("solve_h recovers the box-clamped target when W is the identity") {
    // with W = I the minimizer of any separable divergence is clamp(v)
    const Matrix w = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    const CoeffConstraint cc(2, 0.5, 2.0);
    for (const auto& div :
         {DivergenceSpec::squared_l2(), DivergenceSpec::kl(), DivergenceSpec::huber(1.0)}) {
        const auto rep =
            solve_h(div, {3.0, 1.0}, w, {1.0, 1.0}, default_policy(div), cc, 2000, 1e-10);
        CHECK(rep.h[0] == Catch::Approx(2.0).margin(1e-5));
        CHECK(rep.h[1] == Catch::Approx(1.0).margin(1e-5));
    }
}

TEST_CASE("solve_h matches a grid-search oracle") {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> u(0.3, 1.0);
    const CoeffConstraint cc(2, 0.05, 3.0);
    for (const auto& div :
         {DivergenceSpec::squared_l2(), DivergenceSpec::kl(), DivergenceSpec::is(),
          DivergenceSpec::hellinger(), DivergenceSpec::robust_l2()}) {
        CAPTURE(div.name());
        Matrix w(3, 2);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 2; ++j) w(i, j) = u(rng);
        const Vector v = {u(rng) * 2.0, u(rng) * 2.0, u(rng) * 2.0};
        const auto rep = solve_h(div, v, w, {1.0, 1.0}, default_policy(div), cc, 5000, 1e-10);
        const Vector ref = grid_argmin(div, v, w, cc);
        const double f_ref = eval(div, v, w.mul(ref));
        // solver must do at least as well as the grid up to its resolution
        CHECK(rep.final_objective <= f_ref + 1e-3);
    }
}

TEST_CASE("constant-step solve decreases the objective monotonically") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.3, 1.0);
    const CoeffConstraint cc(3, 1e-4, 50.0);
    Matrix w(4, 3);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j) w(i, j) = u(rng);
    const Vector v = {1.0, 2.0, 0.5, 1.5};
    const DivergenceSpec div = DivergenceSpec::squared_l2();
    const auto l = lipschitz_bound(div, v, w, CoeffBox{cc.eps_prime, cc.upper});
    REQUIRE(l.has_value());
    Vector h = {1.0, 1.0, 1.0};
    double prev = eval(div, v, w.mul(h));
    for (int k = 0; k < 100; ++k) {
        const Vector g = grad_h(div, v, w, h);
        Vector next(3);
        for (std::size_t j = 0; j < 3; ++j) next[j] = h[j] - g[j] / *l;
        h = project_H(next, cc);
        const double f = eval(div, v, w.mul(h));
        CHECK(f <= prev + 1e-12);
        prev = f;
    }
}

TEST_CASE("constant-step policy rejects nonsmooth divergences") {
    const Matrix w = Matrix::from_rows({{1.0}});
    const CoeffConstraint cc(1, 1e-8, 10.0);
    CHECK_THROWS_AS(solve_h(DivergenceSpec::robust_l1(), {1.0}, w, {1.0},
                            StepPolicy::constant_mm(), cc),
                    ConfigError);
}

TEST_CASE("polyak policy handles the l1 metric and flags zero subgradients") {
    const Matrix w = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    const CoeffConstraint cc(2, 0.1, 5.0);
    const auto rep =
        solve_h(DivergenceSpec::robust_l1(), {2.0, 0.5}, w, {1.0, 1.0},
                StepPolicy::polyak(), cc, 3000, 1e-9);
    // minimum value is 0 at h = v; polyak converges to within its delta
    CHECK(rep.final_objective <= 0.05);

    // starting at the minimizer, the zero subgradient terminates immediately
    const auto rep2 = solve_h(DivergenceSpec::robust_l1(), {2.0, 0.5}, w, {2.0, 0.5},
                              StepPolicy::polyak(), cc);
    CHECK(rep2.converged);
    CHECK(rep2.final_objective == 0.0);
}

TEST_CASE("default policy assignment") {
    CHECK(default_policy(DivergenceSpec::squared_l2()).kind == StepPolicyKind::ConstantMM);
    CHECK(default_policy(DivergenceSpec::huber(1.0)).kind == StepPolicyKind::ConstantMM);
    CHECK(default_policy(DivergenceSpec::robust_l1()).kind == StepPolicyKind::Polyak);
    CHECK(default_policy(DivergenceSpec::csiszar_l1()).kind == StepPolicyKind::Polyak);
    CHECK(default_policy(DivergenceSpec::kl()).kind == StepPolicyKind::Armijo);
    CHECK(default_policy(DivergenceSpec::is()).kind == StepPolicyKind::Armijo);
    CHECK(default_policy(DivergenceSpec::robust_l2()).kind == StepPolicyKind::Armijo);
}

TEST_CASE("solve_h input validation") {
    const Matrix w = Matrix::from_rows({{1.0}});
    const CoeffConstraint cc(1, 0.5, 2.0);
    CHECK_THROWS_AS(solve_h(DivergenceSpec::kl(), {1.0}, w, {0.1}, StepPolicy::armijo(), cc),
                    DataError);
    StepPolicy bad = StepPolicy::armijo();
    bad.armijo_gamma = 1.5;
    CHECK_THROWS_AS(solve_h(DivergenceSpec::kl(), {1.0}, w, {1.0}, bad, cc), ConfigError);
}
