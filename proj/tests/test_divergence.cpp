#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "onmf/divergence.hpp"

using namespace onmf;

namespace {

std::vector<DivergenceSpec> catalog() {
    return {DivergenceSpec::csiszar_l1(),
            DivergenceSpec::alpha(1.7),
            DivergenceSpec::alpha(-0.5),
            DivergenceSpec::hellinger(),
            DivergenceSpec::kl(),
            DivergenceSpec::mahalanobis(Matrix::from_rows({{2.0, 0.5}, {0.5, 1.0}})),
            DivergenceSpec::beta(1.5),
            DivergenceSpec::beta(3.0),
            DivergenceSpec::is(),
            DivergenceSpec::squared_l2(),
            DivergenceSpec::robust_l1(),
            DivergenceSpec::robust_l2(),
            DivergenceSpec::huber(1.0)};
}

std::size_t dim_for(const DivergenceSpec& d) {
    return d.kind() == DivKind::Mahalanobis ? 2 : 3;
}

Vector rand_vec(std::mt19937_64& rng, std::size_t n, double lo = 0.2, double hi = 3.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vector v(n);
    for (double& x : v) x = u(rng);
    return v;
}

// independent central finite-difference oracle for grad_y
Vector fd_grad(const DivergenceSpec& div, const Vector& x, Vector y) {
    Vector g(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double step = 1e-6 * std::max(1.0, std::fabs(y[i]));
        const double orig = y[i];
        y[i] = orig + step;
        const double fp = eval(div, x, y);
        y[i] = orig - step;
        const double fm = eval(div, x, y);
        y[i] = orig;
        g[i] = (fp - fm) / (2.0 * step);
    }
    return g;
}

}  // namespace

TEST_CASE("eval closed forms match independently derived values") {
    CHECK(eval(DivergenceSpec::kl(), {1, 2}, {2, 1}) == Catch::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(eval(DivergenceSpec::is(), {1}, {2}) ==
          Catch::Approx(std::log(2.0) - 0.5).epsilon(1e-12));
    CHECK(eval(DivergenceSpec::huber(1.0), {3}, {1}) == Catch::Approx(1.5).epsilon(1e-12));
    CHECK(eval(DivergenceSpec::hellinger(), {4}, {1}) == Catch::Approx(2.0).epsilon(1e-12));
    CHECK(eval(DivergenceSpec::robust_l1(), {1, 5}, {2, 3}) == Catch::Approx(3.0));
    CHECK(eval(DivergenceSpec::robust_l2(), {1, 1}, {4, 5}) == Catch::Approx(5.0));
    CHECK(eval(DivergenceSpec::squared_l2(), {1, 3}, {2, 5}) == Catch::Approx(2.5));
}

TEST_CASE("identity of indiscernibles holds exactly") {
    const Vector x = {3.0, 7.0};
    for (const auto& div : catalog()) {
        if (dim_for(div) != 2) continue;
        CAPTURE(div.name());
        CHECK(eval(div, x, x) == 0.0);
    }
    CHECK(eval(DivergenceSpec::kl(), {3, 7, 2}, {3, 7, 2}) == 0.0);
}

TEST_CASE("nonnegativity on random positive pairs") {
    std::mt19937_64 rng(7);
    for (const auto& div : catalog()) {
        CAPTURE(div.name());
        for (int rep = 0; rep < 500; ++rep) {
            const std::size_t n = dim_for(div);
            CHECK(eval(div, rand_vec(rng, n), rand_vec(rng, n)) >= 0.0);
        }
    }
}

TEST_CASE("D1 gradients match central finite differences") {
    std::mt19937_64 rng(11);
    for (const auto& div : catalog()) {
        if (!class_of(div).in_D1) continue;
        CAPTURE(div.name());
        for (int rep = 0; rep < 50; ++rep) {
            const std::size_t n = dim_for(div);
            const Vector x = rand_vec(rng, n);
            const Vector y = rand_vec(rng, n);
            const Vector g = grad_y(div, x, y);
            const Vector fd = fd_grad(div, x, y);
            double err = 0.0;
            for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::fabs(g[i] - fd[i]));
            CHECK(err / std::max(1.0, norm_inf(g)) < 1e-5);
        }
    }
}

TEST_CASE("subgradient elements at kinks are the zero element") {
    const Vector x = {1.0, 2.0};
    CHECK(grad_y(DivergenceSpec::robust_l1(), x, x) == Vector{0.0, 0.0});
    CHECK(grad_y(DivergenceSpec::robust_l2(), x, x) == Vector{0.0, 0.0});
    CHECK(grad_y(DivergenceSpec::robust_l1(), {2}, {1}) == Vector{-1.0});
}

TEST_CASE("grad oracle examples") {
    CHECK(grad_y(DivergenceSpec::kl(), {1}, {2})[0] == Catch::Approx(0.5).epsilon(1e-14));
    CHECK(grad_y(DivergenceSpec::squared_l2(), {1, 2}, {1, 2}) == Vector{0.0, 0.0});
    const Matrix w = Matrix::from_rows({{1.0}});
    CHECK(grad_W(DivergenceSpec::kl(), {2}, w, {1})(0, 0) == Catch::Approx(-1.0));
    CHECK(grad_W(DivergenceSpec::robust_l1(), {2}, w, {1})(0, 0) == Catch::Approx(-1.0));
    const Matrix w2 = Matrix::from_rows({{1.0}, {1.0}});
    CHECK(grad_h(DivergenceSpec::squared_l2(), {1, 3}, w2, {2})[0] == Catch::Approx(0.0));
    CHECK(grad_h(DivergenceSpec::kl(), {2}, w, {1})[0] == Catch::Approx(-1.0));
}

TEST_CASE("gradient at exact fit is zero") {
    std::mt19937_64 rng(3);
    for (const auto& div : catalog()) {
        CAPTURE(div.name());
        const std::size_t n = dim_for(div);
        Matrix w(n, 2);
        std::uniform_real_distribution<double> u(0.1, 1.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < 2; ++j) w(i, j) = u(rng);
        const Vector h = {0.7, 1.3};
        const Vector v = w.mul(h);
        CHECK((grad_W(div, v, w, h)).frobenius_norm() == Catch::Approx(0.0).margin(1e-13));
        CHECK(norm2(grad_h(div, v, w, h)) == Catch::Approx(0.0).margin(1e-13));
    }
}

TEST_CASE("chain rule: grad_W equals outer(grad_y, h)") {
    std::mt19937_64 rng(5);
    for (const auto& div : catalog()) {
        const std::size_t n = dim_for(div);
        std::uniform_real_distribution<double> u(0.1, 1.0);
        Matrix w(n, 3);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < 3; ++j) w(i, j) = u(rng);
        const Vector v = rand_vec(rng, n);
        const Vector h = rand_vec(rng, 3, 0.5, 2.0);
        const Matrix gw = grad_W(div, v, w, h);
        const Matrix oracle = outer(grad_y(div, v, w.mul(h)), h);
        CHECK((gw - oracle).frobenius_norm() <= 1e-12);
    }
}

TEST_CASE("class membership per divergence family") {
    auto cls = [](const DivergenceSpec& d) { return class_of(d); };
    CHECK_FALSE(cls(DivergenceSpec::robust_l1()).in_D1);
    CHECK(cls(DivergenceSpec::robust_l1()).in_D2);
    CHECK_FALSE(cls(DivergenceSpec::robust_l2()).in_D1);
    CHECK(cls(DivergenceSpec::robust_l2()).in_D2);
    CHECK(cls(DivergenceSpec::beta(3.0)).in_D1);
    CHECK_FALSE(cls(DivergenceSpec::beta(3.0)).in_D2);
    CHECK(cls(DivergenceSpec::beta(0.5)).in_D1);
    CHECK_FALSE(cls(DivergenceSpec::beta(0.5)).in_D2);
    CHECK(cls(DivergenceSpec::kl()).in_D1);
    CHECK(cls(DivergenceSpec::kl()).in_D2);
    CHECK(cls(DivergenceSpec::is()).in_D1);
    CHECK_FALSE(cls(DivergenceSpec::is()).in_D2);
    for (const auto& div : catalog()) {
        const auto c = cls(div);
        CHECK((c.in_D1 || c.in_D2));
    }
}

TEST_CASE("family consistency identities") {
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 100; ++rep) {
        const Vector x = rand_vec(rng, 3);
        const Vector y = rand_vec(rng, 3);
        CHECK(std::fabs(eval(DivergenceSpec::alpha(0.5), x, y) -
                        eval(DivergenceSpec::hellinger(), x, y)) < 1e-12);
        CHECK(std::fabs(eval(DivergenceSpec::beta(2.0), x, y) -
                        eval(DivergenceSpec::squared_l2(), x, y)) < 1e-12);
        const double kl = eval(DivergenceSpec::kl(), x, y);
        CHECK(eval(DivergenceSpec::beta(1.0 + 1e-6), x, y) ==
              Catch::Approx(kl).epsilon(1e-4));
        CHECK(eval(DivergenceSpec::beta(1.0 - 1e-6), x, y) ==
              Catch::Approx(kl).epsilon(1e-4));
        CHECK(eval(DivergenceSpec::beta(1e-6), x, y) ==
              Catch::Approx(eval(DivergenceSpec::is(), x, y)).epsilon(1e-4));
        CHECK(eval(DivergenceSpec::alpha(1.0 + 1e-6), x, y) ==
              Catch::Approx(kl).epsilon(1e-4));
    }
}

TEST_CASE("D2 kinds satisfy the midpoint convexity inequality") {
    std::mt19937_64 rng(17);
    for (const auto& div : catalog()) {
        if (!class_of(div).in_D2) continue;
        CAPTURE(div.name());
        for (int rep = 0; rep < 200; ++rep) {
            const std::size_t n = dim_for(div);
            const Vector x = rand_vec(rng, n);
            const Vector y1 = rand_vec(rng, n);
            const Vector y2 = rand_vec(rng, n);
            Vector mid(n);
            for (std::size_t i = 0; i < n; ++i) mid[i] = 0.5 * (y1[i] + y2[i]);
            CHECK(eval(div, x, mid) <=
                  0.5 * (eval(div, x, y1) + eval(div, x, y2)) + 1e-10);
        }
    }
}

TEST_CASE("lipschitz bounds") {
    const CoeffBox box{1e-8, 1e8};
    Matrix eye2(2, 2);
    eye2(0, 0) = eye2(1, 1) = 1.0;
    CHECK(*lipschitz_bound(DivergenceSpec::squared_l2(), {1, 1}, eye2, box) ==
          Catch::Approx(1.0).epsilon(1e-6));
    CHECK(*lipschitz_bound(DivergenceSpec::squared_l2(), {1}, Matrix::from_rows({{2.0}}), box) ==
          Catch::Approx(4.0).epsilon(1e-6));
    CHECK_FALSE(lipschitz_bound(DivergenceSpec::robust_l1(), {1}, Matrix::from_rows({{1.0}}), box)
                    .has_value());

    // the bound dominates finite-difference gradient variation on a smooth kind
    std::mt19937_64 rng(19);
    const Matrix w = Matrix::from_rows({{0.3, 0.6}, {0.5, 0.2}});
    const Vector v = {1.5, 0.8};
    const CoeffBox tight{0.5, 2.0};
    for (const auto& div : {DivergenceSpec::kl(), DivergenceSpec::is(), DivergenceSpec::huber(1.0)}) {
        const double L = *lipschitz_bound(div, v, w, tight);
        std::uniform_real_distribution<double> u(tight.eps_prime, tight.upper);
        for (int rep = 0; rep < 100; ++rep) {
            const Vector h1 = {u(rng), u(rng)};
            const Vector h2 = {u(rng), u(rng)};
            Vector d1 = grad_h(div, v, w, h1);
            Vector d2 = grad_h(div, v, w, h2);
            double gd = 0.0, hd = 0.0;
            for (std::size_t i = 0; i < 2; ++i) {
                gd += (d1[i] - d2[i]) * (d1[i] - d2[i]);
                hd += (h1[i] - h2[i]) * (h1[i] - h2[i]);
            }
            CHECK(std::sqrt(gd) <= L * std::sqrt(hd) * (1.0 + 1e-9));
        }
    }
}

TEST_CASE("domain and parameter validation") {
    CHECK_THROWS_AS(eval(DivergenceSpec::kl(), {1.0, 0.0}, {1.0, 1.0}), DataError);
    CHECK_THROWS_AS(eval(DivergenceSpec::kl(), {1.0}, {1.0, 1.0}), DataError);
    CHECK_NOTHROW(eval(DivergenceSpec::huber(1.0), {0.0}, {0.0}));
    CHECK_THROWS_AS(DivergenceSpec::alpha(1.0), ConfigError);
    CHECK_THROWS_AS(DivergenceSpec::beta(0.0), ConfigError);
    CHECK_THROWS_AS(DivergenceSpec::huber(0.0), ConfigError);
    CHECK_THROWS_AS(DivergenceSpec::mahalanobis(Matrix::from_rows({{1.0, 0.5}, {0.0, 1.0}})),
                    ConfigError);
    CHECK_THROWS_AS(DivergenceSpec::mahalanobis(Matrix::from_rows({{-1.0}})), ConfigError);
}

TEST_CASE("divergence string parsing") {
    CHECK(parse_divergence("kl").kind() == DivKind::KL);
    CHECK(parse_divergence("beta:1.5").kind() == DivKind::Beta);
    CHECK(parse_divergence("beta:1.5").param() == 1.5);
    CHECK(parse_divergence("alpha:0.5").param() == 0.5);
    CHECK(parse_divergence("huber:1").param() == 1.0);
    CHECK(parse_divergence("l1").kind() == DivKind::RobustL1);
    CHECK_THROWS_AS(parse_divergence("frobnicate"), ConfigError);
    CHECK_THROWS_AS(parse_divergence("beta:xyz"), ConfigError);
    CHECK_THROWS_AS(parse_divergence("mahalanobis:a.txt"), ConfigError);  // no loader
}
