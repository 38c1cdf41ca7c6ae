#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>

#include "onmf/errors.hpp"
#include "onmf/matrix.hpp"

namespace onmf {

// C = { W in R+^{FxK} : ||W_i:||_1 >= eps, ||W_:j||_inf <= 1 }
struct DictConstraint {
    std::size_t F;
    std::size_t K;
    double eps;

    DictConstraint(std::size_t f, std::size_t k, double e) : F(f), K(k), eps(e) {
        if (F == 0 || K == 0) throw ConfigError("DictConstraint: F, K must be positive");
        if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("DictConstraint: eps must be in (0,1)");
    }
};

// H = { h in R+^K : eps' <= h_i <= U }
struct CoeffConstraint {
    std::size_t K;
    double eps_prime;
    double upper;

    CoeffConstraint(std::size_t k, double ep, double u) : K(k), eps_prime(ep), upper(u) {
        if (K == 0) throw ConfigError("CoeffConstraint: K must be positive");
        if (!(ep > 0.0 && u > ep)) throw ConfigError("CoeffConstraint: need 0 < eps' < U");
    }
};

inline Vector project_H(const Vector& h, const CoeffConstraint& c) {
    if (h.size() != c.K) throw DataError("project_H: length mismatch");
    Vector out(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (std::isnan(h[i])) throw DataError("project_H: NaN input");
        out[i] = std::clamp(h[i], c.eps_prime, c.upper);
    }
    return out;
}

// Euclidean projection onto { w >= 0, sum w_i = s }, by the sorting method.
// Sort ties are broken by index so the result is deterministic.
inline Vector simplex_project(const Vector& v, double s) {
    if (!(s > 0.0)) throw DataError("simplex_project: target sum must be > 0");
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (v[a] != v[b]) return v[a] > v[b];
        return a < b;
    });
    double cum = 0.0;
    double theta = 0.0;
    std::size_t rho = 0;
    for (std::size_t j = 0; j < n; ++j) {
        cum += v[order[j]];
        const double th = (cum - s) / static_cast<double>(j + 1);
        if (v[order[j]] - th > 0.0) {
            rho = j + 1;
            theta = th;
        }
    }
    (void)rho;
    Vector w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::max(v[i] - theta, 0.0);
    return w;
}

// Pi_C as prescribed: clamp entries into [0,1], then repair any row whose l1
// norm fell below eps by projecting it onto the eps-scaled simplex. This
// composite is the definition of the projection used throughout, not the
// exact Euclidean projection onto the joint set C.
inline Matrix project_C(const Matrix& w, const DictConstraint& c) {
    if (w.rows() != c.F || w.cols() != c.K) throw DataError("project_C: shape mismatch");
    Matrix out(w.rows(), w.cols());
    for (std::size_t i = 0; i < w.rows(); ++i) {
        for (std::size_t j = 0; j < w.cols(); ++j) {
            if (std::isnan(w(i, j))) throw DataError("project_C: NaN input");
            out(i, j) = std::clamp(w(i, j), 0.0, 1.0);
        }
        if (norm1(out.row(i)) < c.eps)
            out.set_row(i, simplex_project(out.row(i), c.eps));
    }
    return out;
}

inline bool is_member(const Matrix& w, const DictConstraint& c, double tol = 1e-12) {
    if (w.rows() != c.F || w.cols() != c.K) return false;
    for (std::size_t i = 0; i < w.rows(); ++i) {
        double row_l1 = 0.0;
        for (std::size_t j = 0; j < w.cols(); ++j) {
            const double x = w(i, j);
            if (x < -tol || x > 1.0 + tol) return false;
            row_l1 += std::fabs(x);
        }
        if (row_l1 < c.eps - tol) return false;
    }
    return true;
}

inline bool is_member(const Vector& h, const CoeffConstraint& c, double tol = 1e-12) {
    if (h.size() != c.K) return false;
    for (double x : h)
        if (x < c.eps_prime - tol || x > c.upper + tol) return false;
    return true;
}

}  // namespace onmf
