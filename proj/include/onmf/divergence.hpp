#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "onmf/errors.hpp"
#include "onmf/matrix.hpp"

namespace onmf {

// The divergence catalog: Csiszar f-divergences, Bregman divergences and
// robust metrics, all with signature d(x||y) on positive vectors.
enum class DivKind {
    CsiszarL1,   // sum |x_i - y_i|, Csiszar family (phi(u) = |u - 1|)
    Alpha,       // alpha-divergence, alpha not in {0, 1}
    Hellinger,   // alpha = 1/2
    KL,          // alpha -> 1 and beta -> 1 limit, exposed once
    Mahalanobis, // (x-y)^T A (x-y) / 2
    Beta,        // beta-divergence, beta not in {0, 1}
    IS,          // Itakura-Saito, beta -> 0 limit
    SquaredL2,   // ||x-y||^2 / 2, beta = 2
    RobustL1,    // sum |x_i - y_i|
    RobustL2,    // ||x-y|| (not squared)
    Huber,       // sum h_alpha(x_i - y_i)
};

struct DivergenceClass {
    bool in_D1 = false;  // differentiable in y with locally Lipschitz gradient
    bool in_D2 = false;  // convex in y
};

class DivergenceSpec {
public:
    static DivergenceSpec csiszar_l1() { return DivergenceSpec(DivKind::CsiszarL1); }
    static DivergenceSpec hellinger() { return DivergenceSpec(DivKind::Hellinger); }
    static DivergenceSpec kl() { return DivergenceSpec(DivKind::KL); }
    static DivergenceSpec is() { return DivergenceSpec(DivKind::IS); }
    static DivergenceSpec squared_l2() { return DivergenceSpec(DivKind::SquaredL2); }
    static DivergenceSpec robust_l1() { return DivergenceSpec(DivKind::RobustL1); }
    static DivergenceSpec robust_l2() { return DivergenceSpec(DivKind::RobustL2); }

    static DivergenceSpec alpha(double a) {
        if (a == 0.0 || a == 1.0)
            throw ConfigError("alpha divergence: alpha must not be 0 or 1");
        DivergenceSpec d(DivKind::Alpha);
        d.param_ = a;
        return d;
    }

    static DivergenceSpec beta(double b) {
        if (b == 0.0 || b == 1.0)
            throw ConfigError("beta divergence: beta must not be 0 or 1");
        DivergenceSpec d(DivKind::Beta);
        d.param_ = b;
        return d;
    }

    static DivergenceSpec huber(double a) {
        if (!(a > 0.0)) throw ConfigError("huber: alpha must be > 0");
        DivergenceSpec d(DivKind::Huber);
        d.param_ = a;
        return d;
    }

    static DivergenceSpec mahalanobis(const Matrix& a) {
        if (a.rows() != a.cols())
            throw ConfigError("mahalanobis: matrix must be square");
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = i + 1; j < a.cols(); ++j)
                if (std::fabs(a(i, j) - a(j, i)) > 1e-10)
                    throw ConfigError("mahalanobis: matrix must be symmetric");
        for (double ev : symmetric_eigenvalues(a))
            if (ev < -1e-10)
                throw ConfigError("mahalanobis: matrix must be positive semidefinite");
        DivergenceSpec d(DivKind::Mahalanobis);
        d.mat_ = a;
        return d;
    }

    DivKind kind() const { return kind_; }
    double param() const { return param_; }
    const Matrix& mahalanobis_matrix() const { return mat_; }

    // Robust metrics admit nonnegative (rather than strictly positive) inputs.
    bool allows_zero() const {
        return kind_ == DivKind::RobustL1 || kind_ == DivKind::RobustL2 ||
               kind_ == DivKind::Huber;
    }

    std::string name() const {
        char buf[64];
        switch (kind_) {
            case DivKind::CsiszarL1: return "csiszar-l1";
            case DivKind::Hellinger: return "hellinger";
            case DivKind::KL: return "kl";
            case DivKind::IS: return "is";
            case DivKind::SquaredL2: return "squared-l2";
            case DivKind::RobustL1: return "l1";
            case DivKind::RobustL2: return "l2";
            case DivKind::Mahalanobis: return "mahalanobis";
            case DivKind::Alpha:
                std::snprintf(buf, sizeof(buf), "alpha:%.17g", param_);
                return buf;
            case DivKind::Beta:
                std::snprintf(buf, sizeof(buf), "beta:%.17g", param_);
                return buf;
            case DivKind::Huber:
                std::snprintf(buf, sizeof(buf), "huber:%.17g", param_);
                return buf;
        }
        return "?";
    }

private:
    explicit DivergenceSpec(DivKind k) : kind_(k) {}

    DivKind kind_;
    double param_ = 0.0;
    Matrix mat_;
};

namespace detail {

inline void check_pair(const DivergenceSpec& div, const Vector& x, const Vector& y) {
    if (x.size() != y.size())
        throw DataError("divergence: argument length mismatch");
    if (x.empty()) throw DataError("divergence: empty vectors");
    const bool strict = !div.allows_zero();
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw DataError("divergence: non-finite entry");
        if (x[i] < 0.0 || y[i] < 0.0 || (strict && (x[i] == 0.0 || y[i] == 0.0)))
            throw DataError("divergence: entries must be positive for kind " + div.name());
    }
    if (div.kind() == DivKind::Mahalanobis &&
        div.mahalanobis_matrix().rows() != x.size())
        throw DataError("mahalanobis: matrix dimension does not match vectors");
}

inline double huber_scalar(double u, double a) {
    const double au = std::fabs(u);
    return au <= a ? 0.5 * u * u : a * (au - 0.5 * a);
}

// d h_a(u) / du
inline double huber_deriv(double u, double a) {
    if (u > a) return a;
    if (u < -a) return -a;
    return u;
}

}  // namespace detail

inline double eval(const DivergenceSpec& div, const Vector& x, const Vector& y) {
    detail::check_pair(div, x, y);
    const std::size_t n = x.size();
    double s = 0.0;
    switch (div.kind()) {
        case DivKind::CsiszarL1:
        case DivKind::RobustL1:
            for (std::size_t i = 0; i < n; ++i) s += std::fabs(x[i] - y[i]);
            return s;
        case DivKind::RobustL2:
            for (std::size_t i = 0; i < n; ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
            return std::sqrt(s);
        case DivKind::SquaredL2:
            for (std::size_t i = 0; i < n; ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
            return 0.5 * s;
        case DivKind::Huber:
            for (std::size_t i = 0; i < n; ++i)
                s += detail::huber_scalar(x[i] - y[i], div.param());
            return s;
        case DivKind::KL:
            for (std::size_t i = 0; i < n; ++i)
                s += x[i] * std::log(x[i] / y[i]) - x[i] + y[i];
            return s;
        case DivKind::IS:
            for (std::size_t i = 0; i < n; ++i)
                s += std::log(y[i] / x[i]) + x[i] / y[i] - 1.0;
            return s;
        case DivKind::Hellinger:
            for (std::size_t i = 0; i < n; ++i) {
                const double d = std::sqrt(x[i]) - std::sqrt(y[i]);
                s += d * d;
            }
            return 2.0 * s;
        case DivKind::Alpha: {
            const double a = div.param();
            for (std::size_t i = 0; i < n; ++i)
                s += y[i] * (std::pow(x[i] / y[i], a) - 1.0) - a * (x[i] - y[i]);
            return s / (a * (a - 1.0));
        }
        case DivKind::Beta: {
            const double b = div.param();
            for (std::size_t i = 0; i < n; ++i)
                s += std::pow(x[i], b) - std::pow(y[i], b) -
                     b * std::pow(y[i], b - 1.0) * (x[i] - y[i]);
            return s / (b * (b - 1.0));
        }
        case DivKind::Mahalanobis: {
            const Matrix& a = div.mahalanobis_matrix();
            Vector r(n);
            for (std::size_t i = 0; i < n; ++i) r[i] = x[i] - y[i];
            return 0.5 * dot(r, a.mul(r));
        }
    }
    throw std::logic_error("eval: unhandled divergence kind");
}

// Gradient of y |-> d(x||y); for the nonsmooth robust metrics this returns one
// valid subgradient element, with the zero element chosen at kinks.
inline Vector grad_y(const DivergenceSpec& div, const Vector& x, const Vector& y) {
    detail::check_pair(div, x, y);
    const std::size_t n = x.size();
    Vector g(n, 0.0);
    switch (div.kind()) {
        case DivKind::CsiszarL1:
        case DivKind::RobustL1:
            for (std::size_t i = 0; i < n; ++i) {
                const double r = y[i] - x[i];
                g[i] = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
            }
            return g;
        case DivKind::RobustL2: {
            double nrm = 0.0;
            for (std::size_t i = 0; i < n; ++i) nrm += (y[i] - x[i]) * (y[i] - x[i]);
            nrm = std::sqrt(nrm);
            if (nrm == 0.0) return g;  // zero element of the subdifferential
            for (std::size_t i = 0; i < n; ++i) g[i] = (y[i] - x[i]) / nrm;
            return g;
        }
        case DivKind::SquaredL2:
            for (std::size_t i = 0; i < n; ++i) g[i] = y[i] - x[i];
            return g;
        case DivKind::Huber:
            for (std::size_t i = 0; i < n; ++i)
                g[i] = -detail::huber_deriv(x[i] - y[i], div.param());
            return g;
        case DivKind::KL:
            for (std::size_t i = 0; i < n; ++i) g[i] = 1.0 - x[i] / y[i];
            return g;
        case DivKind::IS:
            for (std::size_t i = 0; i < n; ++i) g[i] = (y[i] - x[i]) / (y[i] * y[i]);
            return g;
        case DivKind::Hellinger:
            for (std::size_t i = 0; i < n; ++i)
                g[i] = 2.0 * (1.0 - std::sqrt(x[i] / y[i]));
            return g;
        case DivKind::Alpha: {
            const double a = div.param();
            for (std::size_t i = 0; i < n; ++i)
                g[i] = (1.0 - std::pow(x[i] / y[i], a)) / a;
            return g;
        }
        case DivKind::Beta: {
            const double b = div.param();
            for (std::size_t i = 0; i < n; ++i)
                g[i] = std::pow(y[i], b - 2.0) * (y[i] - x[i]);
            return g;
        }
        case DivKind::Mahalanobis: {
            const Matrix& a = div.mahalanobis_matrix();
            Vector r(n);
            for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - x[i];
            return a.mul(r);
        }
    }
    throw std::logic_error("grad_y: unhandled divergence kind");
}

// Subgradient of W |-> d(v||Wh): chain rule g h^T with g = grad_y at y = Wh.
inline Matrix grad_W(const DivergenceSpec& div, const Vector& v, const Matrix& w,
                     const Vector& h) {
    if (w.rows() != v.size() || w.cols() != h.size())
        throw DataError("grad_W: shape mismatch");
    return outer(grad_y(div, v, w.mul(h)), h);
}

// Subgradient of h |-> d(v||Wh): W^T g.
inline Vector grad_h(const DivergenceSpec& div, const Vector& v, const Matrix& w,
                     const Vector& h) {
    if (w.rows() != v.size() || w.cols() != h.size())
        throw DataError("grad_h: shape mismatch");
    return w.mul_transpose(grad_y(div, v, w.mul(h)));
}

inline DivergenceClass class_of(const DivergenceSpec& div) {
    DivergenceClass c;
    switch (div.kind()) {
        case DivKind::CsiszarL1:
        case DivKind::RobustL1:
        case DivKind::RobustL2:
            c.in_D1 = false;
            break;
        default:
            c.in_D1 = true;
            break;
    }
    // D2 excludes the beta sub-family with beta in (-inf,1) u (2,inf);
    // IS is the beta -> 0 member of that sub-family.
    switch (div.kind()) {
        case DivKind::IS:
            c.in_D2 = false;
            break;
        case DivKind::Beta:
            c.in_D2 = div.param() >= 1.0 && div.param() <= 2.0;
            break;
        default:
            c.in_D2 = true;
            break;
    }
    return c;
}

struct CoeffBox {
    double eps_prime;
    double upper;
};

namespace detail {
// max of y^p over [lo, hi], lo > 0
inline double pow_range_max(double lo, double hi, double p) {
    return std::max(std::pow(lo, p), std::pow(hi, p));
}
}  // namespace detail

// Upper bound on the Lipschitz constant of grad of h |-> d(v||Wh) over the box
// H = [eps', U]^K. Per-entry curvature of d(x||.) is bounded over the interval
// of reachable (Wh)_i values, then scaled by sigma_max(W)^2. Returns nullopt
// for the nonsmooth kinds (D2 \ D1).
inline std::optional<double> lipschitz_bound(const DivergenceSpec& div, const Vector& v,
                                             const Matrix& w, const CoeffBox& box) {
    if (!class_of(div).in_D1) return std::nullopt;
    if (w.rows() != v.size()) throw DataError("lipschitz_bound: shape mismatch");
    const double sigma = spectral_norm(w);
    const double sigma2 = sigma * sigma;

    double vmax = 0.0;
    double vmin = std::numeric_limits<double>::infinity();
    for (double vi : v) {
        vmax = std::max(vmax, vi);
        vmin = std::min(vmin, vi);
    }

    // reachable range of (Wh)_i over h in H
    double row_min = std::numeric_limits<double>::infinity();
    double row_max = 0.0;
    for (std::size_t i = 0; i < w.rows(); ++i) {
        const double rs = norm1(w.row(i));
        row_min = std::min(row_min, rs);
        row_max = std::max(row_max, rs);
    }
    const double y_lo = box.eps_prime * row_min;
    const double y_hi = box.upper * row_max;

    auto need_positive_y = [&]() {
        if (!(y_lo > 0.0))
            throw DataError("lipschitz_bound: W has a zero row, (Wh) can vanish");
    };

    double curv = 0.0;
    switch (div.kind()) {
        case DivKind::SquaredL2:
        case DivKind::Huber:
            curv = 1.0;
            break;
        case DivKind::Mahalanobis: {
            double lmax = 0.0;
            for (double ev : symmetric_eigenvalues(div.mahalanobis_matrix()))
                lmax = std::max(lmax, ev);
            curv = lmax;
            break;
        }
        case DivKind::KL:
            need_positive_y();
            curv = vmax / (y_lo * y_lo);
            break;
        case DivKind::IS:
            need_positive_y();
            curv = 1.0 / (y_lo * y_lo) + 2.0 * vmax / (y_lo * y_lo * y_lo);
            break;
        case DivKind::Hellinger:
            need_positive_y();
            curv = std::sqrt(vmax) * detail::pow_range_max(y_lo, y_hi, -1.5);
            break;
        case DivKind::Alpha: {
            need_positive_y();
            const double a = div.param();
            const double xa = a >= 0.0 ? std::pow(vmax, a) : std::pow(vmin, a);
            curv = xa * detail::pow_range_max(y_lo, y_hi, -a - 1.0);
            break;
        }
        case DivKind::Beta: {
            need_positive_y();
            const double b = div.param();
            curv = std::fabs(b - 1.0) * detail::pow_range_max(y_lo, y_hi, b - 2.0) +
                   std::fabs(b - 2.0) * vmax * detail::pow_range_max(y_lo, y_hi, b - 3.0);
            break;
        }
        default:
            return std::nullopt;
    }
    return sigma2 * curv;
}

// Parse a divergence named as in config files, e.g. "kl", "beta:1.5",
// "huber:1.0", "mahalanobis:<path>". The loader resolves the matrix file for
// the mahalanobis case.
inline DivergenceSpec parse_divergence(
    std::string_view text,
    const std::function<Matrix(const std::string&)>& load_matrix = nullptr) {
    std::string head(text);
    std::string arg;
    if (auto pos = head.find(':'); pos != std::string::npos) {
        arg = head.substr(pos + 1);
        head = head.substr(0, pos);
    }
    auto num_arg = [&](const char* who) {
        try {
            std::size_t used = 0;
            const double x = std::stod(arg, &used);
            if (used != arg.size()) throw std::invalid_argument(arg);
            return x;
        } catch (const std::exception&) {
            throw ConfigError(std::string(who) + ": bad numeric parameter '" + arg + "'");
        }
    };
    if (head == "kl") return DivergenceSpec::kl();
    if (head == "is") return DivergenceSpec::is();
    if (head == "hellinger") return DivergenceSpec::hellinger();
    if (head == "squared-l2") return DivergenceSpec::squared_l2();
    if (head == "l1") return DivergenceSpec::robust_l1();
    if (head == "csiszar-l1") return DivergenceSpec::csiszar_l1();
    if (head == "l2") return DivergenceSpec::robust_l2();
    if (head == "alpha") return DivergenceSpec::alpha(num_arg("alpha"));
    if (head == "beta") return DivergenceSpec::beta(num_arg("beta"));
    if (head == "huber") return DivergenceSpec::huber(num_arg("huber"));
    if (head == "mahalanobis") {
        if (!load_matrix)
            throw ConfigError("mahalanobis: no matrix loader available in this context");
        if (arg.empty()) throw ConfigError("mahalanobis: missing matrix file path");
        return DivergenceSpec::mahalanobis(load_matrix(arg));
    }
    throw ConfigError("unknown divergence '" + std::string(text) + "'");
}

}  // namespace onmf
