#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "onmf/errors.hpp"
#include "onmf/matrix.hpp"
#include "onmf/rng.hpp"
#include "onmf/stream.hpp"

namespace onmf {

enum class NoiseKind { None, GammaMult, Poisson, Gaussian, UniformOutliers };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::None;
    double gamma_shape = 1000.0;    // kappa of the multiplicative Gamma noise
    double gaussian_sigma = 30.0;   // varsigma of the additive Gaussian noise
    double outlier_magnitude = 2000.0;  // lambda of the symmetric uniform outliers
    double outlier_frac = 0.3;      // |Q| per column = floor(frac * F)

    static NoiseSpec none() { return {NoiseKind::None}; }
    static NoiseSpec gamma_mult(double kappa = 1000.0) {
        if (!(kappa > 0.0)) throw ConfigError("gamma noise: kappa must be > 0");
        NoiseSpec n{NoiseKind::GammaMult};
        n.gamma_shape = kappa;
        return n;
    }
    static NoiseSpec poisson() { return {NoiseKind::Poisson}; }
    static NoiseSpec gaussian(double sigma = 30.0) {
        if (!(sigma > 0.0)) throw ConfigError("gaussian noise: sigma must be > 0");
        NoiseSpec n{NoiseKind::Gaussian};
        n.gaussian_sigma = sigma;
        return n;
    }
    static NoiseSpec uniform_outliers(double lambda = 2000.0, double frac = 0.3) {
        if (!(lambda > 0.0)) throw ConfigError("outlier noise: lambda must be > 0");
        if (!(frac > 0.0 && frac <= 1.0)) throw ConfigError("outlier noise: frac must be in (0,1]");
        NoiseSpec n{NoiseKind::UniformOutliers};
        n.outlier_magnitude = lambda;
        n.outlier_frac = frac;
        return n;
    }
};

struct SyntheticSpec {
    std::size_t F = 0;
    std::size_t K_truth = 40;
    std::size_t N = 0;
    double kappa = 1.0;    // offset of the shifted half-normal
    double sigma = 5.0;    // scale of the shifted half-normal
    NoiseSpec noise;
    double clip_hi = 4000.0;

    void validate() const {
        if (F == 0 || K_truth == 0 || N == 0)
            throw ConfigError("synthetic spec: F, K_truth, N must be positive");
        if (!(kappa > 0.0) || !(sigma > 0.0))
            throw ConfigError("synthetic spec: kappa, sigma must be > 0");
        if (!(clip_hi > 0.0)) throw ConfigError("synthetic spec: clip_hi must be > 0");
    }
};

struct GroundTruth {
    Matrix W;  // F x K_truth, entries >= kappa
    Matrix H;  // K_truth x N, entries >= kappa
    Matrix V;  // W H, strictly positive
};

// Entries of W and H are i.i.d. shifted half-normal: |N(0, sigma^2)| + kappa.
inline GroundTruth gen_ground_truth(const SyntheticSpec& spec, std::uint64_t seed) {
    spec.validate();
    auto rng = make_rng(seed, "ground-truth");
    std::normal_distribution<double> gauss(0.0, spec.sigma);
    auto draw = [&] { return std::fabs(gauss(rng)) + spec.kappa; };
    GroundTruth gt;
    gt.W = Matrix(spec.F, spec.K_truth);
    for (std::size_t i = 0; i < spec.F; ++i)
        for (std::size_t k = 0; k < spec.K_truth; ++k) gt.W(i, k) = draw();
    gt.H = Matrix(spec.K_truth, spec.N);
    for (std::size_t k = 0; k < spec.K_truth; ++k)
        for (std::size_t j = 0; j < spec.N; ++j) gt.H(k, j) = draw();
    gt.V = gt.W.matmul(gt.H);
    return gt;
}

namespace detail {

// floor(frac * f) distinct row indices, partial Fisher-Yates
inline std::vector<std::size_t> pick_rows(std::size_t f, double frac, std::mt19937_64& rng) {
    const std::size_t m = static_cast<std::size_t>(std::floor(frac * static_cast<double>(f)));
    std::vector<std::size_t> idx(f);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, f - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(m);
    return idx;
}

inline double noisy_entry(double clean, const NoiseSpec& noise, std::mt19937_64& rng) {
    switch (noise.kind) {
        case NoiseKind::None:
            return clean;
        case NoiseKind::GammaMult: {
            std::gamma_distribution<double> g(noise.gamma_shape, clean / noise.gamma_shape);
            return g(rng);
        }
        case NoiseKind::Poisson: {
            std::poisson_distribution<long long> p(clean);
            return static_cast<double>(p(rng));
        }
        case NoiseKind::Gaussian: {
            std::normal_distribution<double> g(clean, noise.gaussian_sigma);
            return g(rng);
        }
        case NoiseKind::UniformOutliers:
            throw std::logic_error("noisy_entry: outliers are drawn per column");
    }
    throw std::logic_error("noisy_entry: unhandled noise kind");
}

inline void contaminate_column(Vector& col, const NoiseSpec& noise, std::mt19937_64& rng) {
    if (noise.kind == NoiseKind::UniformOutliers) {
        std::uniform_real_distribution<double> u(-noise.outlier_magnitude,
                                                 noise.outlier_magnitude);
        for (std::size_t i : pick_rows(col.size(), noise.outlier_frac, rng)) col[i] += u(rng);
    } else {
        for (double& x : col) x = noisy_entry(x, noise, rng);
    }
}

}  // namespace detail

inline Matrix add_noise(const Matrix& v_clean, const NoiseSpec& noise, std::uint64_t seed) {
    auto rng = make_rng(seed, "noise");
    Matrix out = v_clean;
    for (std::size_t j = 0; j < out.cols(); ++j) {
        Vector col = out.col(j);
        detail::contaminate_column(col, noise, rng);
        out.set_col(j, col);
    }
    return out;
}

// SNR = 20 log10(||V_clean|| / ||V_noisy - V_clean||), +inf when noiseless.
inline double snr_db(const Matrix& v_clean, const Matrix& v_noisy) {
    if (!v_clean.same_shape(v_noisy)) throw DataError("snr: shape mismatch");
    const double noise_norm = (v_noisy - v_clean).frobenius_norm();
    if (noise_norm == 0.0) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(v_clean.frobenius_norm() / noise_norm);
}

// Streams the columns of a fixed matrix, replicated p times and visited in a
// seeded random order. Entries are clamped into [floor, clip_hi]; the floor
// also lifts zero entries into the divergence domain.
class MatrixStream : public SampleStream {
public:
    MatrixStream(Matrix data, std::size_t replication, double clip_hi, std::uint64_t seed,
                 bool shuffle = true, double floor = 1e-8)
        : data_(std::move(data)), clip_hi_(clip_hi), floor_(floor) {
        if (replication < 1) throw ConfigError("stream: replication must be >= 1");
        if (data_.cols() == 0) throw DataError("stream: empty data matrix");
        order_.resize(data_.cols() * replication);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        if (shuffle) {
            auto rng = make_rng(seed, "permute");
            std::shuffle(order_.begin(), order_.end(), rng);
        }
    }

    std::size_t dim() const override { return data_.rows(); }
    std::size_t total() const override { return order_.size(); }
    std::size_t yielded() const override { return cursor_; }

protected:
    Vector do_next() override {
        Vector v = data_.col(order_[cursor_++] % data_.cols());
        for (double& x : v) x = std::clamp(x, floor_, clip_hi_);
        return v;
    }

    Matrix data_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
    double clip_hi_;
    double floor_;
};

// Synthetic stream: the clean matrix V = W H is generated once; observation
// noise is drawn freshly for every replicated visit, so memory stays at one
// copy of V regardless of the replication factor.
class SyntheticStream : public SampleStream {
public:
    SyntheticStream(const SyntheticSpec& spec, std::size_t replication, std::uint64_t seed,
                    bool shuffle = true, double floor = 1e-8)
        : spec_(spec),
          clean_(gen_ground_truth(spec, seed).V),
          noise_rng_(make_rng(seed, "stream-noise")),
          clip_hi_(spec.clip_hi),
          floor_(floor) {
        if (replication < 1) throw ConfigError("stream: replication must be >= 1");
        order_.resize(spec.N * replication);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        if (shuffle) {
            auto rng = make_rng(seed, "permute");
            std::shuffle(order_.begin(), order_.end(), rng);
        }
    }

    const Matrix& clean() const { return clean_; }

    std::size_t dim() const override { return spec_.F; }
    std::size_t total() const override { return order_.size(); }
    std::size_t yielded() const override { return cursor_; }

protected:
    Vector do_next() override {
        Vector v = clean_.col(order_[cursor_++] % clean_.cols());
        detail::contaminate_column(v, spec_.noise, noise_rng_);
        for (double& x : v) x = std::clamp(x, floor_, clip_hi_);
        return v;
    }

private:
    SyntheticSpec spec_;
    Matrix clean_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
    std::mt19937_64 noise_rng_;
    double clip_hi_;
    double floor_;
};

// TF-IDF: counts to (1 + log c) * log(n / row-support), zeros stay zero.
inline Matrix tfidf_transform(const Matrix& counts) {
    const double n_docs = static_cast<double>(counts.cols());
    Matrix out(counts.rows(), counts.cols());
    for (std::size_t i = 0; i < counts.rows(); ++i) {
        std::size_t support = 0;
        for (std::size_t j = 0; j < counts.cols(); ++j) {
            if (counts(i, j) < 0.0) throw DataError("tfidf: negative count");
            if (counts(i, j) != 0.0) ++support;
        }
        if (support == 0) continue;  // word absent from every document
        const double idf = std::log(n_docs / static_cast<double>(support));
        for (std::size_t j = 0; j < counts.cols(); ++j)
            if (counts(i, j) != 0.0)
                out(i, j) = (1.0 + std::log(counts(i, j))) * idf;
    }
    return out;
}

// The r rows with largest l1 norm, stably ordered by norm then original index.
inline Matrix select_top_rows(const Matrix& m, std::size_t r) {
    if (r > m.rows()) throw DataError("select_top_rows: r exceeds row count");
    std::vector<std::size_t> idx(m.rows());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> norms(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) norms[i] = norm1(m.row(i));
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });
    Matrix out(r, m.cols());
    for (std::size_t i = 0; i < r; ++i) out.set_row(i, m.row(idx[i]));
    return out;
}

// Salt-and-pepper contamination: per column, floor(frac * F) distinct pixels
// receive an additive symmetric uniform draw of magnitude 255, then the
// column is projected back into [0, 255]. Untouched pixels pass through
// bitwise unchanged.
inline Matrix salt_pepper(const Matrix& images, double frac, std::uint64_t seed) {
    if (!(frac > 0.0 && frac <= 1.0)) throw ConfigError("salt_pepper: frac must be in (0,1]");
    for (std::size_t i = 0; i < images.rows(); ++i)
        for (std::size_t j = 0; j < images.cols(); ++j)
            if (images(i, j) < 0.0 || images(i, j) > 255.0)
                throw DataError("salt_pepper: pixel outside [0,255]");
    auto rng = make_rng(seed, "salt-pepper");
    std::uniform_real_distribution<double> u(-255.0, 255.0);
    Matrix out = images;
    for (std::size_t j = 0; j < out.cols(); ++j)
        for (std::size_t i : detail::pick_rows(out.rows(), frac, rng))
            out(i, j) = std::clamp(out(i, j) + u(rng), 0.0, 255.0);
    return out;
}

}  // namespace onmf
