#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace onmf {

using Vector = std::vector<double>;

// Dense row-major matrix, just enough linear algebra for NMF updates.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<Vector>& rows) {
        if (rows.empty()) throw std::invalid_argument("Matrix::from_rows: empty");
        Matrix m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m.cols_)
                throw std::invalid_argument("Matrix::from_rows: ragged rows");
            for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }
    double operator()(std::size_t i, std::size_t j) const {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    Vector col(std::size_t j) const {
        Vector c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }
    void set_col(std::size_t j, const Vector& c) {
        assert(c.size() == rows_);
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = c[i];
    }
    Vector row(std::size_t i) const {
        Vector r(cols_);
        for (std::size_t j = 0; j < cols_; ++j) r[j] = (*this)(i, j);
        return r;
    }
    void set_row(std::size_t i, const Vector& r) {
        assert(r.size() == cols_);
        for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = r[j];
    }

    // y = A x
    Vector mul(const Vector& x) const {
        if (x.size() != cols_) throw std::invalid_argument("Matrix::mul: size mismatch");
        Vector y(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            double s = 0.0;
            const double* r = &data_[i * cols_];
            for (std::size_t j = 0; j < cols_; ++j) s += r[j] * x[j];
            y[i] = s;
        }
        return y;
    }

    // y = A^T x
    Vector mul_transpose(const Vector& x) const {
        if (x.size() != rows_) throw std::invalid_argument("Matrix::mul_transpose: size mismatch");
        Vector y(cols_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            const double* r = &data_[i * cols_];
            for (std::size_t j = 0; j < cols_; ++j) y[j] += r[j] * x[i];
        }
        return y;
    }

    Matrix matmul(const Matrix& b) const {
        if (cols_ != b.rows_) throw std::invalid_argument("Matrix::matmul: size mismatch");
        Matrix c(rows_, b.cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t k = 0; k < cols_; ++k) {
                const double a = (*this)(i, k);
                if (a == 0.0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += a * b(k, j);
            }
        return c;
    }

    Matrix& operator+=(const Matrix& o) {
        assert(same_shape(o));
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        assert(same_shape(o));
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Matrix& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return std::sqrt(s);
    }

    bool has_nan() const {
        for (double v : data_)
            if (std::isnan(v)) return true;
        return false;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
inline Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
inline Matrix operator*(double s, Matrix a) { return a *= s; }

// g h^T
inline Matrix outer(const Vector& g, const Vector& h) {
    Matrix m(g.size(), h.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < h.size(); ++j) m(i, j) = g[i] * h[j];
    return m;
}

inline double dot(const Vector& a, const Vector& b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vector& a) { return std::sqrt(dot(a, a)); }

inline double norm1(const Vector& a) {
    double s = 0.0;
    for (double v : a) s += std::fabs(v);
    return s;
}

inline double norm_inf(const Vector& a) {
    double s = 0.0;
    for (double v : a) s = std::max(s, std::fabs(v));
    return s;
}

// Largest singular value of W via power iteration on W^T W.
inline double spectral_norm(const Matrix& w, int max_iters = 50, double rel_tol = 1e-8) {
    if (w.size() == 0) return 0.0;
    Vector x(w.cols(), 1.0 / std::sqrt(static_cast<double>(w.cols())));
    double sigma = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        Vector y = w.mul_transpose(w.mul(x));
        const double n = norm2(y);
        if (n == 0.0) return 0.0;
        for (double& v : y) v /= n;
        const double s = std::sqrt(n);
        if (sigma > 0.0 && std::fabs(s - sigma) <= rel_tol * sigma) {
            sigma = s;
            break;
        }
        sigma = s;
        x = std::move(y);
    }
    return sigma;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps.
inline Vector symmetric_eigenvalues(Matrix a, int max_sweeps = 50, double tol = 1e-14) {
    if (a.rows() != a.cols()) throw std::invalid_argument("symmetric_eigenvalues: not square");
    const std::size_t n = a.rows();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off <= tol * tol) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(a(p, q)) <= tol) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
    }
    Vector eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
    return eig;
}

}  // namespace onmf
