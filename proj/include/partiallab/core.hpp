#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace partiallab {

/// Dense row-major matrix of 64-bit floats.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

    bool operator==(const Matrix&) const = default;
};

/// Dense row-major matrix of label values in {-1, 0, +1}
/// (0 marks an unobserved slot).
struct LabelMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<int> data;

    LabelMatrix() = default;
    LabelMatrix(std::size_t r, std::size_t c, int fill = 0) : rows(r), cols(c), data(r * c, fill) {}

    int& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    int operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<int> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const int> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

    bool operator==(const LabelMatrix&) const = default;
};

inline bool all_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

inline bool all_finite(const Matrix& m) { return all_finite(std::span<const double>(m.data)); }

inline void require_finite(std::span<const double> v, const char* what) {
    if (!all_finite(v)) throw std::runtime_error(std::string("non-finite values in ") + what);
}

inline void require_finite(const Matrix& m, const char* what) {
    require_finite(std::span<const double>(m.data), what);
}

inline void require_shape(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument("shape mismatch: " + msg);
}

inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

/// softplus(x) = log(1 + e^x), stable for large |x|.
inline double softplus(double x) { return std::fmax(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); }

/// log sigma(x) computed as -softplus(-x); no overflow for |x| > 30.
inline double log_sigmoid(double x) { return -softplus(-x); }

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

// ---- small dense kernels used by the forward/backward passes ----

/// out = W x + b  (W is out_dim x in_dim)
inline void affine(const Matrix& W, std::span<const double> b, std::span<const double> x,
                   std::span<double> out) {
    require_shape(W.cols == x.size() && W.rows == out.size() && b.size() == out.size(),
                  "affine dims");
    for (std::size_t i = 0; i < W.rows; ++i) {
        double acc = b[i];
        const double* wrow = W.data.data() + i * W.cols;
        for (std::size_t j = 0; j < W.cols; ++j) acc += wrow[j] * x[j];
        out[i] = acc;
    }
}

/// out += W x
inline void matvec_add(const Matrix& W, std::span<const double> x, std::span<double> out) {
    require_shape(W.cols == x.size() && W.rows == out.size(), "matvec dims");
    for (std::size_t i = 0; i < W.rows; ++i) {
        double acc = 0.0;
        const double* wrow = W.data.data() + i * W.cols;
        for (std::size_t j = 0; j < W.cols; ++j) acc += wrow[j] * x[j];
        out[i] += acc;
    }
}

/// out += W^T d
inline void tmatvec_add(const Matrix& W, std::span<const double> d, std::span<double> out) {
    require_shape(W.rows == d.size() && W.cols == out.size(), "tmatvec dims");
    for (std::size_t i = 0; i < W.rows; ++i) {
        const double* wrow = W.data.data() + i * W.cols;
        for (std::size_t j = 0; j < W.cols; ++j) out[j] += wrow[j] * d[i];
    }
}

/// G += a b^T
inline void outer_add(Matrix& G, std::span<const double> a, std::span<const double> b) {
    require_shape(G.rows == a.size() && G.cols == b.size(), "outer dims");
    for (std::size_t i = 0; i < a.size(); ++i) {
        double* grow = G.data.data() + i * G.cols;
        for (std::size_t j = 0; j < b.size(); ++j) grow[j] += a[i] * b[j];
    }
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    require_shape(x.size() == y.size(), "axpy dims");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

}  // namespace partiallab
