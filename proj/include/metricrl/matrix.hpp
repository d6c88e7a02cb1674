#pragma once

// Minimal dense kernel: row-major double matrices and the handful of BLAS-1/2
// operations the MLP needs. Everything is 64-bit; desk-scale workloads make
// precision cheaper than debugging drift.

#include <cmath>
#include <cstddef>
#include <vector>

#include "metricrl/errors.hpp"

namespace metricrl {

using Vector = std::vector<double>;

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;  // row-major, size rows*cols

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    void fill(double v) { data.assign(data.size(), v); }
};

// y = W x
inline void matvec(const Matrix& w, const Vector& x, Vector& y) {
    if (static_cast<int>(x.size()) != w.cols)
        throw UsageError("matvec: dimension mismatch");
    y.assign(static_cast<std::size_t>(w.rows), 0.0);
    const double* wd = w.data.data();
    for (int r = 0; r < w.rows; ++r) {
        const double* row = wd + static_cast<std::size_t>(r) * w.cols;
        double acc = 0.0;
        for (int c = 0; c < w.cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
}

// y = W^T x
inline void matvec_transpose(const Matrix& w, const Vector& x, Vector& y) {
    if (static_cast<int>(x.size()) != w.rows)
        throw UsageError("matvec_transpose: dimension mismatch");
    y.assign(static_cast<std::size_t>(w.cols), 0.0);
    const double* wd = w.data.data();
    for (int r = 0; r < w.rows; ++r) {
        const double xr = x[r];
        if (xr == 0.0) continue;
        const double* row = wd + static_cast<std::size_t>(r) * w.cols;
        for (int c = 0; c < w.cols; ++c) y[c] += row[c] * xr;
    }
}

// W += scale * a b^T
inline void add_outer(Matrix& w, const Vector& a, const Vector& b, double scale) {
    double* wd = w.data.data();
    for (int r = 0; r < w.rows; ++r) {
        const double ar = a[r] * scale;
        if (ar == 0.0) continue;
        double* row = wd + static_cast<std::size_t>(r) * w.cols;
        for (int c = 0; c < w.cols; ++c) row[c] += ar * b[c];
    }
}

inline void axpy(double alpha, const Vector& x, Vector& y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

inline double dot(const Vector& a, const Vector& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double norm(const Vector& a) { return std::sqrt(dot(a, a)); }

inline double distance(const Vector& a, const Vector& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

inline bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Matrix& m) {
    for (double x : m.data)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace metricrl
