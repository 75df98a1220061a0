#pragma once

#include <cstddef>
#include <vector>

namespace trmc::nn {

/// Dense row-major matrix of doubles. Deliberately minimal: the network
/// kernels below are plain loops over contiguous rows.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const {
        return data[static_cast<std::size_t>(r) * cols + c];
    }
    double* row_ptr(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    const double* row_ptr(int r) const {
        return data.data() + static_cast<std::size_t>(r) * cols;
    }
    std::size_t size() const { return data.size(); }
    void zero() { data.assign(data.size(), 0.0); }
};

using Vector = std::vector<double>;

/// y = A x
inline void gemv(const Matrix& a, const double* x, double* y) {
    for (int r = 0; r < a.rows; ++r) {
        const double* row = a.row_ptr(r);
        double sum = 0.0;
        for (int c = 0; c < a.cols; ++c) sum += row[c] * x[c];
        y[r] = sum;
    }
}

/// y += A x
inline void gemv_add(const Matrix& a, const double* x, double* y) {
    for (int r = 0; r < a.rows; ++r) {
        const double* row = a.row_ptr(r);
        double sum = 0.0;
        for (int c = 0; c < a.cols; ++c) sum += row[c] * x[c];
        y[r] += sum;
    }
}

/// x += A^T y
inline void gemv_transpose_add(const Matrix& a, const double* y, double* x) {
    for (int r = 0; r < a.rows; ++r) {
        const double* row = a.row_ptr(r);
        const double yr = y[r];
        if (yr == 0.0) continue;
        for (int c = 0; c < a.cols; ++c) x[c] += row[c] * yr;
    }
}

/// A += y x^T
inline void outer_add(Matrix& a, const double* y, const double* x) {
    for (int r = 0; r < a.rows; ++r) {
        double* row = a.row_ptr(r);
        const double yr = y[r];
        if (yr == 0.0) continue;
        for (int c = 0; c < a.cols; ++c) row[c] += yr * x[c];
    }
}

}  // namespace trmc::nn
