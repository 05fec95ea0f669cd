#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace trafcast {

// Dense row-major matrix of doubles. Small helper for the network code,
// not a general linear algebra layer.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

    double& operator()(int r, int c) {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return a[static_cast<size_t>(r) * cols + c];
    }
    double operator()(int r, int c) const {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return a[static_cast<size_t>(r) * cols + c];
    }

    double* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }

    void fill(double v) { std::fill(a.begin(), a.end(), v); }
    bool empty() const { return a.empty(); }
};

using Vec = std::vector<double>;

// y += M x
inline void matvec_acc(const Matrix& m, const double* x, double* y) {
    for (int r = 0; r < m.rows; ++r) {
        const double* mr = m.row(r);
        double s = 0.0;
        for (int c = 0; c < m.cols; ++c) s += mr[c] * x[c];
        y[r] += s;
    }
}

// y += M^T x   (x has m.rows entries, y has m.cols entries)
inline void matvec_transpose_acc(const Matrix& m, const double* x, double* y) {
    for (int r = 0; r < m.rows; ++r) {
        const double* mr = m.row(r);
        const double xr = x[r];
        for (int c = 0; c < m.cols; ++c) y[c] += mr[c] * xr;
    }
}

// M += u v^T
inline void outer_acc(Matrix& m, const double* u, const double* v) {
    for (int r = 0; r < m.rows; ++r) {
        double* mr = m.row(r);
        const double ur = u[r];
        for (int c = 0; c < m.cols; ++c) mr[c] += ur * v[c];
    }
}

}  // namespace trafcast
