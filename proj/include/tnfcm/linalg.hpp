#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tnfcm/common.hpp"

namespace tnfcm {

/// Dense row-major matrix of 64-bit reals.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::span<double> flat() noexcept { return data_; }
    std::span<const double> flat() const noexcept { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw DimensionError(detail::concat(what, ": dimension mismatch (", a, " vs ", b, ")"));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    require_same_size(a.size(), b.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_norm(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    require_same_size(x.size(), y.size(), "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

/// out = M * x
inline void matvec(const Matrix& m, std::span<const double> x, std::span<double> out) {
    require_same_size(m.cols(), x.size(), "matvec input");
    require_same_size(m.rows(), out.size(), "matvec output");
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double* w = m.row(r).data();
        double s = 0.0;
        for (std::size_t c = 0; c < x.size(); ++c) s += w[c] * x[c];
        out[r] = s;
    }
}

/// out = M^T * x
inline void matvec_transposed(const Matrix& m, std::span<const double> x, std::span<double> out) {
    require_same_size(m.rows(), x.size(), "matvec_transposed input");
    require_same_size(m.cols(), out.size(), "matvec_transposed output");
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        if (x[r] == 0.0) continue;
        const double* w = m.row(r).data();
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += w[c] * x[r];
    }
}

/// M += u * v^T
inline void add_outer(Matrix& m, std::span<const double> u, std::span<const double> v) {
    require_same_size(m.rows(), u.size(), "add_outer rows");
    require_same_size(m.cols(), v.size(), "add_outer cols");
    for (std::size_t r = 0; r < m.rows(); ++r) {
        if (u[r] == 0.0) continue;
        double* w = m.row(r).data();
        for (std::size_t c = 0; c < v.size(); ++c) w[c] += u[r] * v[c];
    }
}

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace tnfcm
