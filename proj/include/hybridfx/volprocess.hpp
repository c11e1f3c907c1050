#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "matrix.hpp"
#include "rng.hpp"
#include "timeseries.hpp"

namespace hybridfx {

namespace detail {

inline bool is_symmetric(const Matrix& a) {
    if (a.rows() != a.cols()) return false;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) {
            const double tol = 1e-12 * std::max(std::abs(a(i, j)), 1.0);
            if (std::abs(a(i, j) - a(j, i)) > tol) return false;
        }
    return true;
}

/// Plain Cholesky; returns the 1-based failing pivot, or 0 on success.
inline std::size_t cholesky_in_place(const Matrix& a, Matrix& l) {
    const std::size_t n = a.rows();
    l = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0)) return j + 1;
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return 0;
}

inline NotPositiveDefinite not_pd(const Matrix& a, std::size_t pivot, const std::string& context) {
    const double min_eig = symmetric_eigenvalues(a).front();
    std::ostringstream msg;
    msg.precision(6);
    msg << context << ": matrix is not positive definite (pivot " << pivot
        << " failed, smallest eigenvalue ~ " << min_eig << ")";
    return NotPositiveDefinite(msg.str(), pivot, min_eig);
}

}  // namespace detail

/// Lower-triangular L with L * L^T = C and a strictly positive diagonal.
class CholeskyFactor {
public:
    const Matrix& entries() const noexcept { return l_; }
    std::size_t dim() const noexcept { return l_.rows(); }

private:
    explicit CholeskyFactor(Matrix l) : l_(std::move(l)) {}
    friend class CovarianceMatrix;
    Matrix l_;
};

/// Symmetric positive-definite m x m covariance of the vol increments, in
/// vol^2 per step. Construction validates both properties.
class CovarianceMatrix {
public:
    explicit CovarianceMatrix(Matrix entries) : c_(std::move(entries)) {
        if (c_.rows() == 0 || c_.rows() != c_.cols()) throw DataError("covariance: matrix must be square and non-empty");
        for (double v : c_.data())
            if (!std::isfinite(v)) throw DataError("covariance: non-finite entry");
        if (!detail::is_symmetric(c_)) throw DataError("covariance: matrix is not symmetric");
        Matrix l;
        if (const auto pivot = detail::cholesky_in_place(c_, l); pivot != 0)
            throw detail::not_pd(c_, pivot, "covariance");
        l_ = std::move(l);
    }

    const Matrix& entries() const noexcept { return c_; }
    std::size_t dim() const noexcept { return c_.rows(); }
    double operator()(std::size_t i, std::size_t j) const { return c_(i, j); }

    /// The factor computed (and checked) at construction.
    CholeskyFactor cholesky() const { return CholeskyFactor(l_); }

    friend bool operator==(const CovarianceMatrix& a, const CovarianceMatrix& b) { return a.c_ == b.c_; }

private:
    Matrix c_;
    Matrix l_;
};

inline CholeskyFactor cholesky(const CovarianceMatrix& c) { return c.cholesky(); }

/// Cholesky of an arbitrary square matrix; throws NotPositiveDefinite with the
/// failing pivot. Used for candidates that are not yet a CovarianceMatrix.
inline Matrix cholesky_lower(const Matrix& a) {
    if (a.rows() != a.cols()) throw DataError("cholesky: matrix not square");
    Matrix l;
    if (const auto pivot = detail::cholesky_in_place(a, l); pivot != 0) throw detail::not_pd(a, pivot, "cholesky");
    return l;
}

/// Unbiased sample covariance (divisor N - 1, column means removed),
/// symmetrized as (A + A^T) / 2. No definiteness check.
inline Matrix sample_covariance(const IncrementSeries& incs) {
    const Matrix& x = incs.values();
    const std::size_t n = x.rows();
    const std::size_t m = x.cols();
    if (n < 2) throw DataError("sample_covariance: need at least 2 rows");
    std::vector<double> mean(m, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < m; ++j) mean[j] += x(k, j);
    for (auto& v : mean) v /= static_cast<double>(n);
    Matrix a(m, m);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < m; ++i) {
            const double di = x(k, i) - mean[i];
            for (std::size_t j = 0; j < m; ++j) a(i, j) += di * (x(k, j) - mean[j]);
        }
    Matrix out(m, m);
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) out(i, j) = 0.5 * (a(i, j) + a(j, i)) / denom;
    return out;
}

/// Sample covariance of historical increments. Throws NotPositiveDefinite
/// (carrying the smallest eigenvalue) when the estimate is singular or
/// indefinite; `regularize` the `sample_covariance` result in that case.
inline CovarianceMatrix estimate_covariance(const IncrementSeries& incs) {
    if (incs.steps() < incs.terms() + 1)
        throw DataError("estimate_covariance: need at least m + 1 = " + std::to_string(incs.terms() + 1) +
                        " increment rows, got " + std::to_string(incs.steps()));
    return CovarianceMatrix(sample_covariance(incs));
}

/// C + ridge * I.
inline CovarianceMatrix regularize(const Matrix& candidate, double ridge) {
    if (!(ridge >= 0.0)) throw DataError("regularize: ridge must be nonnegative");
    if (!detail::is_symmetric(candidate)) throw DataError("regularize: input is not symmetric");
    Matrix out = candidate;
    for (std::size_t i = 0; i < out.rows(); ++i) out(i, i) += ridge;
    return CovarianceMatrix(std::move(out));
}

/// C_ii = sigma^2, C_ij = rho * sigma^2; requires -1/(m-1) < rho < 1.
inline CovarianceMatrix equicorrelated(std::size_t m, double rho, double sigma) {
    if (m < 1) throw DataError("equicorrelated: m must be >= 1");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DataError("equicorrelated: sigma must be positive");
    const double lower = m > 1 ? -1.0 / static_cast<double>(m - 1) : -1.0;
    if (m > 1 && !(rho > lower && rho < 1.0))
        throw DataError("equicorrelated: rho must lie in (" + std::to_string(lower) + ", 1) for m = " +
                        std::to_string(m));
    const double var = sigma * sigma;
    Matrix c(m, m, rho * var);
    for (std::size_t i = 0; i < m; ++i) c(i, i) = var;
    return CovarianceMatrix(std::move(c));
}

/// Writes one N(0, C) draw L * z into `out` (size m), consuming m normals.
inline void draw_increment(const CholeskyFactor& l, RngState& rng, std::span<double> z, std::span<double> out) {
    const Matrix& f = l.entries();
    const std::size_t m = f.rows();
    for (std::size_t j = 0; j < m; ++j) z[j] = rng.normal();
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j <= i; ++j) s += f(i, j) * z[j];
        out[i] = s;
    }
}

/// `steps` iid rows of N(0, C) increments (C = L L^T); advances `rng`.
inline IncrementSeries sample_increments(const CholeskyFactor& l, std::size_t steps, RngState& rng) {
    if (steps < 1) throw DataError("sample_increments: steps must be >= 1");
    const std::size_t m = l.dim();
    Matrix out(steps, m);
    std::vector<double> z(m);
    for (std::size_t k = 0; k < steps; ++k) draw_increment(l, rng, z, out.row(k));
    return IncrementSeries(std::move(out));
}

}  // namespace hybridfx
