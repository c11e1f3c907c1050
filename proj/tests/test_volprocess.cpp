#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <hybridfx/volprocess.hpp>

using namespace hybridfx;

namespace {

double column_corr(const Matrix& x, std::size_t a, std::size_t b) {
    double ma = 0, mb = 0;
    const double n = static_cast<double>(x.rows());
    for (std::size_t k = 0; k < x.rows(); ++k) {
        ma += x(k, a);
        mb += x(k, b);
    }
    ma /= n;
    mb /= n;
    double saa = 0, sbb = 0, sab = 0;
    for (std::size_t k = 0; k < x.rows(); ++k) {
        saa += (x(k, a) - ma) * (x(k, a) - ma);
        sbb += (x(k, b) - mb) * (x(k, b) - mb);
        sab += (x(k, a) - ma) * (x(k, b) - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(EstimateCovariance, DegenerateColumnIsNotPd) {
    const IncrementSeries incs(Matrix{{1, 0}, {-1, 0}, {1, 0}, {-1, 0}});
    const auto c = sample_covariance(incs);
    EXPECT_NEAR(c(0, 0), 4.0 / 3.0, 1e-15);
    EXPECT_EQ(c(1, 1), 0.0);
    EXPECT_EQ(c(0, 1), 0.0);
    try {
        estimate_covariance(incs);
        FAIL();
    } catch (const NotPositiveDefinite& e) {
        EXPECT_EQ(e.pivot(), 2u);
        EXPECT_NEAR(e.min_eigenvalue(), 0.0, 1e-12);
    }
}

TEST(EstimateCovariance, IdenticalRowsGiveZeroCovariance) {
    // one column needs m + 1 = 2 rows
    EXPECT_THROW(estimate_covariance(IncrementSeries(Matrix{{0.3}, {0.3}})), NotPositiveDefinite);
    EXPECT_THROW(estimate_covariance(IncrementSeries(Matrix{{0.3, 0.1}, {0.3, 0.1}})), DataError);  // too few rows
}

TEST(EstimateCovariance, RecoversIdentityFromIndependentSample) {
    // Independent generator: standard library normals, not the library's stream.
    std::mt19937_64 gen(5);
    std::normal_distribution<double> z;
    Matrix x(100'000, 4);
    for (std::size_t k = 0; k < x.rows(); ++k)
        for (auto& v : x.row(k)) v = z(gen);
    const auto c = estimate_covariance(IncrementSeries(std::move(x)));
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(c(i, j), i == j ? 1.0 : 0.0, 0.02);
}

TEST(Regularize, Examples) {
    const auto c = regularize(Matrix{{1, 0}, {0, 0}}, 1e-6);
    EXPECT_EQ(c(0, 0), 1.0 + 1e-6);
    EXPECT_EQ(c(1, 1), 1e-6);
    EXPECT_EQ(c(0, 1), 0.0);

    const Matrix pd{{2, 0.5}, {0.5, 1}};
    EXPECT_EQ(regularize(pd, 0.0).entries(), pd);

    // eigenvalues -1, 1 shift to -0.5, 1.5
    try {
        regularize(Matrix{{0, 1}, {1, 0}}, 0.5);
        FAIL();
    } catch (const NotPositiveDefinite& e) {
        EXPECT_NEAR(e.min_eigenvalue(), -0.5, 1e-12);
    }
    EXPECT_THROW(regularize(pd, -1.0), DataError);
    EXPECT_THROW(regularize(Matrix{{1, 0.2}, {0.3, 1}}, 0.0), DataError);
}

TEST(Equicorrelated, Examples) {
    EXPECT_EQ(equicorrelated(4, 0.0, 1.0).entries(), Matrix::identity(4));
    EXPECT_THROW(equicorrelated(2, 1.0, 1.0), DataError);
    EXPECT_THROW(equicorrelated(4, -1.0 / 3.0, 1.0), DataError);
    const auto c = equicorrelated(4, 0.9, 0.01);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(c(i, j), i == j ? 1e-4 : 0.9e-4, 1e-18);
    EXPECT_NO_THROW(equicorrelated(4, -0.3, 1.0));
}

TEST(Cholesky, Examples) {
    EXPECT_EQ(cholesky(CovarianceMatrix(Matrix::identity(3))).entries(), Matrix::identity(3));

    const auto l = cholesky(CovarianceMatrix(Matrix{{4, 2}, {2, 5}})).entries();
    EXPECT_EQ(l, (Matrix{{2, 0}, {1, 2}}));

    try {
        cholesky_lower(Matrix{{1, 2}, {2, 1}});
        FAIL();
    } catch (const NotPositiveDefinite& e) {
        EXPECT_EQ(e.pivot(), 2u);
        EXPECT_NEAR(e.min_eigenvalue(), -1.0, 1e-12);
    }
    EXPECT_THROW(CovarianceMatrix(Matrix{{1, 2}, {2, 1}}), NotPositiveDefinite);
}

TEST(Cholesky, ReproducesCovariance) {
    const auto c = equicorrelated(6, 0.7, 0.03);
    const auto factor = c.cholesky();
    const auto& l = factor.entries();
    const auto rebuilt = l * l.transposed();
    EXPECT_LE(frobenius_norm(rebuilt - c.entries()) / frobenius_norm(c.entries()), 1e-10);
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_GT(l(i, i), 0.0);
        for (std::size_t j = i + 1; j < 6; ++j) EXPECT_EQ(l(i, j), 0.0);
    }
}

TEST(SampleIncrements, IdentityCovarianceLawOfLargeNumbers) {
    RngState rng(1);
    const auto inc = sample_increments(cholesky(CovarianceMatrix(Matrix::identity(4))), 1'000'000, rng);
    const auto c = sample_covariance(inc);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(c(i, j), i == j ? 1.0 : 0.0, 0.005);
}

TEST(SampleIncrements, SingleStep) {
    RngState rng(3);
    EXPECT_EQ(sample_increments(equicorrelated(4, 0.5, 1.0).cholesky(), 1, rng).steps(), 1u);
    EXPECT_THROW(sample_increments(equicorrelated(4, 0.5, 1.0).cholesky(), 0, rng), DataError);
}

TEST(SampleIncrements, EquicorrelatedPairwiseCorrelation) {
    RngState rng(4);
    const auto inc = sample_increments(equicorrelated(4, 0.9, 0.01).cholesky(), 1'000'000, rng);
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = a + 1; b < 4; ++b) {
            const double r = column_corr(inc.values(), a, b);
            EXPECT_GE(r, 0.89);
            EXPECT_LE(r, 0.91);
        }
}

TEST(SampleIncrementsProperty, DriftlessAndIndependentAcrossTime) {
    const double sigma = 0.01;
    RngState rng(10);
    const std::size_t n = 1'000'000;
    const auto inc = sample_increments(equicorrelated(4, 0.9, sigma).cholesky(), n, rng);
    const auto& x = inc.values();
    for (std::size_t j = 0; j < 4; ++j) {
        double mean = 0.0;
        for (std::size_t k = 0; k < n; ++k) mean += x(k, j);
        mean /= static_cast<double>(n);
        EXPECT_LE(std::abs(mean), 4.0 * sigma / std::sqrt(static_cast<double>(n)));

        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            den += (x(k, j) - mean) * (x(k, j) - mean);
            if (k + 1 < n) num += (x(k, j) - mean) * (x(k + 1, j) - mean);
        }
        EXPECT_LE(std::abs(num / den), 4.0 / std::sqrt(static_cast<double>(n)));
    }
}

TEST(SampleIncrementsProperty, Reproducible) {
    const auto l = equicorrelated(3, 0.4, 0.02).cholesky();
    RngState a(77), b(77);
    EXPECT_EQ(sample_increments(l, 5000, a), sample_increments(l, 5000, b));
}

TEST(SampleIncrementsProperty, EstimateConvergesWithSampleSize) {
    const auto c = equicorrelated(4, 0.6, 1.0);
    const auto l = c.cholesky();
    // Error scales as N^-1/2, so 100x the draws should cut the mean error ~10x.
    RngState rng(21);
    double err_small = 0.0, err_big = 0.0;
    for (int rep = 0; rep < 8; ++rep) {
        err_small += frobenius_norm(sample_covariance(sample_increments(l, 2'000, rng)) - c.entries());
        err_big += frobenius_norm(sample_covariance(sample_increments(l, 200'000, rng)) - c.entries());
    }
    EXPECT_GE(err_small / err_big, 5.0) << err_small << " vs " << err_big;
}

TEST(SymmetricEigenvalues, KnownSpectrum) {
    // equicorrelated(4, rho, 1): eigenvalues 1 - rho (x3), 1 + 3 rho
    const auto eig = symmetric_eigenvalues(equicorrelated(4, 0.5, 1.0).entries());
    EXPECT_NEAR(eig[0], 0.5, 1e-12);
    EXPECT_NEAR(eig[2], 0.5, 1e-12);
    EXPECT_NEAR(eig[3], 2.5, 1e-12);
}
