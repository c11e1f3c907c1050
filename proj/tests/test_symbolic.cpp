#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <hybridfx/symbolic.hpp>

using namespace hybridfx;

namespace {

/// Exact law of S for independent (identity-covariance) terms: each of the 2^m
/// sign patterns is equally likely. Returns P(S = s) at index s + m.
std::vector<double> enumerate_independent_sign_sums(int m) {
    std::vector<double> pmf(2 * m + 1, 0.0);
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
        int s = 0;
        for (int j = 0; j < m; ++j) s += (mask >> j) & 1u ? 1 : -1;
        pmf[s + m] += 1.0 / static_cast<double>(1u << m);
    }
    return pmf;
}

double enumerated_q(int m) {
    const auto pmf = enumerate_independent_sign_sums(m);
    double inside = 0.0;
    for (int s = -1; s <= 1; ++s)
        if (std::abs(s) <= m) inside += pmf[s + m];
    return 0.5 * (1.0 - inside);
}

}  // namespace

TEST(HThreshold, Definition) {
    EXPECT_EQ(h_threshold(0.5, 0.0), Sign::Plus);
    EXPECT_EQ(h_threshold(-0.3, 0.0), Sign::Minus);
    EXPECT_EQ(h_threshold(0.5, 1.0), Sign::Zero);
    EXPECT_EQ(h_threshold(1.0, 1.0), Sign::Zero);
    EXPECT_EQ(h_threshold(-1.0, 1.0), Sign::Zero);
    EXPECT_EQ(h_threshold(0.0, 0.0), Sign::Zero);
}

TEST(GSignal, Examples) {
    const double up[] = {0.1, 0.2, 0.3, 0.4};
    const double tie[] = {0.1, 0.2, -0.3, -0.4};
    const double down[] = {-0.1, -0.2, -0.3, 0.4};
    EXPECT_EQ(sign_sum(up), 4);
    EXPECT_EQ(g_signal(up), Sign::Plus);
    EXPECT_EQ(sign_sum(tie), 0);
    EXPECT_EQ(g_signal(tie), Sign::Zero);
    EXPECT_EQ(sign_sum(down), -2);
    EXPECT_EQ(g_signal(down), Sign::Minus);
}

TEST(GSignal, ZeroIncrementsAreNeutral) {
    const double stale[] = {0.0, 0.1, 0.2, 0.0};
    EXPECT_EQ(sign_sum(stale), 2);
    EXPECT_EQ(g_signal(stale), Sign::Plus);
}

TEST(GSignal, GeneralizedRule) {
    ThresholdRule rule{{0.05, 0.05, 0.05, 0.05}, 2.0};
    const double row[] = {0.1, 0.2, 0.01, 0.3};  // S = 3 under inner 0.05
    EXPECT_EQ(sign_sum(row, rule), 3);
    EXPECT_EQ(g_signal(row, rule), Sign::Plus);
    rule.outer = 3.0;
    EXPECT_EQ(g_signal(row, rule), Sign::Zero);
    const double short_row[] = {0.1, 0.2};
    EXPECT_THROW(sign_sum(short_row, rule), DataError);
}

TEST(GSignalProperty, AntisymmetricUnderNegation) {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 10'000; ++trial) {
        std::vector<double> row(1 + trial % 6), neg(row.size());
        for (std::size_t j = 0; j < row.size(); ++j) {
            row[j] = trial % 5 == 0 && j == 0 ? 0.0 : z(gen);
            neg[j] = -row[j];
        }
        ASSERT_EQ(g_signal(neg), -g_signal(row));
        ASSERT_EQ(sign_sum(neg), -sign_sum(row));
    }
}

TEST(SignSumDistribution, IdentityMatchesBinomialEnumeration) {
    const auto pmf = enumerate_independent_sign_sums(4);
    ASSERT_DOUBLE_EQ(pmf[4], 6.0 / 16.0);
    RngState rng(1);
    const auto measure = sign_sum_distribution(CovarianceMatrix(Matrix::identity(4)), 1'000'000, rng);
    ASSERT_EQ(measure.support, (std::vector<int>{-4, -2, 0, 2, 4}));
    EXPECT_NEAR(measure.probability(0), 0.375, 0.002);
    double total = 0.0;
    for (std::size_t i = 0; i < measure.support.size(); ++i) {
        const double p = pmf[measure.support[i] + 4];
        const double se = std::sqrt(p * (1.0 - p) / 1e6);
        EXPECT_NEAR(measure.probabilities[i], p, 4.0 * se);
        total += measure.probabilities[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_EQ(measure.off_lattice_count, 0u);
}

TEST(SignSumDistribution, ComonotoneLimitConcentratesOnExtremes) {
    RngState rng(2);
    const auto measure = sign_sum_distribution(equicorrelated(4, 0.999, 1.0), 1'000'000, rng);
    EXPECT_NEAR(measure.probability(4), 0.5, 0.02);
    EXPECT_NEAR(measure.probability(-4), 0.5, 0.02);
    EXPECT_LT(measure.probability(0), 0.02);
}

TEST(SignSumDistribution, SingleTermIsFairCoin) {
    RngState rng(3);
    const std::size_t n = 100'000;
    const auto measure = sign_sum_distribution(CovarianceMatrix(Matrix{{0.04}}), n, rng);
    ASSERT_EQ(measure.support, (std::vector<int>{-1, 1}));
    const double se = std::sqrt(0.25 / static_cast<double>(n));
    EXPECT_NEAR(measure.probability(1), 0.5, 3.0 * se);
    EXPECT_NEAR(measure.probability(-1), 0.5, 3.0 * se);
    EXPECT_THROW(sign_sum_distribution(CovarianceMatrix(Matrix{{1.0}}), 999, rng), DataError);
}

TEST(SignSumDistributionProperty, SymmetricAndParityPreserving) {
    for (double rho : {0.0, 0.5, 0.9}) {
        RngState rng(40);
        const std::size_t n = 400'000;
        const auto measure = sign_sum_distribution(equicorrelated(5, rho, 0.01), n, rng);
        EXPECT_EQ(measure.off_lattice_count, 0u);
        for (int s = 1; s <= 5; s += 2) {
            const double a = measure.probability(s), b = measure.probability(-s);
            const double se = std::sqrt((a + b) / static_cast<double>(n));
            EXPECT_NEAR(a, b, 4.0 * se) << "rho " << rho << " s " << s;
        }
        for (int s = -5; s <= 5; ++s)
            if ((s + 5) % 2 == 1) {
                EXPECT_EQ(measure.tally[static_cast<std::size_t>(s + 5)], 0u);
            }
    }
}

TEST(QProbability, IdentityMatchesEnumeration) {
    const double exact = enumerated_q(4);
    ASSERT_DOUBLE_EQ(exact, 0.3125);
    RngState rng(5);
    const auto q = q_probability(CovarianceMatrix(Matrix::identity(4)), 1'000'000, rng);
    EXPECT_EQ(q.method, QMethod::MonteCarlo);
    EXPECT_GT(q.std_error, 0.0);
    EXPECT_NEAR(q.q, exact, 3.0 * q.std_error);
}

TEST(QProbability, PerfectCorrelationLimit) {
    RngState rng(6);
    const auto q = q_probability(equicorrelated(4, 0.999, 1.0), 200'000, rng);
    EXPECT_GT(q.q, 0.49);
    EXPECT_LE(q.q, 0.5);
}

TEST(QProbability, SingleTermIsDegenerate) {
    RngState rng(7);
    const auto q = q_probability(CovarianceMatrix(Matrix{{2.0}}), 10'000, rng);
    EXPECT_EQ(q.q, 0.0);
    EXPECT_EQ(q.std_error, 0.0);
}

TEST(QProbabilityProperty, AgreesExactlyWithMeasureFromSameStream) {
    const auto c = equicorrelated(4, 0.7, 0.02);
    RngState a(8), b(8);
    const auto measure = sign_sum_distribution(c, 50'000, a);
    const auto q = q_probability(c, 50'000, b);
    const double inside = measure.probability(-1) + measure.probability(0) + measure.probability(1);
    EXPECT_EQ(q.q, 0.5 * (1.0 - inside));
}

TEST(QExactBivariate, Examples) {
    EXPECT_EQ(q_exact_bivariate(0.0).q, 0.25);
    EXPECT_EQ(q_exact_bivariate(0.0).std_error, 0.0);
    EXPECT_EQ(q_exact_bivariate(0.0).method, QMethod::ExactBivariate);
    EXPECT_NEAR(q_exact_bivariate(1.0 - 1e-12).q, 0.5, 1e-5);
    EXPECT_NEAR(q_exact_bivariate(-1.0 + 1e-12).q, 0.0, 1e-5);
    EXPECT_THROW(q_exact_bivariate(1.0), DataError);
    EXPECT_THROW(q_exact_bivariate(-1.5), DataError);
}

TEST(QProbabilityProperty, BivariateOracleMatch) {
    for (double rho : {-0.5, 0.0, 0.5, 0.9}) {
        RngState rng(9);
        const auto mc = q_probability(equicorrelated(2, rho, 1.0), 1'000'000, rng);
        EXPECT_NEAR(mc.q, q_exact_bivariate(rho).q, 4.0 * mc.std_error) << "rho " << rho;
    }
}

TEST(QProbabilityProperty, NondecreasingInCorrelation) {
    double prev = -1.0, prev_se = 0.0;
    for (double rho : {0.0, 0.3, 0.6, 0.9}) {
        RngState rng(12);
        const auto q = q_probability(equicorrelated(4, rho, 1.0), 200'000, rng);
        EXPECT_GE(q.q + 4.0 * std::hypot(q.std_error, prev_se), prev) << "rho " << rho;
        prev = q.q;
        prev_se = q.std_error;
    }
}

TEST(EmpiricalGFrequency, Examples) {
    Matrix up(200, 4, 0.01);
    EXPECT_EQ(empirical_g_frequency(IncrementSeries(up)).q, 0.0);

    Matrix alt(200, 4);
    for (std::size_t k = 0; k < 200; ++k)
        for (auto& v : alt.row(k)) v = k % 2 == 0 ? -0.01 : 0.01;
    const auto q = empirical_g_frequency(IncrementSeries(alt));
    EXPECT_EQ(q.q, 0.5);
    EXPECT_EQ(q.method, QMethod::EmpiricalFrequency);
    EXPECT_THROW(empirical_g_frequency(IncrementSeries(Matrix(99, 4, 1.0))), DataError);
}

TEST(EmpiricalGFrequency, IdentitySampleMatchesEnumeration) {
    RngState rng(13);
    const auto inc = sample_increments(CovarianceMatrix(Matrix::identity(4)).cholesky(), 1'000'000, rng);
    EXPECT_NEAR(empirical_g_frequency(inc).q, enumerated_q(4), 0.0015);
}
