#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "rng.hpp"
#include "timeseries.hpp"
#include "volprocess.hpp"

namespace hybridfx {

enum class Sign : std::int8_t { Minus = -1, Zero = 0, Plus = 1 };

constexpr int to_int(Sign s) noexcept { return static_cast<int>(s); }
constexpr Sign operator-(Sign s) noexcept { return static_cast<Sign>(-static_cast<int>(s)); }

/// +1 above `y`, -1 below `-y`, 0 on the closed band [-y, y].
constexpr Sign h_threshold(double x, double y) noexcept {
    if (x > y) return Sign::Plus;
    if (x < -y) return Sign::Minus;
    return Sign::Zero;
}

/// Two-level threshold rule: each term's increment is thresholded at its
/// inner level and the sign sum is thresholded at `outer`. The default
/// (inner 0 for every term, outer 1) is a qualified majority of m = 4 terms.
struct ThresholdRule {
    std::vector<double> inner;  // empty: 0 for every term
    double outer = 1.0;

    double inner_for(std::size_t j) const { return inner.empty() ? 0.0 : inner[j]; }
};

/// S = sum_j h(dY_j, inner_j), in {-m, ..., m}.
inline int sign_sum(std::span<const double> increment_row, const ThresholdRule& rule = {}) {
    if (!rule.inner.empty() && rule.inner.size() != increment_row.size())
        throw DataError("sign_sum: rule has " + std::to_string(rule.inner.size()) + " inner thresholds for " +
                        std::to_string(increment_row.size()) + " terms");
    int s = 0;
    for (std::size_t j = 0; j < increment_row.size(); ++j) s += to_int(h_threshold(increment_row[j], rule.inner_for(j)));
    return s;
}

/// g = h(S, outer).
inline Sign g_signal(std::span<const double> increment_row, const ThresholdRule& rule = {}) {
    return h_threshold(static_cast<double>(sign_sum(increment_row, rule)), rule.outer);
}

/// Distribution of S on the parity lattice {-m, -m+2, ..., m}.
struct SignSumMeasure {
    std::size_t m = 0;
    std::vector<int> support;           // m + 1 points, ascending
    std::vector<double> probabilities;  // parallel to support
    std::vector<std::uint64_t> counts;  // parallel to support
    std::uint64_t sample_count = 0;
    /// Draws whose S fell off the lattice (only possible with exact zero increments).
    std::uint64_t off_lattice_count = 0;
    /// Raw counts for every integer s in [-m, m], at index s + m.
    std::vector<std::uint64_t> tally;

    double probability(int s) const {
        for (std::size_t i = 0; i < support.size(); ++i)
            if (support[i] == s) return probabilities[i];
        return 0.0;
    }
    std::uint64_t count(int s) const {
        for (std::size_t i = 0; i < support.size(); ++i)
            if (support[i] == s) return counts[i];
        return 0;
    }
};

enum class QMethod { MonteCarlo, ExactBivariate, EmpiricalFrequency };

constexpr std::string_view to_string(QMethod m) noexcept {
    switch (m) {
        case QMethod::MonteCarlo: return "monte-carlo";
        case QMethod::ExactBivariate: return "exact-bivariate";
        case QMethod::EmpiricalFrequency: return "empirical-frequency";
    }
    return "unknown";
}

/// Per-step flip probability q = Pr(g = -1).
struct QEstimate {
    double q = 0.0;
    double std_error = 0.0;
    QMethod method = QMethod::MonteCarlo;
};

namespace detail {

/// Tallies S over draws of N(0, C); index s + m holds the count of S = s.
inline std::vector<std::uint64_t> tally_sign_sums(const CovarianceMatrix& c, std::size_t samples, RngState& rng,
                                                  const ThresholdRule& rule) {
    const std::size_t m = c.dim();
    const auto l = c.cholesky();
    std::vector<std::uint64_t> tally(2 * m + 1, 0);
    std::vector<double> z(m), row(m);
    for (std::size_t i = 0; i < samples; ++i) {
        draw_increment(l, rng, z, row);
        ++tally[static_cast<std::size_t>(sign_sum(row, rule) + static_cast<int>(m))];
    }
    return tally;
}

}  // namespace detail

/// Empirical measure of S over `samples` draws of N(0, C).
inline SignSumMeasure sign_sum_distribution(const CovarianceMatrix& c, std::size_t samples, RngState& rng,
                                            const ThresholdRule& rule = {}) {
    if (samples < 1000) throw DataError("sign_sum_distribution: need at least 1000 samples");
    const auto tally = detail::tally_sign_sums(c, samples, rng, rule);
    const int m = static_cast<int>(c.dim());
    SignSumMeasure out;
    out.m = c.dim();
    out.sample_count = samples;
    std::uint64_t on_lattice = 0;
    for (int s = -m; s <= m; s += 2) {
        out.support.push_back(s);
        out.counts.push_back(tally[static_cast<std::size_t>(s + m)]);
        on_lattice += out.counts.back();
    }
    out.off_lattice_count = samples - on_lattice;
    out.tally = tally;
    for (auto n : out.counts) out.probabilities.push_back(static_cast<double>(n) / static_cast<double>(samples));
    return out;
}

/// q = (1 - P(|S| <= outer)) / 2 from a measure; SE(q) = SE(P) / 2.
inline QEstimate q_from_measure(const SignSumMeasure& measure, double outer = 1.0) {
    const int m = static_cast<int>(measure.m);
    std::uint64_t inside = 0;
    for (int s = -m; s <= m; ++s)
        if (std::abs(s) <= outer) inside += measure.tally[static_cast<std::size_t>(s + m)];
    const double n = static_cast<double>(measure.sample_count);
    const double p = static_cast<double>(inside) / n;
    return {0.5 * (1.0 - p), 0.5 * std::sqrt(p * (1.0 - p) / n), QMethod::MonteCarlo};
}

/// Monte Carlo flip probability q = (1 - P(|S| <= 1)) / 2.
inline QEstimate q_probability(const CovarianceMatrix& c, std::size_t samples, RngState& rng,
                               const ThresholdRule& rule = {}) {
    return q_from_measure(sign_sum_distribution(c, samples, rng, rule), rule.outer);
}

/// Closed form for m = 2 (Gaussian orthant probability): q = 1/4 + asin(rho) / (2 pi).
inline QEstimate q_exact_bivariate(double rho) {
    if (!(std::abs(rho) < 1.0)) throw DataError("q_exact_bivariate: |rho| must be < 1");
    return {0.25 + std::asin(rho) / (2.0 * std::numbers::pi), 0.0, QMethod::ExactBivariate};
}

/// Fraction of increment rows whose signal is -1, with binomial SE.
inline QEstimate empirical_g_frequency(const IncrementSeries& incs, const ThresholdRule& rule = {}) {
    if (incs.steps() < 100) throw DataError("empirical_g_frequency: need at least 100 rows");
    std::uint64_t minus = 0;
    for (std::size_t k = 0; k < incs.steps(); ++k)
        if (g_signal(incs.row(k), rule) == Sign::Minus) ++minus;
    const double n = static_cast<double>(incs.steps());
    const double q = static_cast<double>(minus) / n;
    return {q, std::sqrt(q * (1.0 - q) / n), QMethod::EmpiricalFrequency};
}

}  // namespace hybridfx
