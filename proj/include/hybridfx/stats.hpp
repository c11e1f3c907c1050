#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "normal.hpp"
#include "timeseries.hpp"

namespace hybridfx {

// ---------------------------------------------------------------------------
// Inter-flip times

/// Strategic sign flips of a return series for AR order n.
///
/// `stopping_times` are 1-based positions T_1 < T_2 < ...; `durations` are
/// tau_l = T_l - T_{l-1} with T_0 = 0, so the first duration includes the
/// segment before the first flip.
struct FlipTimes {
    std::vector<std::size_t> stopping_times;
    std::vector<std::size_t> durations;
    std::size_t n_used = 1;
};

/// Flip at k (1-based, k > n) iff X_k * (X_{k-1} + ... + X_{k-n}) < 0 and
/// X_{k-i} * X_{k-i-1} > 0 for i = 1..n-1. All comparisons are strict, so any
/// exact zero product blocks the flip. For n = 1 the second clause is empty.
inline FlipTimes flip_times(std::span<const double> x, std::size_t n) {
    if (n < 1) throw DataError("flip_times: n must be >= 1");
    if (x.size() < n + 2) throw DataError("flip_times: series shorter than n + 2");
    FlipTimes out;
    out.n_used = n;
    std::size_t last = 0;
    for (std::size_t k = n; k < x.size(); ++k) {  // k is 0-based here
        double sum = 0.0;
        for (std::size_t i = 1; i <= n; ++i) sum += x[k - i];
        if (!(x[k] * sum < 0.0)) continue;
        bool held = true;
        for (std::size_t i = 1; i < n && held; ++i) held = x[k - i] * x[k - i - 1] > 0.0;
        if (!held) continue;
        out.stopping_times.push_back(k + 1);
        out.durations.push_back(k + 1 - last);
        last = k + 1;
    }
    return out;
}

inline FlipTimes flip_times(const ReturnSeries& x, std::size_t n) { return flip_times(x.values(), n); }

// ---------------------------------------------------------------------------
// CCDF and decay fits

/// Pr(tau > s) for s = 1..max(tau); `counts[i]` = #{tau > s_i}.
struct CcdfTable {
    std::vector<std::size_t> s;
    std::vector<double> p;
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;
};

inline CcdfTable ccdf(std::span<const std::size_t> durations) {
    if (durations.empty()) throw DataError("ccdf: no durations");
    const std::size_t max_tau = *std::max_element(durations.begin(), durations.end());
    std::vector<std::uint64_t> hist(max_tau + 1, 0);
    for (auto t : durations) ++hist[t];
    CcdfTable out;
    out.total = durations.size();
    std::uint64_t above = durations.size();  // #{tau > s}, starting from s = 0
    for (std::size_t s = 1; s <= max_tau; ++s) {
        above -= hist[s];
        out.s.push_back(s);
        out.counts.push_back(above);
        out.p.push_back(static_cast<double>(above) / static_cast<double>(out.total));
    }
    return out;
}

inline CcdfTable ccdf(const FlipTimes& f) { return ccdf(f.durations); }

struct FitRange {
    std::size_t s_min = 1;
    std::size_t s_max = static_cast<std::size_t>(-1);
};

/// Slope and intercept of ln Pr(tau > s) against s.
struct DecayFit {
    double rate = 0.0;
    double intercept = 0.0;
    std::size_t s_min = 0;
    std::size_t s_max = 0;
    std::size_t points = 0;
    double r_squared = 0.0;
};

inline constexpr std::uint64_t kDefaultMinCount = 10;

/// Ordinary least squares of ln p(s) on s over points with p > 0,
/// count >= min_count, and s inside `range`.
inline DecayFit decay_rate(const CcdfTable& table, std::uint64_t min_count = kDefaultMinCount,
                           std::optional<FitRange> range = std::nullopt) {
    const FitRange r = range.value_or(FitRange{});
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < table.s.size(); ++i) {
        if (table.s[i] < r.s_min || table.s[i] > r.s_max) continue;
        if (!(table.p[i] > 0.0) || table.counts[i] < min_count) continue;
        xs.push_back(static_cast<double>(table.s[i]));
        ys.push_back(std::log(table.p[i]));
    }
    if (xs.size() < 3)
        throw DataError("decay_rate: fewer than 3 usable CCDF points (have " + std::to_string(xs.size()) + ")");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    DecayFit fit;
    fit.rate = sxy / sxx;
    fit.intercept = my - fit.rate * mx;
    fit.s_min = static_cast<std::size_t>(xs.front());
    fit.s_max = static_cast<std::size_t>(xs.back());
    fit.points = xs.size();
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

// ---------------------------------------------------------------------------
// Model tails

/// Geometric survival (1 - q)^s.
inline double geometric_tail(double q, std::size_t s) {
    if (!(q >= 0.0 && q <= 1.0)) throw DataError("geometric_tail: q outside [0, 1]");
    return std::pow(1.0 - q, static_cast<double>(s));
}

inline double binomial_coefficient(std::size_t a, std::size_t b) {
    if (b > a) return 0.0;
    b = std::min(b, a - b);
    double out = 1.0;
    for (std::size_t i = 1; i <= b; ++i) out = out * static_cast<double>(a - b + i) / static_cast<double>(i);
    return out;
}

enum class NegBinomForm {
    /// C(s-1, n-1) (1-q)^{s-n} q^n evaluated as written: the probability that
    /// the n-th success lands on trial s.
    AsPrinted,
    /// Proper survival Pr(tau > s) = sum over t > s of that mass.
    Survival,
};

inline double negbinom_tail(double q, std::size_t n, std::size_t s, NegBinomForm form = NegBinomForm::AsPrinted) {
    if (!(q > 0.0 && q < 1.0)) throw DataError("negbinom_tail: q must lie in (0, 1)");
    if (n < 1) throw DataError("negbinom_tail: n must be >= 1");
    if (s < n) throw DataError("negbinom_tail: s must be >= n");
    auto mass = [&](std::size_t t) {
        return binomial_coefficient(t - 1, n - 1) * std::pow(1.0 - q, static_cast<double>(t - n)) *
               std::pow(q, static_cast<double>(n));
    };
    if (form == NegBinomForm::AsPrinted) return mass(s);
    // 1 - sum_{t=n..s} mass(t)
    double cdf = 0.0;
    for (std::size_t t = n; t <= s; ++t) cdf += mass(t);
    return std::max(0.0, 1.0 - cdf);
}

/// Inverts the decay-rate relations: rate = ln(1 - q) for n = 1 and
/// rate = ln(1 - q) - 1 for n = 2. Other orders have no relation.
inline double q_from_decay(double rate, std::size_t n) {
    double q;
    if (n == 1) q = 1.0 - std::exp(rate);
    else if (n == 2) q = 1.0 - std::exp(rate + 1.0);
    else throw DataError("q_from_decay: no decay relation for n = " + std::to_string(n));
    if (!(q > 0.0 && q < 1.0)) throw DataError("q_from_decay: implied q = " + std::to_string(q) + " is outside (0, 1)");
    return q;
}

// ---------------------------------------------------------------------------
// Distribution shape

namespace detail {

struct Moments {
    double mean = 0.0;
    double m2 = 0.0;  // population central moments
    double m4 = 0.0;
};

inline Moments central_moments(std::span<const double> x) {
    Moments mo;
    const double n = static_cast<double>(x.size());
    for (double v : x) mo.mean += v;
    mo.mean /= n;
    for (double v : x) {
        const double d = (v - mo.mean) * (v - mo.mean);
        mo.m2 += d;
        mo.m4 += d * d;
    }
    mo.m2 /= n;
    mo.m4 /= n;
    return mo;
}

}  // namespace detail

using PointList = std::vector<std::pair<double, double>>;

/// Least-squares slope of second coordinate on first.
inline double ols_slope(const PointList& pts) {
    if (pts.size() < 2) throw DataError("ols_slope: need at least 2 points");
    double mx = 0.0, my = 0.0;
    for (const auto& [a, b] : pts) {
        mx += a;
        my += b;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [a, b] : pts) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if (!(sxx > 0.0)) throw DataError("ols_slope: abscissae have zero variance");
    return sxy / sxx;
}

/// Sorted standardized sample against normal quantiles at (i - 0.5) / N.
/// Pairs are (theoretical quantile, standardized sample value).
inline PointList normal_prob_plot(std::span<const double> x) {
    if (x.size() < 3) throw DataError("normal_prob_plot: need at least 3 values");
    const auto mo = detail::central_moments(x);
    const double n = static_cast<double>(x.size());
    const double sd = std::sqrt(mo.m2 * n / (n - 1.0));
    if (!(sd > 0.0)) throw DataError("normal_prob_plot: zero variance");
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    PointList out;
    out.reserve(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        out.emplace_back(inverse_normal_cdf((static_cast<double>(i) + 0.5) / n), (sorted[i] - mo.mean) / sd);
    return out;
}

/// (X_{k-1}, X_k) for k = 2..N.
inline PointList phase_plot(std::span<const double> x) {
    if (x.size() < 2) throw DataError("phase_plot: need at least 2 values");
    PointList out;
    out.reserve(x.size() - 1);
    for (std::size_t k = 1; k < x.size(); ++k) out.emplace_back(x[k - 1], x[k]);
    return out;
}

inline constexpr std::size_t kBiweeklyWindow = 10;

/// Sample standard deviation (divisor w - 1) over non-overlapping windows of
/// `window` returns; a trailing partial window is dropped.
inline std::vector<double> realized_vol(std::span<const double> x, std::size_t window = kBiweeklyWindow) {
    if (window < 2) throw DataError("realized_vol: window must be >= 2");
    if (x.size() < 2 * window)
        throw DataError("realized_vol: series of length " + std::to_string(x.size()) + " is shorter than 2 windows of " +
                        std::to_string(window));
    std::vector<double> out;
    out.reserve(x.size() / window);
    for (std::size_t start = 0; start + window <= x.size(); start += window) {
        double mean = 0.0;
        for (std::size_t i = 0; i < window; ++i) mean += x[start + i];
        mean /= static_cast<double>(window);
        double ss = 0.0;
        for (std::size_t i = 0; i < window; ++i) ss += (x[start + i] - mean) * (x[start + i] - mean);
        out.push_back(std::sqrt(ss / static_cast<double>(window - 1)));
    }
    return out;
}

/// Pearson correlation of the pairs (v_w, v_{w+1}).
inline double lag1_corr(std::span<const double> v) {
    if (v.size() < 3) throw DataError("lag1_corr: need at least 3 values");
    const std::size_t n = v.size() - 1;
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += v[i];
        mb += v[i + 1];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = v[i] - ma;
        const double b = v[i + 1] - mb;
        saa += a * a;
        sbb += b * b;
        sab += a * b;
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) throw DataError("lag1_corr: zero variance");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// t statistic of a correlation r estimated from `pairs` pairs.
inline double correlation_t_stat(double r, std::size_t pairs) {
    if (pairs < 3) throw DataError("correlation_t_stat: need at least 3 pairs");
    return r * std::sqrt(static_cast<double>(pairs - 2) / std::max(1e-300, 1.0 - r * r));
}

/// Fourth standardized moment minus 3 (population moments).
inline double excess_kurtosis(std::span<const double> x) {
    if (x.size() < 20) throw DataError("excess_kurtosis: need at least 20 values");
    const auto mo = detail::central_moments(x);
    if (!(mo.m2 > 0.0)) throw DataError("excess_kurtosis: zero variance");
    return mo.m4 / (mo.m2 * mo.m2) - 3.0;
}

// ---------------------------------------------------------------------------
// Aggregate

struct AnalyzeOptions {
    std::size_t n = 2;
    std::size_t window = kBiweeklyWindow;
    /// Leading values dropped before any statistic; defaults to n.
    std::optional<std::size_t> burn_in;
    std::uint64_t min_count = kDefaultMinCount;
    std::optional<FitRange> fit_range;
};

struct FlipSummary {
    std::size_t flips = 0;
    double mean_duration = 0.0;
    std::size_t max_duration = 0;
    std::size_t n_used = 0;
};

struct StatsBundle {
    std::size_t observations = 0;  // after burn-in
    std::size_t burn_in = 0;
    FlipSummary flip;
    CcdfTable ccdf;
    std::optional<DecayFit> decay;        // absent when too few flips to fit
    std::optional<double> q_from_decay;   // absent when no relation or q out of range
    std::string decay_note;               // why decay / q_from_decay are absent
    double kurtosis_excess = 0.0;
    PointList npp;
    PointList phase;
    double phase_slope = 0.0;
    PointList rv_phase;
    double rv_lag1_corr = 0.0;
    double rv_lag1_t = 0.0;
};

/// Every diagnostic for one series. A series with fewer than three fittable
/// CCDF points still yields a bundle, with `decay` left empty.
inline StatsBundle analyze(const ReturnSeries& series, const AnalyzeOptions& opt = {}) {
    const std::size_t burn = opt.burn_in.value_or(opt.n);
    const ReturnSeries x = burn > 0 ? series.drop_front(burn) : series;
    const auto values = x.values();

    StatsBundle b;
    b.observations = x.size();
    b.burn_in = burn;

    const auto rv = realized_vol(values, opt.window);
    const auto flips = flip_times(values, opt.n);
    b.flip.flips = flips.durations.size();
    b.flip.n_used = opt.n;
    if (!flips.durations.empty()) {
        b.flip.max_duration = *std::max_element(flips.durations.begin(), flips.durations.end());
        b.flip.mean_duration = static_cast<double>(flips.stopping_times.back()) /
                               static_cast<double>(flips.durations.size());
        b.ccdf = ccdf(flips);
        try {
            b.decay = decay_rate(b.ccdf, opt.min_count, opt.fit_range);
        } catch (const DataError& e) {
            b.decay_note = e.what();
        }
        if (b.decay) {
            try {
                b.q_from_decay = q_from_decay(b.decay->rate, opt.n);
            } catch (const DataError& e) {
                b.decay_note = e.what();
            }
        }
    } else {
        b.decay_note = "no flips in series";
    }

    b.kurtosis_excess = excess_kurtosis(values);
    b.npp = normal_prob_plot(values);
    b.phase = phase_plot(values);
    b.phase_slope = ols_slope(b.phase);
    b.rv_phase = phase_plot(rv);
    b.rv_lag1_corr = lag1_corr(rv);
    b.rv_lag1_t = correlation_t_stat(b.rv_lag1_corr, rv.size() - 1);
    return b;
}

}  // namespace hybridfx
