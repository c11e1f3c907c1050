#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "error.hpp"
#include "matrix.hpp"
#include "rng.hpp"
#include "symbolic.hpp"
#include "timeseries.hpp"
#include "volprocess.hpp"

namespace hybridfx {

enum class SimMode { Hybrid, PureTrend };

/// How the Gaussian increments act on the vol levels. Only their signs reach
/// the signal, so both choices give the same X and g for the same seed.
enum class VolMode { Level, Log };

constexpr std::string_view to_string(SimMode m) noexcept { return m == SimMode::Hybrid ? "hybrid" : "pure-trend"; }
constexpr std::string_view to_string(VolMode m) noexcept { return m == VolMode::Level ? "level" : "log"; }

struct SimConfig {
    std::size_t n = 2;               // AR order
    std::size_t m = 4;               // number of vol terms
    double alpha = 1e-4;             // noise scale
    std::size_t steps = 1'000'000;   // length of X
    std::uint64_t seed = 0;
    SimMode mode = SimMode::Hybrid;
    std::optional<CovarianceMatrix> covariance;  // required in hybrid mode
    bool record_internals = false;
    /// 0: g_k from the step-k vol move; 1: from the step k-1 move.
    unsigned lag = 0;
    VolMode vol_mode = VolMode::Level;
    double initial_vol = 0.10;       // level of every term before the first move
    ThresholdRule rule{};

    void validate() const {
        if (n < 1) throw DataError("simulate: AR order n must be >= 1");
        if (m < 1) throw DataError("simulate: m must be >= 1");
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DataError("simulate: alpha must be > 0");
        if (steps < n + 2) throw DataError("simulate: steps must be >= n + 2");
        if (lag > 1) throw DataError("simulate: lag must be 0 or 1");
        if (!(initial_vol > 0.0)) throw DataError("simulate: initial vol level must be > 0");
        if (mode == SimMode::Hybrid) {
            if (!covariance) throw DataError("simulate: hybrid mode needs a covariance matrix");
            if (covariance->dim() != m)
                throw DataError("simulate: covariance is " + std::to_string(covariance->dim()) + "x" +
                                std::to_string(covariance->dim()) + " but m = " + std::to_string(m));
            if (!rule.inner.empty() && rule.inner.size() != m)
                throw DataError("simulate: rule inner threshold count differs from m");
        }
    }
};

struct SimOutput {
    ReturnSeries returns;            // X_1..X_steps
    /// g_k for k = n+1..steps. Always filled in hybrid mode; in pure-trend
    /// mode only with record_internals (all +1).
    std::vector<Sign> signals;
    /// Recorded only with record_internals:
    std::vector<double> noise;                   // eps_1..eps_steps
    std::optional<IncrementSeries> increments;   // dY_k drawn at k = n+1..steps
    std::optional<std::vector<double>> initial_increment;  // dY_n, lag = 1 only
    std::optional<Matrix> vol_levels;            // Y_k, rows k = 1..steps
    SimConfig config;
    std::string rng_algorithm;

    /// The recorded levels as a VolTermPath. Level-mode Gaussian walks can
    /// cross zero on long runs, in which case this throws.
    VolTermPath vol_path() const {
        if (!vol_levels) throw DataError("simulation did not record vol levels");
        return VolTermPath(*vol_levels);
    }
};

inline std::string rng_identifier() { return std::string(kRngAlgorithm) + " " + std::string(kRngVersion); }

/// Runs the gated AR(n) recursion
///
///     X_k = (g_k * (X_{k-1} + ... + X_{k-n})) / n + alpha * eps_k,   k > n,
///
/// after a warm-up X_k = alpha * eps_k for k <= n. The sum is accumulated
/// from X_{k-1} backwards. Stream order per step: m normals for dY_k (hybrid
/// only), then one normal for eps_k. With lag 1 one extra dY row is drawn
/// right after the warm-up.
inline SimOutput simulate(const SimConfig& config) {
    config.validate();
    const std::size_t n = config.n;
    const std::size_t m = config.m;
    const bool hybrid = config.mode == SimMode::Hybrid;
    const bool record = config.record_internals;
    RngState rng(config.seed);

    std::vector<double> x(config.steps);
    std::vector<Sign> signals;
    std::vector<double> noise;
    if (hybrid || record) signals.reserve(config.steps - n);
    if (record) noise.reserve(config.steps);

    for (std::size_t k = 0; k < n; ++k) {
        const double eps = rng.normal();
        x[k] = config.alpha * eps;
        if (record) noise.push_back(eps);
    }

    std::optional<CholeskyFactor> chol;
    if (hybrid) chol = config.covariance->cholesky();
    std::vector<double> z(m), row(m), prev_row(m);
    Matrix incs;
    if (record && hybrid) incs = Matrix(config.steps - n, m);
    std::optional<std::vector<double>> initial_increment;
    if (hybrid && config.lag == 1) {
        draw_increment(*chol, rng, z, prev_row);
        if (record) initial_increment = prev_row;
    }

    const double n_real = static_cast<double>(n);
    for (std::size_t k = n; k < config.steps; ++k) {
        Sign g = Sign::Plus;
        if (hybrid) {
            draw_increment(*chol, rng, z, row);
            g = g_signal(config.lag == 1 ? prev_row : row, config.rule);
            if (record) std::copy(row.begin(), row.end(), incs.row(k - n).begin());
            if (config.lag == 1) std::swap(row, prev_row);
        }
        const double eps = rng.normal();
        double sum = 0.0;
        for (std::size_t i = 1; i <= n; ++i) sum += x[k - i];
        x[k] = (static_cast<double>(to_int(g)) * sum) / n_real + config.alpha * eps;
        if (hybrid || record) signals.push_back(g);
        if (record) noise.push_back(eps);
    }

    SimOutput out{ReturnSeries(std::move(x), std::string(to_string(config.mode))),
                  std::move(signals), std::move(noise), std::nullopt, std::move(initial_increment),
                  std::nullopt, config, rng_identifier()};

    if (record && hybrid) {
        Matrix levels(config.steps, m, config.initial_vol);
        auto apply = [&](std::span<const double> from, std::span<const double> d, std::span<double> to) {
            for (std::size_t j = 0; j < m; ++j)
                to[j] = config.vol_mode == VolMode::Level ? from[j] + d[j] : from[j] * std::exp(d[j]);
        };
        if (out.initial_increment) apply(levels.row(n - 1), *out.initial_increment, levels.row(n - 1));
        for (std::size_t k = n; k < config.steps; ++k) apply(levels.row(k - 1), incs.row(k - n), levels.row(k));
        out.vol_levels = std::move(levels);
        out.increments = IncrementSeries(std::move(incs));
    }
    return out;
}

inline std::size_t default_thread_count() {
    const auto hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Independent replicas; replica r runs with seed `config.seed + r`. Results
/// are returned in replica order whatever the worker count (0 = all cores).
inline std::vector<SimOutput> simulate_batch(const SimConfig& config, std::size_t replicas, std::size_t threads = 0) {
    if (replicas < 1) throw DataError("simulate_batch: replicas must be >= 1");
    config.validate();
    if (threads == 0) threads = default_thread_count();
    threads = std::min(threads, replicas);

    std::vector<std::optional<SimOutput>> slots(replicas);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t r; (r = next.fetch_add(1)) < replicas;) {
            try {
                SimConfig cfg = config;
                cfg.seed = config.seed + r;
                slots[r] = simulate(cfg);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<SimOutput> out;
    out.reserve(replicas);
    for (auto& slot : slots) out.push_back(std::move(*slot));
    return out;
}

/// Roots of the gated AR(n) characteristic polynomial
/// lambda^n - (gate / n) (lambda^{n-1} + ... + 1), by Durand-Kerner iteration.
/// For gate = 1, n = 2 these are {1, -1/2}: a unit root plus a damped mode.
inline std::vector<std::complex<double>> trend_characteristic_roots(std::size_t n, double gate = 1.0) {
    if (n < 1) throw DataError("trend_characteristic_roots: n must be >= 1");
    // monic coefficients, highest degree first: 1, -c, -c, ..., -c
    const double c = gate / static_cast<double>(n);
    auto poly = [&](std::complex<double> z) {
        std::complex<double> v = 1.0;
        for (std::size_t i = 0; i < n; ++i) v = v * z - c;
        return v;
    };
    std::vector<std::complex<double>> roots(n);
    const std::complex<double> seed(0.4, 0.9);
    for (std::size_t i = 0; i < n; ++i) roots[i] = std::pow(seed, static_cast<double>(i));
    for (int iter = 0; iter < 1000; ++iter) {
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::complex<double> denom = 1.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) denom *= roots[i] - roots[j];
            const auto delta = poly(roots[i]) / denom;
            roots[i] -= delta;
            change = std::max(change, std::abs(delta));
        }
        if (change < 1e-16) break;
    }
    std::sort(roots.begin(), roots.end(), [](auto a, auto b) {
        return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
    });
    return roots;
}

}  // namespace hybridfx
