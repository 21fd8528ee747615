#pragma once

/**
 * @file sampler.hpp
 * @brief Random Euler products on the torus T_P and Monte Carlo checks
 *        against the density pipeline.
 *
 * Each t_p is Haar-uniform on the unit circle. Uniforms come from a
 * counter-based generator keyed by (seed, prime index, sample index), so a
 * batch is identical for any thread count or evaluation order.
 */

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mdensity/coefficients.hpp"
#include "mdensity/errors.hpp"
#include "mdensity/global_density.hpp"
#include "mdensity/grids.hpp"
#include "mdensity/parallel.hpp"
#include "mdensity/primes.hpp"

namespace mdensity {

/// Name and version of the uniform generator, pinned in every batch's metadata.
inline constexpr const char* kRngName = "splitmix64-counter/1";

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Uniform in [0, 1) for the counter (seed, stream, index).
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t index) noexcept {
    std::uint64_t h = detail::splitmix64(seed);
    h = detail::splitmix64(h ^ (stream * 0xD1B54A32D192ED03ULL));
    h = detail::splitmix64(h ^ index);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

struct SampleBatch {
    double sigma = 1.0;
    double tau = 0.0;
    PrimeSet primes;
    int mu = 1;
    std::uint64_t seed = 0;
    std::vector<double> values;
    std::size_t count = 0;
    std::string rng = kRngName;
};

/// Draws n values of sum_p 2 Re g_{sigma,p}(t_p^mu p^{-i tau}).
inline SampleBatch sample_values(double sigma, double tau, const PrimeSet& primes, int mu,
                                 std::size_t n, std::uint64_t seed, int threads = 0) {
    require_sigma(sigma, "sample_values");
    if (n < 1) throw ValidationError("sample_values: n must be >= 1");
    if (mu < 1) throw ValidationError("sample_values: mu must be >= 1");
    SampleBatch b{sigma, tau, primes, mu, seed, std::vector<double>(n), n, kRngName};

    struct Local {
        double z, shift;
    };
    std::vector<Local> local;
    for (auto p : primes)
        local.push_back({prime_weight(p, sigma), tau * std::log(static_cast<double>(p))});

    constexpr std::size_t kChunk = 4096;
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    parallel_for(chunks, threads, [&](std::size_t c) {
        const std::size_t end = std::min(n, (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) {
            double v = 0.0;
            for (std::size_t j = 0; j < local.size(); ++j) {
                const double angle = 2.0 * std::numbers::pi * counter_uniform(seed, j, i);
                const double phi = mu * angle - local[j].shift;
                const double z = local[j].z;
                // 2 Re g(w) = -log|1 - w z|^2 for |w| = 1
                v -= std::log1p(z * z - 2.0 * z * std::cos(phi));
            }
            b.values[i] = v;
        }
    });
    return b;
}

/// sup |F_n - F| between the empirical CDF and a model CDF.
inline double ks_distance(const SampleBatch& batch, const CdfGrid& cdf) {
    if (batch.values.empty()) throw ValidationError("ks_distance: empty batch");
    if (batch.tau != 0.0) throw ValidationError("ks_distance: batch must have tau = 0");
    if (batch.sigma != cdf.sigma || !(batch.primes.primes().size() == cdf.primes.size() &&
                                      std::equal(batch.primes.begin(), batch.primes.end(),
                                                 cdf.primes.begin())))
        throw ValidationError("ks_distance: batch and model differ in sigma or primes");
    std::vector<double> v = batch.values;
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = cdf(v[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

namespace detail {

/// Pairwise summation with a fixed tree shape (depends only on the index range).
template <class T, class F>
T pairwise_sum(std::size_t lo, std::size_t hi, const F& term) {
    if (hi - lo <= 64) {
        T s{};
        for (std::size_t i = lo; i < hi; ++i) s += term(i);
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum<T>(lo, mid, term) + pairwise_sum<T>(mid, hi, term);
}

}  // namespace detail

/// (1/n) sum_i exp(i x v_i)
inline cplx empirical_characteristic(const SampleBatch& batch, double x) {
    if (batch.values.empty()) throw ValidationError("empirical_characteristic: empty batch");
    const auto& v = batch.values;
    const cplx s = detail::pairwise_sum<cplx>(
        0, v.size(), [&](std::size_t i) { return std::polar(1.0, x * v[i]); });
    return s / static_cast<double>(v.size());
}

/// int_{T^2} psi_x(Phi_{sigma,tau,{p1,p2}}(t, t^{-1})) d*t by the tensor trapezoid
/// rule, where Phi(t, t') = sum_p g(t_p p^{-i tau}) + g(t'_p p^{-i tau}).
inline cplx torus_integral_2d(double sigma, double tau, std::int64_t p1, std::int64_t p2, double x,
                              std::size_t nodes) {
    require_sigma(sigma, "torus_integral_2d");
    if (nodes < 64) throw ValidationError("torus_integral_2d: nodes must be >= 64");
    const std::int64_t ps[2] = {p1, p2};
    // per prime and node: g(t p^{-i tau}) + g(t^{-1} p^{-i tau})
    std::vector<cplx> phi[2];
    for (int k = 0; k < 2; ++k) {
        const double z = prime_weight(ps[k], sigma);
        const cplx rot = std::polar(1.0, -tau * std::log(static_cast<double>(ps[k])));
        phi[k].resize(nodes);
        for (std::size_t j = 0; j < nodes; ++j) {
            const cplx t = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(j) /
                                               static_cast<double>(nodes));
            phi[k][j] = -std::log(1.0 - t * rot * z) - std::log(1.0 - std::conj(t) * rot * z);
        }
    }
    const cplx ix(0.0, x);
    cplx total = 0.0;
    for (std::size_t a = 0; a < nodes; ++a) {
        cplx row = 0.0;
        for (std::size_t b = 0; b < nodes; ++b) row += std::exp(ix * (phi[0][a] + phi[1][b]));
        total += row;
    }
    return total / (static_cast<double>(nodes) * static_cast<double>(nodes));
}

/// prod_p sum_a (G_a(p,x) p^{-i a tau})^2, the closed side of the torus identity.
inline cplx torus_series_product(double sigma, double tau, std::span<const std::int64_t> primes,
                                 double x, double tol = 1e-10) {
    cplx v = 1.0;
    for (auto p : primes) v *= twisted_square_sum(p, sigma, x, tau, tol).value;
    return v;
}

}  // namespace mdensity
