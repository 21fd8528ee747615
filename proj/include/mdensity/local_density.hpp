#pragma once

/**
 * @file local_density.hpp
 * @brief The single-prime density M_{sigma,p} and its Fourier transform.
 *
 * M_{sigma,p} is the push-forward of the uniform measure on the circle under
 * u(theta) = -2 log|1 - e^{i theta} p^{-sigma}|. The map is even in theta
 * and increasing on (-pi, 0), so everything is parametrised by theta there.
 */

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

#include "mdensity/coefficients.hpp"
#include "mdensity/errors.hpp"
#include "mdensity/grids.hpp"

namespace mdensity {

namespace detail {

inline void require_positive_sigma(double sigma, const char* who) {
    if (!(sigma > 0) || !std::isfinite(sigma))
        throw ValidationError(std::string(who) + ": sigma must be > 0");
}

}  // namespace detail

/// u(theta) for theta in (-pi, 0). Valid for any sigma > 0.
inline double theta_to_u(double theta, double sigma, std::int64_t p) {
    detail::require_positive_sigma(sigma, "theta_to_u");
    if (!(theta > -std::numbers::pi && theta < 0.0))
        throw ValidationError("theta_to_u: theta must lie in (-pi, 0)");
    const double z = prime_weight(p, sigma);
    const double s = std::sin(0.5 * theta);
    // |1 - e^{i theta} z|^2 = (1 - z)^2 + 4 z sin^2(theta/2)
    return -std::log((1.0 - z) * (1.0 - z) + 4.0 * z * s * s);
}

/// Inverse of theta_to_u on the open support, closed form in half angles.
inline double u_to_theta(double u, double sigma, std::int64_t p) {
    detail::require_positive_sigma(sigma, "u_to_theta");
    const auto sup = local_support(sigma, p);
    if (!sup.contains_open(u)) throw ValidationError("u_to_theta: u outside the open support");
    const double z = prime_weight(p, sigma);
    // sin^2(theta/2) = (1-z)^2 (e^{hi-u} - 1) / (4z),  cos^2(theta/2) = (1+z)^2 (1 - e^{lo-u}) / (4z)
    const double s2 = (1.0 - z) * (1.0 - z) * std::expm1(sup.hi - u) / (4.0 * z);
    const double c2 = -(1.0 + z) * (1.0 + z) * std::expm1(sup.lo - u) / (4.0 * z);
    return -2.0 * std::atan2(std::sqrt(std::max(s2, 0.0)), std::sqrt(std::max(c2, 0.0)));
}

/// M_{sigma,p}(u); zero outside the open support, including both endpoints.
inline double local_density(double u, double sigma, std::int64_t p) {
    detail::require_positive_sigma(sigma, "local_density");
    if (!local_support(sigma, p).contains_open(u)) return 0.0;
    const double theta = u_to_theta(u, sigma, p);
    const double z = prime_weight(p, sigma);
    const double mod2 = std::exp(-u);  // |1 - e^{i theta} z|^2
    return mod2 / (-kSqrt2Pi * std::sin(theta) * z);
}

/// int_{-inf}^{u} M_{sigma,p}(v) dv / sqrt(2 pi) = (theta(u) + pi) / pi.
inline double local_cdf(double u, double sigma, std::int64_t p) {
    const auto sup = local_support(sigma, p);
    if (u <= sup.lo) return 0.0;
    if (u >= sup.hi) return 1.0;
    return (u_to_theta(u, sigma, p) + std::numbers::pi) / std::numbers::pi;
}

/// Cell-averaged M_{sigma,p} on u_i = u0 + i du: each node holds the exact
/// mass of [u_i - du/2, u_i + du/2] times sqrt(2 pi)/du.
inline DensityGrid local_density_grid(double sigma, std::int64_t p, double u0, double du,
                                      std::size_t n) {
    require_sigma(sigma, "local_density_grid");
    if (!(du > 0)) throw ValidationError("local_density_grid: du must be positive");
    DensityGrid g;
    g.sigma = sigma;
    g.primes = PrimeSet({p});
    g.u0 = u0;
    g.du = du;
    g.support = local_support(sigma, p);
    g.method = "cell-average";
    g.values.resize(n);
    double prev = local_cdf(u0 - 0.5 * du, sigma, p);
    for (std::size_t i = 0; i < n; ++i) {
        const double next = local_cdf(u0 + (static_cast<double>(i) + 0.5) * du, sigma, p);
        g.values[i] = (next - prev) * kSqrt2Pi / du;
        prev = next;
    }
    return g;
}

/// Grid covering the whole support of M_{sigma,p} with nodes on multiples of du.
inline DensityGrid local_density_grid(double sigma, std::int64_t p, double du) {
    const auto sup = local_support(sigma, p);
    const double k0 = std::floor(sup.lo / du) - 1.0;
    const double k1 = std::ceil(sup.hi / du) + 1.0;
    return local_density_grid(sigma, p, k0 * du, du, static_cast<std::size_t>(k1 - k0) + 1);
}

struct QuadratureResult {
    cplx value;
    std::size_t nodes = 0;
    double last_change = 0.0;
};

inline constexpr std::size_t kMaxQuadNodes = std::size_t{1} << 26;

/// (1/2pi) int_{-pi}^{pi} exp(i x u(theta)) dtheta by the periodic trapezoid
/// rule, doubling the node count from `nodes` until successive estimates agree
/// within tol.
inline QuadratureResult local_fourier_quad_detail(double sigma, std::int64_t p, double x,
                                                  std::size_t nodes, double tol = 1e-14) {
    require_sigma(sigma, "local_fourier_quad");
    if (nodes < 64) throw ValidationError("local_fourier_quad: nodes must be >= 64");
    if (x == 0.0) return {cplx(1.0), nodes, 0.0};
    const double z = prime_weight(p, sigma);
    const double a = (1.0 - z) * (1.0 - z);
    const double b = 4.0 * z;
    // phase x u(theta) with u(theta) = -log(a + b sin^2(theta/2)); u is even in theta
    auto f = [&](double theta) {
        const double s = std::sin(0.5 * theta);
        return std::polar(1.0, -x * std::log(a + b * s * s));
    };
    // Resolve the phase: |du/dtheta| <= 2z/(1-z^2).
    const double slope = 2.0 * z / (1.0 - z * z);
    std::size_t n = std::bit_ceil(std::max<std::size_t>(
        nodes, static_cast<std::size_t>(2.0 * std::abs(x) * slope + 32.0)));
    n = std::max<std::size_t>(n, 64);

    // symmetric sum over theta_j = 2 pi j / n: f(0) + f(pi) + 2 sum_{0<j<n/2} f(theta_j)
    auto full_sum = [&](std::size_t m) {
        cplx s = f(0.0) + f(std::numbers::pi);
        for (std::size_t j = 1; j < m / 2; ++j) s += 2.0 * f(2.0 * std::numbers::pi * j / m);
        return s;
    };
    cplx sum = full_sum(n);
    cplx est = sum / static_cast<double>(n);
    while (true) {
        const std::size_t m = 2 * n;
        if (m > kMaxQuadNodes)
            throw ToleranceError("local_fourier_quad: no convergence within 2^26 nodes");
        cplx odd = 0.0;
        for (std::size_t j = 1; j < m / 2; j += 2) odd += 2.0 * f(2.0 * std::numbers::pi * j / m);
        sum += odd;
        const cplx next = sum / static_cast<double>(m);
        const double change = std::abs(next - est);
        est = next;
        n = m;
        if (change <= tol) return {est, n, change};
    }
}

inline cplx local_fourier_quad(double sigma, std::int64_t p, double x, std::size_t nodes = 64,
                               double tol = 1e-14) {
    return local_fourier_quad_detail(sigma, p, x, nodes, tol).value;
}

/// sum_a G_a(p, x)^2 (complex square), A_max from coeff_table(tol).
inline cplx local_fourier_series(double sigma, std::int64_t p, double x, double tol = 1e-12) {
    require_sigma(sigma, "local_fourier_series");
    return twisted_square_sum(p, sigma, x, 0.0, tol).value;
}

/// log10 of max_a |G_a(p, x)|, without building the table.
inline double log10_peak_coefficient(std::int64_t p, double sigma, double x) {
    const double z = prime_weight(p, sigma);
    double lg = 0.0, best = 0.0;
    for (int a = 0; a < kMaxCoeffOrder; ++a) {
        const double ratio = z * std::hypot(static_cast<double>(a), x) / (a + 1.0);
        if (ratio < 1.0 && a > std::abs(x)) break;
        lg += std::log10(ratio);
        best = std::max(best, lg);
    }
    return best;
}

struct LocalFourier {
    cplx value;
    Route route = Route::series;
};

/// Automatic route: the series when it is cheap and exact in long double
/// (peak |G_a|^2 <= 1e2), the trapezoid rule otherwise.
inline LocalFourier local_fourier(double sigma, std::int64_t p, double x, double tol = 1e-13) {
    if (x == 0.0) return {cplx(1.0), Route::series};
    if (2.0 * log10_peak_coefficient(p, sigma, x) <= 2.0) {
        return {twisted_square_sum(p, sigma, x, 0.0, std::sqrt(tol)).value, Route::series};
    }
    return {local_fourier_quad(sigma, p, x, 64, tol), Route::quadrature};
}

}  // namespace mdensity
