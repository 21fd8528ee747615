#pragma once

/**
 * @file grids.hpp
 * @brief Uniform grids carrying Fourier transforms and densities.
 *
 * Densities are normalised against du/sqrt(2 pi), Fourier transforms use the
 * kernel psi_x(u) = exp(i x u):
 *
 *     Mt(x) = int M(u) exp(i x u) du / sqrt(2 pi),
 *     M(u)  = int Mt(x) exp(-i x u) dx / sqrt(2 pi).
 */

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "mdensity/errors.hpp"
#include "mdensity/primes.hpp"

namespace mdensity {

using cplx = std::complex<double>;

inline constexpr double kSqrt2Pi = 2.5066282746310002;  // sqrt(2 pi)

/// The abscissa sigma (> 1/2) and vertical shift tau.
struct SigmaParam {
    double sigma = 1.0;
    double tau = 0.0;

    SigmaParam() = default;
    explicit SigmaParam(double s, double t = 0.0) : sigma(s), tau(t) {
        if (!(sigma > 0.5) || !std::isfinite(sigma))
            throw ValidationError("SigmaParam: sigma must be > 1/2");
        if (!std::isfinite(tau)) throw ValidationError("SigmaParam: tau must be finite");
    }
};

struct SupportInterval {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] double width() const noexcept { return hi - lo; }
    [[nodiscard]] bool contains_open(double u) const noexcept { return u > lo && u < hi; }
    [[nodiscard]] double midpoint() const noexcept { return 0.5 * (lo + hi); }
};

/// Image of (-pi, 0) under u(theta) = -2 log|1 - e^{i theta} p^{-sigma}|.
inline SupportInterval local_support(double sigma, std::int64_t p) {
    const double z = std::exp(-sigma * std::log(static_cast<double>(p)));
    return {-2.0 * std::log1p(z), -2.0 * std::log1p(-z)};
}

/// Minkowski sum of the local supports.
inline SupportInterval support_of(double sigma, const PrimeSet& primes) {
    SupportInterval s{0.0, 0.0};
    for (auto p : primes) {
        const auto l = local_support(sigma, p);
        s.lo += l.lo;
        s.hi += l.hi;
    }
    return s;
}

/// Which route produced a local Fourier factor.
enum class Route { quadrature, series };

inline const char* to_string(Route r) noexcept {
    return r == Route::quadrature ? "quadrature" : "series";
}

/// Mt_{sigma,P} on the symmetric grid x_k = k dx, k = -half..half.
struct FourierGrid {
    double sigma = 1.0;
    PrimeSet primes;
    double dx = 0.1;
    std::ptrdiff_t half = 0;
    std::vector<cplx> values;          ///< index k + half
    std::vector<std::string> methods;  ///< per prime: quadrature | series | mixed
    std::string method;                ///< overall tag: quadrature | series | mixed

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] double x(std::size_t i) const noexcept {
        return static_cast<double>(static_cast<std::ptrdiff_t>(i) - half) * dx;
    }
    [[nodiscard]] double x_max() const noexcept { return static_cast<double>(half) * dx; }
    [[nodiscard]] cplx at_offset(std::ptrdiff_t k) const {
        return values.at(static_cast<std::size_t>(k + half));
    }
};

/// A density on the grid u_i = u0 + i du.
struct DensityGrid {
    double sigma = 1.0;
    PrimeSet primes;
    double u0 = 0.0;
    double du = 0.01;
    std::vector<double> values;
    SupportInterval support;
    std::string method;
    double imag_residue = 0.0;  ///< largest |Im| seen during inversion

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] double u(std::size_t i) const noexcept {
        return u0 + static_cast<double>(i) * du;
    }
    [[nodiscard]] double u_last() const noexcept {
        return values.empty() ? u0 : u(values.size() - 1);
    }

    /// Trapezoid integral of f(u) M(u) du / sqrt(2 pi).
    template <class F>
    [[nodiscard]] auto integrate(F&& f) const {
        using R = decltype(f(0.0) * 1.0);
        R s{};
        const std::size_t n = values.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
            s += f(u(i)) * (w * values[i]);
        }
        return s * (du / kSqrt2Pi);
    }

    [[nodiscard]] double mass() const {
        return integrate([](double) { return 1.0; });
    }
};

struct Moments {
    double mass = 0;
    double mean = 0;
    double variance = 0;  ///< central second moment about the mean
    double second = 0;    ///< raw second moment
};

inline Moments moments(const DensityGrid& d) {
    Moments m;
    m.mass = d.mass();
    m.mean = d.integrate([](double u) { return u; });
    m.second = d.integrate([](double u) { return u * u; });
    m.variance = m.second / m.mass - (m.mean / m.mass) * (m.mean / m.mass);
    return m;
}

}  // namespace mdensity
