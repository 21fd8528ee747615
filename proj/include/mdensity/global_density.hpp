#pragma once

/**
 * @file global_density.hpp
 * @brief Euler-product assembly of Mt_{sigma,P}, Fourier inversion to
 *        M_{sigma,P}, and the direct convolution construction.
 */

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mdensity/errors.hpp"
#include "mdensity/grids.hpp"
#include "mdensity/local_density.hpp"
#include "mdensity/parallel.hpp"
#include "mdensity/primes.hpp"

namespace mdensity {

struct FourierOptions {
    double tol = 1e-10;        ///< allowed |Mt| near +-X_max
    double local_tol = 1e-13;  ///< accuracy of each local factor
    int threads = 0;
};

namespace detail {

inline void check_sigma_vs_primes(double sigma, const PrimeSet& primes) {
    require_sigma(sigma, "fourier_product");
    if (sigma < 0.51 && primes.size() < 8)
        throw ValidationError(
            "sigma < 0.51 needs at least 8 primes: Mt decays like (1+|x|)^(-|P|/2), too slowly "
            "for a finite grid to control the inversion tail");
}

/// Mt_{sigma,P}(x) and the route used for each prime.
inline cplx product_at(double sigma, const PrimeSet& primes, double x, double local_tol,
                       std::vector<Route>* routes) {
    cplx v = 1.0;
    std::size_t i = 0;
    for (auto p : primes) {
        const auto lf = local_fourier(sigma, p, x, local_tol);
        v *= lf.value;
        if (routes) (*routes)[i] = lf.route;
        ++i;
    }
    return v;
}

}  // namespace detail

/// Mt_{sigma,P}(x) at a single point.
inline cplx fourier_value(double sigma, const PrimeSet& primes, double x, double local_tol = 1e-13) {
    require_sigma(sigma, "fourier_value");
    return detail::product_at(sigma, primes, x, local_tol, nullptr);
}

/// Product of local transforms on x_k = k dx, |k| <= X_max/dx.
inline FourierGrid fourier_product(double sigma, const PrimeSet& primes, double x_max, double dx,
                                   const FourierOptions& opt = {}) {
    detail::check_sigma_vs_primes(sigma, primes);
    if (primes.empty()) throw ValidationError("fourier_product: prime set is empty");
    if (!(dx > 0) || !(x_max > 0)) throw ValidationError("fourier_product: dx, X_max must be > 0");
    const auto sup = support_of(sigma, primes);
    if (dx > std::numbers::pi / sup.width() * (1.0 + 1e-12))
        throw ValidationError("fourier_product: dx exceeds pi / (support width) = " +
                              std::to_string(std::numbers::pi / sup.width()));

    FourierGrid g;
    g.sigma = sigma;
    g.primes = primes;
    g.dx = dx;
    g.half = static_cast<std::ptrdiff_t>(std::llround(x_max / dx));
    const std::size_t n_pos = static_cast<std::size_t>(g.half) + 1;
    std::vector<cplx> pos(n_pos);
    std::vector<std::vector<Route>> routes(n_pos, std::vector<Route>(primes.size()));
    parallel_for(n_pos, opt.threads, [&](std::size_t k) {
        pos[k] = detail::product_at(sigma, primes, static_cast<double>(k) * dx, opt.local_tol,
                                    &routes[k]);
    });
    pos[0] = 1.0;

    g.values.resize(2 * n_pos - 1);
    for (std::size_t k = 0; k < n_pos; ++k) {
        g.values[static_cast<std::size_t>(g.half) + k] = pos[k];
        g.values[static_cast<std::size_t>(g.half) - k] = std::conj(pos[k]);
    }

    bool any_quad = false, any_series = false;
    for (std::size_t i = 0; i < primes.size(); ++i) {
        bool q = false, s = false;
        for (std::size_t k = 1; k < n_pos; ++k) (routes[k][i] == Route::quadrature ? q : s) = true;
        g.methods.push_back(q && s ? "mixed" : (q ? "quadrature" : "series"));
        any_quad |= q;
        any_series |= s;
    }
    g.method = any_quad && any_series ? "mixed" : (any_quad ? "quadrature" : "series");

    const std::size_t edge = std::max<std::size_t>(4, n_pos / 50);
    double boundary = 0.0;
    for (std::size_t k = n_pos > edge ? n_pos - edge : 0; k < n_pos; ++k)
        boundary = std::max(boundary, std::abs(pos[k]));
    if (boundary > opt.tol)
        throw ToleranceError("fourier_product: |Mt| = " + std::to_string(boundary) +
                             " near X_max exceeds tol; increase X_max or add primes "
                             "(decay is (1+|x|)^(-|P|/2))");
    return g;
}

/// Smallest X (on a 1.25x ladder) beyond which |Mt_{sigma,P}| stays below tol
/// on a window of probe points.
inline double suggest_x_max(double sigma, const PrimeSet& primes, double tol,
                            double local_tol = 1e-13, double limit = 1e6) {
    detail::check_sigma_vs_primes(sigma, primes);
    if (primes.empty()) throw ValidationError("suggest_x_max: prime set is empty");
    double x = 4.0;
    int quiet = 0;
    while (x < limit) {
        double worst = 0.0;
        for (int j = 0; j < 12; ++j) {
            const double xp = x * (1.0 + 0.25 * j / 12.0);
            worst = std::max(worst, std::abs(fourier_value(sigma, primes, xp, local_tol)));
        }
        quiet = worst < 0.1 * tol ? quiet + 1 : 0;
        if (quiet == 2) return x;
        x *= 1.25;
    }
    throw ToleranceError("suggest_x_max: |Mt| does not fall below tol before x = 1e6");
}

/// Grid extent at which the taper exp(-(x/W)^(2k)/2) has fallen to e^-20.
inline double tapered_x_max(double taper_width, int taper_order) {
    return taper_width * std::pow(40.0, 1.0 / (2.0 * taper_order));
}

struct InversionOptions {
    /// W > 0 multiplies Mt(x) by exp(-(x/W)^(2k) / 2) with k = taper_order. A
    /// flat-top taper (k = 4) smooths only at scale 1/W, which lets few-prime
    /// densities be resolved away from their singular points.
    double taper_width = 0.0;
    int taper_order = 4;
    double imag_tol = 1e-8;
    double neg_tol = 1e-9;
    int threads = 0;
};

/// M(u) = int Mt(x) exp(-i x u) dx / sqrt(2 pi) by the trapezoid rule on the
/// Fourier grid, for u_i = u_lo + i du up to u_hi.
inline DensityGrid inverse_transform(const FourierGrid& fg, double u_lo, double u_hi, double du,
                                     const InversionOptions& opt = {}) {
    if (!(du > 0) || !(u_hi > u_lo)) throw ValidationError("inverse_transform: bad u grid");
    if (fg.values.empty()) throw ValidationError("inverse_transform: empty Fourier grid");
    if (opt.taper_order < 1) throw ValidationError("inverse_transform: taper_order must be >= 1");
    const std::size_t n = static_cast<std::size_t>(std::floor((u_hi - u_lo) / du + 1e-9)) + 1;
    const std::size_t m = fg.values.size();

    std::vector<cplx> weighted(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double x = fg.x(k);
        double w = (k == 0 || k + 1 == m) ? 0.5 : 1.0;
        if (opt.taper_width > 0)
            w *= std::exp(-0.5 * std::pow(std::abs(x) / opt.taper_width, 2 * opt.taper_order));
        weighted[k] = fg.values[k] * w;
    }

    DensityGrid d;
    d.sigma = fg.sigma;
    d.primes = fg.primes;
    d.u0 = u_lo;
    d.du = du;
    d.support = support_of(fg.sigma, fg.primes);
    d.method = "inverse_transform(" + fg.method + ")";
    d.values.resize(n);
    std::vector<double> imag(n);
    const double scale = fg.dx / kSqrt2Pi;
    parallel_for(n, opt.threads, [&](std::size_t i) {
        const double u = u_lo + static_cast<double>(i) * du;
        // exp(-i u x_k), x_k = (k - half) dx, advanced by rotation and resynced
        const cplx step = std::polar(1.0, -u * fg.dx);
        cplx acc = 0.0, ph;
        for (std::size_t k = 0; k < m; ++k) {
            if (k % 128 == 0)
                ph = std::polar(1.0, -u * fg.x(k));
            else
                ph *= step;
            acc += weighted[k] * ph;
        }
        d.values[i] = acc.real() * scale;
        imag[i] = acc.imag() * scale;
    });
    for (double v : imag) d.imag_residue = std::max(d.imag_residue, std::abs(v));
    if (d.imag_residue > opt.imag_tol)
        throw ToleranceError("inverse_transform: imaginary residue " +
                             std::to_string(d.imag_residue) + " exceeds tolerance");
    const double lowest = *std::min_element(d.values.begin(), d.values.end());
    if (lowest < -opt.neg_tol)
        throw ToleranceError("inverse_transform: negative value " + std::to_string(lowest) +
                             "; X_max or dx insufficient");
    return d;
}

struct DensityOptions {
    double tol = 1e-12;  ///< target |Mt| at the end of the Fourier grid
    double x_max = 0.0;  ///< 0 selects suggest_x_max(tol)
    double dx = 0.0;     ///< 0 selects min(0.5, 0.9 pi / support width)
    double du = 0.005;
    double u_lo = std::numeric_limits<double>::quiet_NaN();  ///< NaN: support minus 10 cells
    double u_hi = std::numeric_limits<double>::quiet_NaN();  ///< NaN: support plus 10 cells
    int threads = 0;
};

struct DensityResult {
    FourierGrid fourier;
    DensityGrid density;
};

/// Fourier product followed by inversion, with grid parameters filled in
/// from the support and the decay of Mt. The u grid sits on multiples of du.
inline DensityResult compute_density(double sigma, const PrimeSet& primes,
                                     const DensityOptions& opt = {}) {
    detail::check_sigma_vs_primes(sigma, primes);
    if (primes.empty()) throw ValidationError("compute_density: prime set is empty");
    if (!(opt.du > 0)) throw ValidationError("compute_density: du must be positive");
    const auto sup = support_of(sigma, primes);
    const double x_max = opt.x_max > 0 ? opt.x_max : suggest_x_max(sigma, primes, opt.tol);
    const double dx = opt.dx > 0 ? opt.dx : std::min(0.5, 0.9 * std::numbers::pi / sup.width());
    DensityResult r;
    r.fourier = fourier_product(sigma, primes, x_max, dx, {10.0 * opt.tol, 1e-13, opt.threads});
    const double lo = std::isnan(opt.u_lo) ? (std::floor(sup.lo / opt.du) - 10.0) * opt.du : opt.u_lo;
    const double hi = std::isnan(opt.u_hi) ? sup.hi + 10.0 * opt.du : opt.u_hi;
    InversionOptions inv;
    inv.threads = opt.threads;
    r.density = inverse_transform(r.fourier, lo, hi, opt.du, inv);
    return r;
}

/// Discrete convolution (sum_j d1_j d2_{k-j}) du / sqrt(2 pi).
inline DensityGrid convolve(const DensityGrid& d1, const DensityGrid& d2) {
    if (std::abs(d1.du - d2.du) > 1e-12 * d1.du)
        throw ValidationError("convolve: grid spacings differ");
    if (d1.sigma != d2.sigma) throw ValidationError("convolve: sigma differs");
    if (d1.values.empty() || d2.values.empty()) throw ValidationError("convolve: empty grid");
    DensityGrid out;
    out.sigma = d1.sigma;
    out.primes = set_union(d1.primes, d2.primes);
    out.du = d1.du;
    out.u0 = d1.u0 + d2.u0;
    out.support = {d1.support.lo + d2.support.lo, d1.support.hi + d2.support.hi};
    out.method = "convolution";
    const std::size_t n1 = d1.size(), n2 = d2.size();
    out.values.assign(n1 + n2 - 1, 0.0);
    const double scale = d1.du / kSqrt2Pi;
    for (std::size_t k = 0; k < out.values.size(); ++k) {
        const std::size_t j_lo = k >= n2 - 1 ? k - (n2 - 1) : 0;
        const std::size_t j_hi = std::min(k, n1 - 1);
        long double s = 0;
        for (std::size_t j = j_lo; j <= j_hi; ++j) s += d1.values[j] * d2.values[k - j];
        out.values[k] = static_cast<double>(s) * scale;
    }
    return out;
}

/// Cumulative distribution on a density grid's nodes.
struct CdfGrid {
    double sigma = 1.0;
    PrimeSet primes;
    double u0 = 0.0;
    double du = 0.01;
    std::vector<double> values;

    /// Linear interpolation; 0 left of the grid, 1 right of it.
    [[nodiscard]] double operator()(double u) const {
        if (values.empty()) return 0.0;
        const double t = (u - u0) / du;
        if (t <= 0) return values.front() * (t >= 0 ? 1.0 : 0.0);
        const std::size_t n = values.size();
        if (t >= static_cast<double>(n - 1)) return 1.0;
        const auto i = static_cast<std::size_t>(t);
        const double f = t - static_cast<double>(i);
        return values[i] + f * (values[i + 1] - values[i]);
    }
};

/// Running trapezoid integral, clamped monotone and renormalised to end at 1.
inline CdfGrid density_cdf(const DensityGrid& d) {
    if (d.values.empty()) throw ValidationError("density_cdf: empty grid");
    const double mass = d.mass();
    if (std::abs(mass - 1.0) > 1e-4)
        throw ValidationError("density_cdf: density mass " + std::to_string(mass) +
                              " is not normalised within 1e-4");
    CdfGrid c{d.sigma, d.primes, d.u0, d.du, std::vector<double>(d.size(), 0.0)};
    long double run = 0;
    for (std::size_t i = 1; i < d.size(); ++i) {
        const double a = std::max(d.values[i - 1], 0.0);
        const double b = std::max(d.values[i], 0.0);
        run += 0.5 * (a + b) * d.du / kSqrt2Pi;
        c.values[i] = static_cast<double>(run);
    }
    const double total = c.values.back();
    for (auto& v : c.values) v = std::min(1.0, v / total);
    c.values.back() = 1.0;
    return c;
}

/// Test functions Psi accepted by integrate_against.
struct IndicatorFn {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    [[nodiscard]] double operator()(double u) const { return (u >= lo && u <= hi) ? 1.0 : 0.0; }
};
struct CharacterFn {
    double x = 0.0;  ///< psi_x(u) = exp(i x u)
    [[nodiscard]] cplx operator()(double u) const { return std::polar(1.0, x * u); }
};
using TestFunction = std::variant<IndicatorFn, CharacterFn, std::function<cplx(double)>>;

/// int M(u) Psi(u) du / sqrt(2 pi).
inline cplx integrate_against(const DensityGrid& d, const TestFunction& psi) {
    return std::visit(
        [&](const auto& f) -> cplx {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, IndicatorFn>) {
                // exact on the piecewise-linear interpolant of M
                const std::size_t n = d.size();
                long double s = 0;
                for (std::size_t i = 0; i + 1 < n; ++i) {
                    const double a = std::max(d.u(i), f.lo);
                    const double b = std::min(d.u(i + 1), f.hi);
                    if (b <= a) continue;
                    const double ta = (a - d.u(i)) / d.du, tb = (b - d.u(i)) / d.du;
                    const double va = d.values[i] + ta * (d.values[i + 1] - d.values[i]);
                    const double vb = d.values[i] + tb * (d.values[i + 1] - d.values[i]);
                    s += 0.5 * (va + vb) * (b - a);
                }
                return cplx(static_cast<double>(s) / kSqrt2Pi);
            } else {
                return d.integrate([&](double u) { return cplx(f(u)); });
            }
        },
        psi);
}

/// sum_p sum_j 2 / (j^2 p^{2 j sigma}); the variance of sum_p 2 Re g_{sigma,p}.
inline double analytic_variance(double sigma, const PrimeSet& primes) {
    require_sigma(sigma, "analytic_variance");
    long double total = 0;
    for (auto p : primes) {
        const long double z2 = std::exp(-2.0L * sigma * std::log(static_cast<long double>(p)));
        long double pw = 1, s = 0;
        for (int j = 1; j < 10'000; ++j) {
            pw *= z2;
            const long double term = 2 * pw / (static_cast<long double>(j) * j);
            s += term;
            if (term < 1e-16L * s) break;
        }
        total += s;
    }
    return static_cast<double>(total);
}

/// Estimate of the variance missing from a finite prime set: primes up to
/// `enumerate_to` not in the set are summed, beyond that the prime number
/// theorem integral 2 Y^{1-2 sigma} / ((2 sigma - 1) log Y) is added.
inline double variance_deficit(double sigma, const PrimeSet& primes,
                               std::int64_t enumerate_to = 1'000'000) {
    require_sigma(sigma, "variance_deficit");
    const auto all = primes_up_to(enumerate_to);
    long double s = 0;
    for (auto p : all) {
        if (primes.contains(p) || (primes.excluded() && *primes.excluded() == p)) continue;
        s += analytic_variance(sigma, PrimeSet(std::vector<std::int64_t>{p}));
    }
    const double y = static_cast<double>(enumerate_to);
    s += 2.0 * std::pow(y, 1.0 - 2.0 * sigma) / ((2.0 * sigma - 1.0) * std::log(y));
    return static_cast<double>(s);
}

}  // namespace mdensity
