#pragma once

/**
 * @file coefficients.hpp
 * @brief Taylor coefficients of x -> exp(i x g_{sigma,p}(t)) in the circle variable t.
 *
 * With z = p^{-sigma} and g(t) = -log(1 - t z),
 *
 *     exp(i x g(t)) = (1 - t z)^{-ix} = sum_a G_a(p, x) t^a,
 *     G_a(p, x)     = z^a (ix)(ix+1)...(ix+a-1) / a!.
 *
 * The majorant G_a(|x|) = sum_{n=1}^{a} |x|^n/n! binom(a-1, n-1) bounds
 * |G_a(p, x)| <= z^a G_a(|x|), and sum_a z^a G_a(|x|) = exp(|x| z / (1 - z)).
 * Every series truncation in the library is sized from that majorant.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "mdensity/errors.hpp"

namespace mdensity {

using cplx = std::complex<double>;

inline void require_sigma(double sigma, const char* who) {
    if (!(sigma > 0.5) || !std::isfinite(sigma))
        throw ValidationError(std::string(who) + ": sigma must be > 1/2");
}

/// p^{-sigma}
inline double prime_weight(std::int64_t p, double sigma) {
    return std::exp(-sigma * std::log(static_cast<double>(p)));
}

/// g_{sigma,p}(t p^{-i tau}) = -Log(1 - t p^{-i tau} p^{-sigma}), principal branch.
inline cplx g_local(double sigma, std::int64_t p, cplx t, double tau = 0.0) {
    require_sigma(sigma, "g_local");
    if (std::abs(std::abs(t) - 1.0) > 1e-12)
        throw ValidationError("g_local: |t| must be 1");
    const double lp = std::log(static_cast<double>(p));
    const cplx rot = std::polar(1.0, -tau * lp);
    return -std::log(1.0 - t * rot * prime_weight(p, sigma));
}

/// Majorant G_a(x) for x >= 0.
inline double majorant(int a, double xabs) {
    if (a < 0) throw ValidationError("majorant: a must be >= 0");
    if (xabs < 0) throw ValidationError("majorant: expects |x|");
    if (a == 0) return 1.0;
    // term_n = x^n/n! binom(a-1, n-1); term_{n+1}/term_n = x (a-n) / (n (n+1))
    long double term = xabs;
    long double sum = term;
    for (int n = 1; n < a; ++n) {
        term *= static_cast<long double>(xabs) * (a - n) / (static_cast<long double>(n) * (n + 1));
        sum += term;
    }
    return static_cast<double>(sum);
}

/// L_r(x) = sum_{m=0}^{r} G_m(x)
inline double majorant_partial_sum(int r, double xabs) {
    if (r < 0) throw ValidationError("majorant_partial_sum: r must be >= 0");
    long double s = 0;
    for (int m = 0; m <= r; ++m) s += majorant(m, xabs);
    return static_cast<double>(s);
}

/// sum_a p^{-a sigma} G_a(|x|) = exp(|x| / (p^sigma - 1))
inline double majorant_total(std::int64_t p, double sigma, double xabs) {
    return std::exp(xabs / (std::exp(sigma * std::log(static_cast<double>(p))) - 1.0));
}

namespace detail {

inline constexpr int kMaxNestedOrder = 25;

/// Exact enumeration of compositions a = j_1 + ... + j_n, accumulating
/// 1/(j_1 ... j_n) into out[n].
inline void enumerate_compositions(int remaining, int parts, long double weight,
                                   std::vector<long double>& out) {
    if (remaining == 0) {
        out[static_cast<std::size_t>(parts)] += weight;
        return;
    }
    for (int j = 1; j <= remaining; ++j)
        enumerate_compositions(remaining - j, parts + 1, weight / j, out);
}

inline const std::vector<long double>& composition_weights(int a) {
    static std::mutex mu;
    static std::array<std::vector<long double>, kMaxNestedOrder + 1> cache;
    std::lock_guard lock(mu);
    auto& w = cache[static_cast<std::size_t>(a)];
    if (w.empty()) {
        w.assign(static_cast<std::size_t>(a) + 1, 0.0L);
        enumerate_compositions(a, 0, 1.0L, w);
    }
    return w;
}

}  // namespace detail

/// G_a(p, x) by the nested composition sum. Exponential in a; test oracle only.
inline cplx coeff_nested(std::int64_t p, double sigma, double x, int a) {
    if (a < 0) throw ValidationError("coeff_nested: a must be >= 0");
    if (a > detail::kMaxNestedOrder)
        throw ValidationError("coeff_nested: a > 25 is out of range for exact enumeration");
    if (a == 0) return 1.0;
    const auto& w = detail::composition_weights(a);
    std::complex<long double> sum = 0;
    std::complex<long double> ixn = 1;
    long double nfact = 1;
    const std::complex<long double> ix(0.0L, x);
    for (int n = 1; n <= a; ++n) {
        ixn *= ix;
        nfact *= n;
        sum += ixn / nfact * w[static_cast<std::size_t>(n)];
    }
    const long double za = std::pow(static_cast<long double>(p), -static_cast<long double>(a) * sigma);
    return {static_cast<double>(sum.real() * za), static_cast<double>(sum.imag() * za)};
}

/// G_a(p, x) = p^{-a sigma} (ix)_a / a!, rising factorial.
inline cplx coeff_rising(std::int64_t p, double sigma, double x, int a) {
    if (a < 0) throw ValidationError("coeff_rising: a must be >= 0");
    const double z = prime_weight(p, sigma);
    cplx c = 1.0;
    for (int j = 0; j < a; ++j) c *= cplx(j, x) * (z / (j + 1));
    return c;
}

namespace detail {

/// log of the bound exp(x w/(1-w)) (z/w)^{A+1} / (1 - z/w), valid for z < w < 1.
inline double log_chernoff(double z, double xabs, int a_max, double w) {
    return xabs * w / (1.0 - w) + (a_max + 1.0) * std::log(z / w) - std::log1p(-z / w);
}

}  // namespace detail

/// Rigorous bound on sum_{a > a_max} p^{-a sigma} G_a(|x|), minimised over the radius w.
inline double majorant_tail_bound(std::int64_t p, double sigma, double xabs, int a_max) {
    if (xabs == 0.0) return 0.0;
    const double z = prime_weight(p, sigma);
    // golden section on w in (z, 1)
    double lo = z + (1.0 - z) * 1e-12;
    double hi = 1.0 - (1.0 - z) * 1e-12;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
    double fc = detail::log_chernoff(z, xabs, a_max, c);
    double fd = detail::log_chernoff(z, xabs, a_max, d);
    for (int it = 0; it < 120; ++it) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = detail::log_chernoff(z, xabs, a_max, c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = detail::log_chernoff(z, xabs, a_max, d);
        }
    }
    return std::exp(std::min(fc, fd));
}

/// Coefficients G_0..G_{a_max}(p, x) with a certified tail.
struct CoeffTable {
    std::int64_t p = 2;
    double sigma = 1.0;
    double x = 0.0;
    int a_max = 0;
    std::vector<cplx> values;
    double tail_bound = 0.0;  ///< >= sum_{a > a_max} |G_a(p, x)|
};

inline constexpr int kMaxCoeffOrder = 10'000;

inline CoeffTable coeff_table(std::int64_t p, double sigma, double x, double tol) {
    require_sigma(sigma, "coeff_table");
    if (!(tol > 0)) throw ValidationError("coeff_table: tol must be positive");
    const double xabs = std::abs(x);
    const double z = prime_weight(p, sigma);

    CoeffTable t{p, sigma, x, 0, {cplx(1.0)}, 0.0};
    if (xabs == 0.0) return t;

    // smallest A with the Chernoff bound below tol
    if (majorant_tail_bound(p, sigma, xabs, kMaxCoeffOrder) >= tol)
        throw ToleranceError("coeff_table: more than 1e4 coefficients needed for p=" +
                             std::to_string(p) + ", x=" + std::to_string(x) +
                             "; |x| is too large for this (p, sigma)");
    int lo = 0, hi = kMaxCoeffOrder;
    while (lo < hi) {
        const int mid = lo + (hi - lo) / 2;
        if (majorant_tail_bound(p, sigma, xabs, mid) < tol)
            hi = mid;
        else
            lo = mid + 1;
    }
    int a_max = lo;
    double tail = majorant_tail_bound(p, sigma, xabs, a_max);

    // Scaled majorants H_a = z^a G_a(|x|) from (1-z)^2 F' = x F:
    // (a+1) G_{a+1} = (2a + x) G_a - (a-1) G_{a-1}.
    std::vector<double> h{1.0, z * xabs};
    const double total = majorant_total(p, sigma, xabs);
    if (std::isfinite(total)) {
        long double partial = 1.0L + h[1];
        for (int a = 1; a < a_max; ++a) {
            if (a + 1 >= static_cast<int>(h.size())) {
                const double next =
                    z * ((2.0 * a + xabs) * h[static_cast<std::size_t>(a)] -
                         (a - 1.0) * z * h[static_cast<std::size_t>(a - 1)]) / (a + 1.0);
                h.push_back(next);
            }
            partial += h[static_cast<std::size_t>(a + 1)];
            const double slack = 8.0 * (a + 2) * std::numeric_limits<double>::epsilon() * total;
            const double rest = total - static_cast<double>(partial) + slack;
            if (rest > 0 && rest < tol) {
                // the Chernoff value bounds the tail past the old a_max only
                if (a + 1 < a_max) {
                    a_max = a + 1;
                    tail = rest;
                }
                break;
            }
        }
    }
    while (static_cast<int>(h.size()) <= a_max) {
        const int a = static_cast<int>(h.size()) - 1;
        h.push_back(z * ((2.0 * a + xabs) * h[static_cast<std::size_t>(a)] -
                         (a - 1.0) * z * h[static_cast<std::size_t>(a - 1)]) / (a + 1.0));
    }

    t.a_max = a_max;
    t.tail_bound = tail;
    t.values.resize(static_cast<std::size_t>(a_max) + 1);
    cplx c = 1.0;
    for (int a = 0; a <= a_max; ++a) {
        if (a > 0) c *= cplx(a - 1, x) * (z / a);
        t.values[static_cast<std::size_t>(a)] = c;
        const double bound = h[static_cast<std::size_t>(a)];
        if (std::abs(c) > bound * (1.0 + 1e-10) + 1e-300)
            throw ToleranceError("coeff_table: majorant domination violated at a=" +
                                 std::to_string(a));
    }
    return t;
}

namespace detail {

namespace bmp = boost::multiprecision;
using real50 = bmp::number<bmp::cpp_bin_float<50>, bmp::et_off>;
using real100 = bmp::number<bmp::cpp_bin_float<100>, bmp::et_off>;
using real300 = bmp::number<bmp::cpp_bin_float<300>, bmp::et_off>;

/// sum_{a<=a_max} (G_a(p,x) w^a)^2 with w = p^{-i tau}, accumulated in Real.
template <class Real>
cplx twisted_square_sum(std::int64_t p, double sigma, double x, double tau, int a_max) {
    using std::cos, std::exp, std::log, std::sin;
    const Real lp = log(Real(p));
    const Real z = exp(-Real(sigma) * lp);
    const Real phi = -Real(tau) * lp;
    const Real mr = z * cos(phi), mi = z * sin(phi);
    Real cr = 1, ci = 0;
    Real sr = 1, si = 0;
    const Real xr = Real(x);
    for (int a = 0; a < a_max; ++a) {
        // c *= (a + i x) / (a + 1) * m
        const Real ar = Real(a);
        Real tr = cr * ar - ci * xr;
        Real ti = cr * xr + ci * ar;
        const Real nr = (tr * mr - ti * mi) / (a + 1);
        const Real ni = (tr * mi + ti * mr) / (a + 1);
        cr = nr;
        ci = ni;
        sr += cr * cr - ci * ci;
        si += 2 * cr * ci;
    }
    return {static_cast<double>(sr), static_cast<double>(si)};
}

}  // namespace detail

/// Result of a squared-coefficient sum with its error budget.
struct SquareSum {
    cplx value;
    int a_max = 0;
    double tail_bound = 0;  ///< bound on the omitted sum_{a > a_max} |G_a|^2
    int digits = 16;        ///< working precision used for the accumulation
};

/// sum_a (G_a(p,x) p^{-i a tau})^2, the local factor of the torus integral.
/// At tau = 0 this is the Fourier transform of the local density.
inline SquareSum twisted_square_sum(std::int64_t p, double sigma, double x, double tau,
                                    double tol) {
    const CoeffTable t = coeff_table(p, sigma, x, tol);
    double max_abs = 0;
    for (const auto& c : t.values) max_abs = std::max(max_abs, std::abs(c));
    const double scale = max_abs * max_abs;
    SquareSum out;
    out.a_max = t.a_max;
    out.tail_bound = t.tail_bound * t.tail_bound;
    if (scale <= 1e2) {
        out.value = detail::twisted_square_sum<long double>(p, sigma, x, tau, t.a_max);
        out.digits = 18;
    } else if (scale <= 1e28) {
        out.value = detail::twisted_square_sum<detail::real50>(p, sigma, x, tau, t.a_max);
        out.digits = 50;
    } else if (scale <= 1e78) {
        out.value = detail::twisted_square_sum<detail::real100>(p, sigma, x, tau, t.a_max);
        out.digits = 100;
    } else if (scale <= 1e270) {
        out.value = detail::twisted_square_sum<detail::real300>(p, sigma, x, tau, t.a_max);
        out.digits = 300;
    } else {
        throw ToleranceError("twisted_square_sum: coefficient magnitudes exceed 1e135");
    }
    return out;
}

}  // namespace mdensity
