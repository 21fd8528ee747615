#pragma once

/**
 * @file verify.hpp
 * @brief The self-check suite behind `mdensity verify`: each check measures
 *        an error against a pinned tolerance.
 *
 * The report contains no timings, so runs with the same options produce
 * byte-identical text for any thread count.
 */

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "mdensity/coefficients.hpp"
#include "mdensity/forms.hpp"
#include "mdensity/global_density.hpp"
#include "mdensity/local_density.hpp"
#include "mdensity/primes.hpp"
#include "mdensity/sampler.hpp"

namespace mdensity::verify {

struct Check {
    int criterion = 0;  ///< 0 for the quick subset
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct Options {
    int threads = 0;
    bool quick = false;
    std::uint64_t seed = 42;
    std::size_t mc_samples = 1'000'000;
};

/// Record with lambda(p) = 2 cos(pi U_p) for p in `primes`, U from the
/// counter generator keyed by (seed, index, p).
inline HeckeFormRecord synthetic_record(const std::string& label, std::int64_t q,
                                        const PrimeSet& primes, std::uint64_t seed,
                                        std::uint64_t index, int k = 2, int m = 1) {
    HeckeFormRecord r;
    r.label = label;
    r.k = k;
    r.q = q;
    r.m = m;
    for (auto p : primes)
        r.lambda[p] = 2.0 * std::cos(std::numbers::pi *
                                     counter_uniform(seed, index, static_cast<std::uint64_t>(p)));
    return r;
}

namespace detail {

inline Check le(int criterion, std::string name, double measured, double tol) {
    return {criterion, std::move(name), measured, tol, std::isfinite(measured) && measured <= tol};
}

inline std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

/// Nodes of the density grid at distance >= gap from every sum of local
/// support endpoints (the singular points of the density).
inline bool away_from_singular(double u, double sigma, const PrimeSet& primes, double gap) {
    std::vector<double> ends{0.0};
    for (auto p : primes) {
        const auto l = local_support(sigma, p);
        std::vector<double> next;
        for (double e : ends) {
            next.push_back(e + l.lo);
            next.push_back(e + l.hi);
        }
        ends = std::move(next);
    }
    for (double e : ends)
        if (std::abs(u - e) < gap) return false;
    return true;
}

/// Flat-top tapered inversion on the grid of multiples of du.
inline DensityGrid tapered_density(double sigma, const PrimeSet& primes, double du,
                                   double taper_width, int threads) {
    const auto sup = support_of(sigma, primes);
    const double dx = 0.9 * std::numbers::pi / sup.width();
    const auto fg = fourier_product(sigma, primes, tapered_x_max(taper_width, 4), dx,
                                    {1.0, 1e-13, threads});
    InversionOptions inv;
    inv.taper_width = taper_width;
    inv.taper_order = 4;
    inv.neg_tol = std::numeric_limits<double>::infinity();  // ringing next to singular points
    inv.threads = threads;
    return inverse_transform(fg, (std::floor(sup.lo / du) - 100.0) * du,
                             (std::ceil(sup.hi / du) + 100.0) * du, du, inv);
}

}  // namespace detail

inline constexpr double kTaperWidth = 1200.0;

/// The quick subset: direct consequences of the definitions.
inline std::vector<Check> quick_checks() {
    using detail::le;
    std::vector<Check> out;
    const auto p10 = primes_up_to(10);
    out.push_back(le(0, "primes_up_to(10) = {2,3,5,7}",
                     p10 == PrimeSet({2, 3, 5, 7}) ? 0.0 : 1.0, 0.0));
    const auto ex = exclude(PrimeSet({2, 3, 5}), 3);
    out.push_back(le(0, "exclude({2,3,5}, 3) = {2,5}",
                     ex == PrimeSet({2, 5}, 3) ? 0.0 : 1.0, 0.0));
    out.push_back(le(0, "q_min(3) = 67", std::abs(static_cast<double>(q_min(3) - 67)), 0.0));
    out.push_back(le(0, "g_local(1, 2, 1) = ln 2",
                     std::abs(g_local(1.0, 2, cplx(1.0)) - cplx(std::numbers::ln2)), 1e-15));
    out.push_back(le(0, "majorant G_0(5) = 1", std::abs(majorant(0, 5.0) - 1.0), 0.0));
    out.push_back(le(0, "majorant L_1(2) = 3", std::abs(majorant_partial_sum(1, 2.0) - 3.0), 1e-15));
    out.push_back(le(0, "G_1(2, x=1, sigma=1) = i/2",
                     std::abs(coeff_rising(2, 1.0, 1.0, 1) - cplx(0.0, 0.5)), 1e-16));
    out.push_back(le(0, "local transform at x = 0 is 1",
                     std::abs(local_fourier_quad(1.0, 2, 0.0) - 1.0), 1e-14));
    out.push_back(le(0, "local transform conjugate symmetry (p=2, x=3)",
                     std::abs(local_fourier_quad(1.0, 2, -3.0) -
                              std::conj(local_fourier_quad(1.0, 2, 3.0))),
                     1e-13));
    out.push_back(le(0, "local density zero outside support",
                     std::abs(local_density(2.0, 1.0, 2)), 0.0));
    {
        const auto sup = local_support(1.0, 2);
        out.push_back(le(0, "local support of (1, 2) = [-2 ln 1.5, -2 ln 0.5]",
                         std::max(std::abs(sup.lo + 2 * std::log(1.5)),
                                  std::abs(sup.hi + 2 * std::log(0.5))),
                         1e-15));
    }
    const auto b = sample_values(1.0, 0.0, PrimeSet({2, 3}), 1, 100, 1, 1);
    out.push_back(le(0, "empirical characteristic at x = 0 is 1",
                     std::abs(empirical_characteristic(b, 0.0) - 1.0), 0.0));
    out.push_back(le(0, "lambda(p^0) = 1", std::abs(lambda_prime_power(1.3, 0, false) - 1.0), 0.0));
    out.push_back(le(0, "lambda(p^3) at lambda = 2 is 4",
                     std::abs(lambda_prime_power(2.0, 3, false) - 4.0), 1e-15));
    return out;
}

/// Checks for one acceptance criterion (1..9).
inline std::vector<Check> criterion_checks(int c, const Options& opt) {
    using detail::fmt;
    using detail::le;
    std::vector<Check> out;
    switch (c) {
        case 1: {
            for (double s : {0.75, 1.0, 1.5}) {
                const auto r = compute_density(s, primes_up_to(50), {.threads = opt.threads});
                out.push_back(le(1, "mass of M_{sigma,P_50}, sigma=" + fmt("%g", s),
                                 std::abs(r.density.mass() - 1.0), 1e-6));
            }
            break;
        }
        case 2: {
            double worst = 0.0;
            for (std::int64_t p : {2, 3, 5})
                for (double s : {0.6, 1.0, 1.5})
                    for (int x = -3; x <= 3; ++x)
                        for (int a = 0; a <= 20; ++a) {
                            const cplx r = coeff_rising(p, s, x, a);
                            worst = std::max(worst, std::abs(coeff_nested(p, s, x, a) - r) /
                                                        (1.0 + std::abs(r)));
                        }
            out.push_back(le(2, "nested vs rising G_a(p,x), a<=20", worst, 1e-12));
            break;
        }
        case 3: {
            double worst = 0.0;
            for (std::int64_t p : {2, 3, 5, 13})
                for (double s : {0.6, 1.0, 1.5})
                    for (int x = -50; x <= 50; x += 5)
                        worst = std::max(worst, std::abs(local_fourier_quad(s, p, x) -
                                                         local_fourier_series(s, p, x, 1e-12)));
            out.push_back(le(3, "quadrature vs series local transform", worst, 1e-9));
            break;
        }
        case 4: {
            const std::int64_t pairs[3][2] = {{2, 3}, {2, 5}, {3, 7}};
            for (double tau : {0.0, 0.7}) {
                double worst = 0.0;
                for (double s : {0.6, 1.0})
                    for (const auto& pr : pairs)
                        for (double x : {0.0, 0.5, 1.0, 2.0, 5.0}) {
                            const cplx torus = torus_integral_2d(s, tau, pr[0], pr[1], x, 256);
                            const std::int64_t ps[2] = {pr[0], pr[1]};
                            worst = std::max(worst,
                                             std::abs(torus - torus_series_product(s, tau, ps, x, 1e-12)));
                        }
                out.push_back(le(4, "torus integral vs prod sum G_a^2, tau=" + fmt("%g", tau), worst,
                                 1e-8));
            }
            break;
        }
        case 5: {
            for (double s : {0.75, 1.0}) {
                const auto P = primes_up_to(50);
                const auto r = compute_density(s, P, {.threads = opt.threads});
                const auto m = moments(r.density);
                out.push_back(le(5, "mean of M_{sigma,P_50}, sigma=" + fmt("%g", s), std::abs(m.mean),
                                 1e-6));
                out.push_back(le(5, "variance vs termwise series, sigma=" + fmt("%g", s),
                                 std::abs(m.variance - analytic_variance(s, P)), 1e-5));
            }
            break;
        }
        case 6: {
            const double du = 1e-3;
            for (const auto& P : {PrimeSet({2, 3}), PrimeSet({2, 3, 5})}) {
                DensityGrid conv = local_density_grid(1.0, P[0], du);
                for (std::size_t j = 1; j < P.size(); ++j)
                    conv = convolve(conv, local_density_grid(1.0, P[j], du));
                const auto inv = detail::tapered_density(1.0, P, du, kTaperWidth, opt.threads);
                double worst = 0.0;
                for (std::size_t i = 0; i < conv.size(); ++i) {
                    const double u = conv.u(i);
                    if (!detail::away_from_singular(u, 1.0, P, 0.05)) continue;
                    const auto k = std::llround((u - inv.u0) / du);
                    worst = std::max(worst,
                                     std::abs(inv.values.at(static_cast<std::size_t>(k)) - conv.values[i]));
                }
                out.push_back(le(6, "convolution vs inversion, P={" + P.to_string() + "}", worst, 1e-4));
            }
            break;
        }
        case 7: {
            const auto P = primes_up_to(20);
            const auto r = compute_density(1.0, P, {.threads = opt.threads});
            const auto batch = sample_values(1.0, 0.0, P, 3, opt.mc_samples, opt.seed, opt.threads);
            out.push_back(le(7, "KS distance, n=" + std::to_string(opt.mc_samples) + " mu=3",
                             ks_distance(batch, density_cdf(r.density)), 0.005));
            const double band = 3.0 / std::sqrt(static_cast<double>(opt.mc_samples));
            for (double x : {0.5, 1.0, 2.0})
                out.push_back(le(7, "empirical characteristic at x=" + fmt("%g", x),
                                 std::abs(empirical_characteristic(batch, x) -
                                          fourier_value(1.0, P, x)),
                                 band));
            break;
        }
        case 8: {
            for (double s : {0.75, 1.0}) {
                const std::vector<PrimeSet> chain{PrimeSet({2}), PrimeSet({2, 3}), primes_up_to(20),
                                                  primes_up_to(50)};
                std::vector<FourierGrid> grids;
                for (const auto& P : chain)
                    grids.push_back(fourier_product(s, P, 50.0, 0.05, {1.0, 1e-13, opt.threads}));
                double worst = -1.0;
                for (std::size_t j = 1; j < grids.size(); ++j)
                    for (std::size_t i = 0; i < grids[j].size(); ++i)
                        worst = std::max(worst, std::abs(grids[j].values[i]) -
                                                    std::min(1.0, std::abs(grids[j - 1].values[i])));
                out.push_back(le(8, "|Mt_P| - min(1, |Mt_P'|) on nested sets, sigma=" + fmt("%g", s),
                                 std::max(worst, 0.0), 1e-12));
            }
            break;
        }
        case 9: {
            const auto P = exclude(primes_up_to(50), 101);
            double worst_diff = 0.0;
            for (int i = 0; i < 20; ++i) {
                const auto f = synthetic_record("s" + std::to_string(i), 101, P, opt.seed,
                                                static_cast<std::uint64_t>(i));
                for (int mu : {3, 4, 5}) {
                    const SymPowerPair pair(mu, mu - 2);
                    const double direct = log_partial_sym_diff(f, pair, 1.0, P);
                    const double euler = log_partial_sym_power(f, mu, 1.0, P) -
                                         log_partial_sym_power(f, mu - 2, 1.0, P);
                    worst_diff = std::max(worst_diff, std::abs(direct - euler));
                }
            }
            out.push_back(le(9, "log-difference vs full Euler factors, 20 records", worst_diff, 1e-10));
            double worst_tel = 0.0, worst_cheb = 0.0;
            for (int i = 0; i < 200; ++i) {
                const double theta = 0.1 + 2.9 * counter_uniform(opt.seed, 1000, i);
                const double lam = 2.0 * std::cos(theta);
                for (int g = 0; g <= 10; ++g) {
                    worst_cheb = std::max(worst_cheb,
                                          std::abs(lambda_prime_power(lam, g, false) -
                                                   std::sin((g + 1) * theta) / std::sin(theta)));
                    if (g >= 2) {
                        // alpha^g + beta^g = 2 cos(g theta)
                        worst_tel = std::max(
                            worst_tel, std::abs(2.0 * std::cos(g * theta) -
                                                (lambda_prime_power(lam, g, false) -
                                                 lambda_prime_power(lam, g - 2, false))));
                    }
                }
            }
            out.push_back(le(9, "alpha^mu + beta^mu = lambda(p^mu) - lambda(p^(mu-2))", worst_tel,
                             1e-10));
            out.push_back(le(9, "lambda(p^g) = sin((g+1)theta)/sin(theta), g<=10", worst_cheb, 1e-10));
            break;
        }
        default:
            throw ValidationError("verify: unknown criterion " + std::to_string(c));
    }
    return out;
}

inline std::vector<Check> run(const Options& opt) {
    auto out = quick_checks();
    if (opt.quick) return out;
    for (int c = 1; c <= 9; ++c) {
        auto part = criterion_checks(c, opt);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

inline bool all_pass(const std::vector<Check>& checks) {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

/// Fixed-width table: criterion, check, measured, tolerance, PASS/FAIL.
inline std::string format_report(const std::vector<Check>& checks) {
    std::string s = "criterion  measured      tolerance     result  check\n";
    char buf[512];
    for (const auto& c : checks) {
        std::snprintf(buf, sizeof buf, "%-9s  %-12.6e  %-12.6e  %-6s  %s\n",
                      c.criterion == 0 ? "quick" : std::to_string(c.criterion).c_str(), c.measured,
                      c.tolerance, c.pass ? "PASS" : "FAIL", c.name.c_str());
        s += buf;
    }
    return s;
}

}  // namespace mdensity::verify
