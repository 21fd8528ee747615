#pragma once

/**
 * @file forms.hpp
 * @brief Hecke eigenvalue records, partial symmetric-power log differences,
 *        the smoothed tail sum and finite family averages.
 *
 * For p not dividing the level, lambda_f(p) = 2 cos theta_f(p) with Satake
 * parameters alpha = e^{i theta}, beta = e^{-i theta}. For mu - nu = 2 the
 * Euler factors of Sym^mu / Sym^nu collapse to
 *
 *     log L_p(Sym^mu) - log L_p(Sym^nu) = -Log(1 - alpha^mu p^-s) - Log(1 - beta^mu p^-s).
 */

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "mdensity/coefficients.hpp"
#include "mdensity/errors.hpp"
#include "mdensity/global_density.hpp"
#include "mdensity/primes.hpp"

namespace mdensity {

struct HeckeFormRecord {
    std::string label;
    int k = 2;
    std::int64_t q = 2;
    int m = 1;
    double weight = 1.0;  ///< family weight; stands in for the harmonic weight
    std::map<std::int64_t, double> lambda;

    /// Throws on hard violations, returns warnings for soft ones.
    [[nodiscard]] std::vector<std::string> validate() const {
        if (!is_prime(q)) throw ValidationError("record " + label + ": q is not prime");
        if (m < 1) throw ValidationError("record " + label + ": m must be >= 1");
        if (k <= 0 || k % 2 != 0) throw ValidationError("record " + label + ": k must be even");
        if (!(weight > 0)) throw ValidationError("record " + label + ": weight must be positive");
        for (const auto& [p, lam] : lambda) {
            if (p != q && std::abs(lam) > 2.0 + 1e-12)
                throw ValidationError("record " + label + ": |lambda(" + std::to_string(p) +
                                      ")| > 2 violates the Deligne bound");
        }
        std::vector<std::string> warnings;
        static const std::set<int> allowed{2, 4, 6, 8, 10, 14};
        if (!allowed.contains(k))
            warnings.push_back("record " + label + ": weight k=" + std::to_string(k) +
                               " is outside {2,4,6,8,10,14}");
        return warnings;
    }
};

struct SymPowerPair {
    int mu = 3;
    int nu = 1;

    SymPowerPair() = default;
    SymPowerPair(int mu_, int nu_) : mu(mu_), nu(nu_) {
        if (mu - nu != 2 || nu < 1)
            throw ValidationError("SymPowerPair: requires mu - nu = 2 and nu >= 1");
    }
};

/// lambda_f(p^gamma) from lambda_f(p): lam^gamma at a ramified prime, else the
/// recurrence u_{l+1} = lam u_l - u_{l-1} (u_0 = 1, u_1 = lam).
inline double lambda_prime_power(double lam_p, int gamma, bool ramified) {
    if (gamma < 0) throw ValidationError("lambda_prime_power: gamma must be >= 0");
    if (ramified) return std::pow(lam_p, gamma);
    if (std::abs(lam_p) > 2.0 + 1e-12)
        throw ValidationError("lambda_prime_power: |lambda| > 2 at an unramified prime");
    double prev = 1.0, cur = lam_p;
    if (gamma == 0) return 1.0;
    for (int l = 1; l < gamma; ++l) {
        const double next = lam_p * cur - prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

/// theta_f(p) in [0, pi] with lambda = 2 cos theta.
inline double satake_angle(double lam_p) {
    return std::acos(std::clamp(0.5 * lam_p, -1.0, 1.0));
}

namespace detail {

inline void check_form_primes(const HeckeFormRecord& f, const PrimeSet& primes, const char* who) {
    if (primes.contains(f.q))
        throw ValidationError(std::string(who) + ": prime set contains the level prime q=" +
                              std::to_string(f.q));
    std::vector<std::int64_t> missing;
    for (auto p : primes)
        if (!f.lambda.contains(p)) missing.push_back(p);
    if (!missing.empty()) {
        std::string s;
        for (auto p : missing) s += (s.empty() ? "" : ",") + std::to_string(p);
        throw ValidationError(std::string(who) + ": record " + f.label +
                              " lacks eigenvalues for primes " + s);
    }
}

}  // namespace detail

/// log L_P(Sym^mu, sigma) - log L_P(Sym^nu, sigma) = sum_p -2 log|1 - e^{i mu theta} p^-sigma|.
inline double log_partial_sym_diff(const HeckeFormRecord& f, const SymPowerPair& pair,
                                   double sigma, const PrimeSet& primes) {
    require_sigma(sigma, "log_partial_sym_diff");
    detail::check_form_primes(f, primes, "log_partial_sym_diff");
    long double s = 0;
    for (auto p : primes) {
        const double theta = satake_angle(f.lambda.at(p));
        const double z = prime_weight(p, sigma);
        s -= std::log1p(z * z - 2.0 * z * std::cos(pair.mu * theta));
    }
    return static_cast<double>(s);
}

/// log L_P(Sym^gamma, sigma) from the full degree-(gamma+1) Euler factors,
/// expanded as sum_l lambda(p^gamma)|_{theta -> l theta} p^{-l sigma} / l.
inline double log_partial_sym_power(const HeckeFormRecord& f, int gamma, double sigma,
                                    const PrimeSet& primes) {
    require_sigma(sigma, "log_partial_sym_power");
    detail::check_form_primes(f, primes, "log_partial_sym_power");
    long double s = 0;
    for (auto p : primes) {
        const double theta = satake_angle(f.lambda.at(p));
        const double z = prime_weight(p, sigma);
        double zl = 1.0;
        for (int l = 1; l < 100'000; ++l) {
            zl *= z;
            const double term =
                lambda_prime_power(2.0 * std::cos(l * theta), gamma, false) * zl / l;
            s += term;
            if ((gamma + 1.0) * zl / l < 1e-18) break;
        }
    }
    return static_cast<double>(s);
}

/// Smoothing scales for the tail sum: q^{m/((k-1)gamma)} as stated, and
/// q^{m/(4(k-1)gamma)} as used in the argument bounding it.
enum class SmoothingPreset { statement, proof };

inline double smoothing_scale(std::int64_t q, int m, int k, int gamma, SmoothingPreset preset) {
    if (k < 2 || gamma < 1 || m < 1) throw ValidationError("smoothing_scale: bad parameters");
    const double denom = (k - 1.0) * gamma * (preset == SmoothingPreset::proof ? 4.0 : 1.0);
    return std::pow(static_cast<double>(q), m / denom);
}

struct TailSum {
    double value = 0.0;
    double omitted_bound = 0.0;  ///< bound on the p > p_max part
    std::size_t terms = 0;
};

/// sum over p_min < p <= p_max, p != q of lambda_f(p^gamma) p^-sigma e^{-p/x}.
inline TailSum smoothed_tail(const HeckeFormRecord& f, int gamma, double sigma, double x_smooth,
                             double p_min, double p_max) {
    if (!(sigma > 0)) throw ValidationError("smoothed_tail: sigma must be positive");
    if (!(x_smooth > 0)) throw ValidationError("smoothed_tail: x_smooth must be positive");
    if (gamma < 0) throw ValidationError("smoothed_tail: gamma must be >= 0");
    TailSum out;
    const auto lo = static_cast<std::int64_t>(std::floor(p_min));
    const auto hi = static_cast<std::int64_t>(std::floor(p_max));
    std::vector<std::int64_t> missing;
    long double s = 0;
    for (auto p : primes_up_to(std::max<std::int64_t>(hi, 0))) {
        if (p <= lo || p == f.q) continue;
        const auto it = f.lambda.find(p);
        if (it == f.lambda.end()) {
            missing.push_back(p);
            continue;
        }
        const double lp = static_cast<double>(p);
        s += lambda_prime_power(it->second, gamma, false) * std::pow(lp, -sigma) *
             std::exp(-lp / x_smooth);
        ++out.terms;
    }
    if (!missing.empty())
        throw ValidationError("smoothed_tail: record " + f.label + " lacks " +
                              std::to_string(missing.size()) + " eigenvalues, first p=" +
                              std::to_string(missing.front()));
    out.value = static_cast<double>(s);
    // |lambda(p^gamma)| <= gamma + 1; sum_{n > p_max} n^-sigma e^{-n/x} <= p_max^-sigma x e^{-p_max/x}
    const double pm = std::max(p_max, 1.0);
    out.omitted_bound = (gamma + 1.0) * std::pow(pm, -sigma) * x_smooth * std::exp(-pm / x_smooth);
    return out;
}

/// Psi evaluated at a point.
inline cplx evaluate(const TestFunction& psi, double u) {
    return std::visit([u](const auto& f) { return cplx(f(u)); }, psi);
}

struct FamilyAverage {
    cplx raw;         ///< sum_f w_f Psi(value_f)
    cplx normalized;  ///< same with weights scaled to total 1
    double total_weight = 0.0;
    std::size_t forms = 0;
};

/// Weighted average of Psi(log L_P(Sym^mu) - log L_P(Sym^nu)) over one family,
/// accumulated in label order.
inline FamilyAverage family_average(std::vector<HeckeFormRecord> records, const SymPowerPair& pair,
                                    double sigma, const PrimeSet& primes,
                                    const TestFunction& psi) {
    if (records.empty()) throw ValidationError("family_average: no records");
    for (const auto& r : records) {
        if (r.k != records.front().k || r.q != records.front().q || r.m != records.front().m)
            throw ValidationError("family_average: records do not share (k, q, m)");
        if (!(r.weight > 0)) throw ValidationError("family_average: weights must be positive");
    }
    std::sort(records.begin(), records.end(),
              [](const auto& a, const auto& b) { return a.label < b.label; });
    FamilyAverage out;
    for (const auto& r : records) {
        out.raw += r.weight * evaluate(psi, log_partial_sym_diff(r, pair, sigma, primes));
        out.total_weight += r.weight;
    }
    out.normalized = out.raw / out.total_weight;
    out.forms = records.size();
    return out;
}

struct Family {
    std::int64_t q = 2;
    int m = 1;
    std::vector<HeckeFormRecord> records;
};

/// Groups records by level (q, m), ordered by (q, m).
inline std::vector<Family> group_families(const std::vector<HeckeFormRecord>& records) {
    std::map<std::pair<std::int64_t, int>, Family> by_level;
    for (const auto& r : records) {
        auto& fam = by_level[{r.q, r.m}];
        fam.q = r.q;
        fam.m = r.m;
        fam.records.push_back(r);
    }
    std::vector<Family> out;
    for (auto& [key, fam] : by_level) out.push_back(std::move(fam));
    return out;
}

enum class AggregateMode { primesum, primepowersum };

struct CorollaryAggregate {
    cplx value;
    std::int64_t denominator = 0;  ///< pi(X) or pi*(X)
    std::vector<std::pair<std::int64_t, int>> included;
    std::vector<std::pair<std::int64_t, int>> missing;
};

/// (1/pi(X)) sum_{q <= X} A(q^m) or (1/pi*(X)) sum_{q^m <= X} A(q^m), where
/// A is the normalised family average over P_y minus {q}. Levels without data
/// contribute 0 and are listed in `missing`.
inline CorollaryAggregate corollary_aggregate(const std::vector<Family>& families,
                                              const SymPowerPair& pair, double sigma,
                                              const TestFunction& psi, AggregateMode mode,
                                              double x_cut, std::int64_t y) {
    const auto xi = static_cast<std::int64_t>(std::floor(x_cut));
    CorollaryAggregate out;
    std::set<std::pair<std::int64_t, int>> have;
    std::set<int> levels_m;
    for (const auto& fam : families) levels_m.insert(fam.m);

    auto in_range = [&](std::int64_t q, int m) {
        if (mode == AggregateMode::primesum) return q <= xi;
        long double v = 1;
        for (int i = 0; i < m; ++i) v *= static_cast<long double>(q);
        return v <= static_cast<long double>(xi);
    };
    auto sorted = families;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return std::tie(a.q, a.m) < std::tie(b.q, b.m); });
    const auto base = primes_up_to(y);
    for (const auto& fam : sorted) {
        if (!in_range(fam.q, fam.m)) continue;
        const auto avg = family_average(fam.records, pair, sigma, exclude(base, fam.q), psi);
        out.value += avg.normalized;
        out.included.emplace_back(fam.q, fam.m);
        have.insert({fam.q, fam.m});
    }
    if (mode == AggregateMode::primesum) {
        out.denominator = prime_count(xi);
        for (auto q : primes_up_to(std::max<std::int64_t>(xi, 0)))
            for (int m : levels_m)
                if (!have.contains({q, m})) out.missing.emplace_back(q, m);
    } else {
        out.denominator = prime_power_count(xi);
        for (auto q : primes_up_to(std::max<std::int64_t>(xi, 0))) {
            int m = 1;
            for (long double v = static_cast<long double>(q); v <= static_cast<long double>(xi);
                 v *= static_cast<long double>(q), ++m)
                if (!have.contains({q, m})) out.missing.emplace_back(q, m);
        }
    }
    if (out.denominator > 0) out.value /= static_cast<double>(out.denominator);
    return out;
}

}  // namespace mdensity
