#pragma once

/**
 * @file primes.hpp
 * @brief Prime sets used to index local factors.
 *
 * A PrimeSet is an ordered list of distinct primes, optionally tagged with
 * one excluded prime q (the level prime of a family of forms).
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mdensity/errors.hpp"

namespace mdensity {

/// Largest sieve bound accepted by primes_up_to.
inline constexpr std::int64_t kMaxSieveBound = 100'000'000;

/// Trial-division primality test.
constexpr bool is_prime(std::int64_t n) noexcept {
    if (n < 2) return false;
    if (n < 4) return true;
    if (n % 2 == 0 || n % 3 == 0) return false;
    for (std::int64_t d = 5; d * d <= n; d += 6) {
        if (n % d == 0 || n % (d + 2) == 0) return false;
    }
    return true;
}

class PrimeSet {
public:
    PrimeSet() = default;

    /// Validates ordering, distinctness and primality of every entry.
    explicit PrimeSet(std::vector<std::int64_t> primes,
                      std::optional<std::int64_t> excluded = std::nullopt)
        : primes_(std::move(primes)), excluded_(excluded) {
        for (std::size_t i = 0; i < primes_.size(); ++i) {
            if (!is_prime(primes_[i]))
                throw ValidationError("PrimeSet: " + std::to_string(primes_[i]) + " is not prime");
            if (i > 0 && primes_[i] <= primes_[i - 1])
                throw ValidationError("PrimeSet: entries must be strictly increasing");
        }
        if (excluded_) {
            if (!is_prime(*excluded_))
                throw ValidationError("PrimeSet: excluded value " + std::to_string(*excluded_) +
                                      " is not prime");
            if (contains(*excluded_))
                throw ValidationError("PrimeSet: excluded prime present in the set");
        }
    }

    [[nodiscard]] std::span<const std::int64_t> primes() const noexcept { return primes_; }
    [[nodiscard]] std::optional<std::int64_t> excluded() const noexcept { return excluded_; }
    [[nodiscard]] std::size_t size() const noexcept { return primes_.size(); }
    [[nodiscard]] bool empty() const noexcept { return primes_.empty(); }
    [[nodiscard]] auto begin() const noexcept { return primes_.begin(); }
    [[nodiscard]] auto end() const noexcept { return primes_.end(); }
    [[nodiscard]] std::int64_t operator[](std::size_t i) const { return primes_.at(i); }

    [[nodiscard]] bool contains(std::int64_t p) const noexcept {
        return std::binary_search(primes_.begin(), primes_.end(), p);
    }

    /// True when every prime here also lies in `other`.
    [[nodiscard]] bool subset_of(const PrimeSet& other) const noexcept {
        return std::includes(other.primes_.begin(), other.primes_.end(), primes_.begin(),
                             primes_.end());
    }

    /// Semicolon separated list, e.g. "2;3;5".
    [[nodiscard]] std::string to_string() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < primes_.size(); ++i) {
            if (i) os << ';';
            os << primes_[i];
        }
        return os.str();
    }

    friend bool operator==(const PrimeSet&, const PrimeSet&) = default;

private:
    struct trusted_tag {};
    PrimeSet(trusted_tag, std::vector<std::int64_t> primes, std::optional<std::int64_t> excluded)
        : primes_(std::move(primes)), excluded_(excluded) {}

    friend PrimeSet primes_up_to(std::int64_t y);
    friend PrimeSet exclude(const PrimeSet& ps, std::int64_t q);
    friend PrimeSet set_union(const PrimeSet& a, const PrimeSet& b);

    std::vector<std::int64_t> primes_;
    std::optional<std::int64_t> excluded_;
};

/// Sieve of Eratosthenes; all primes <= y.
inline PrimeSet primes_up_to(std::int64_t y) {
    if (y < 0) throw ValidationError("primes_up_to: y must be non-negative");
    if (y > kMaxSieveBound)
        throw ValidationError("primes_up_to: bound " + std::to_string(y) +
                              " exceeds the sieve limit 1e8");
    std::vector<std::int64_t> out;
    if (y >= 2) {
        std::vector<bool> composite(static_cast<std::size_t>(y) + 1, false);
        for (std::int64_t i = 2; i <= y; ++i) {
            if (composite[static_cast<std::size_t>(i)]) continue;
            out.push_back(i);
            for (std::int64_t j = i * i; j <= y; j += i) composite[static_cast<std::size_t>(j)] = true;
        }
    }
    return PrimeSet(PrimeSet::trusted_tag{}, std::move(out), std::nullopt);
}

/// Removes q from the set and records it as the excluded prime.
inline PrimeSet exclude(const PrimeSet& ps, std::int64_t q) {
    if (!is_prime(q)) throw ValidationError("exclude: " + std::to_string(q) + " is not prime");
    std::vector<std::int64_t> out;
    out.reserve(ps.size());
    for (auto p : ps) {
        if (p != q) out.push_back(p);
    }
    return PrimeSet(PrimeSet::trusted_tag{}, std::move(out), q);
}

/// Union of two prime sets. The excluded tag survives only when both agree.
inline PrimeSet set_union(const PrimeSet& a, const PrimeSet& b) {
    std::vector<std::int64_t> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    std::optional<std::int64_t> ex = a.excluded() == b.excluded() ? a.excluded() : std::nullopt;
    if (ex && std::binary_search(out.begin(), out.end(), *ex)) ex.reset();
    return PrimeSet(PrimeSet::trusted_tag{}, std::move(out), ex);
}

/// Primes p <= m ln q with q removed. The logarithm is natural.
inline PrimeSet truncation_set(std::int64_t q, int m) {
    if (!is_prime(q)) throw ValidationError("truncation_set: q must be prime");
    if (m < 1) throw ValidationError("truncation_set: m must be >= 1");
    const double bound = static_cast<double>(m) * std::log(static_cast<double>(q));
    return exclude(primes_up_to(static_cast<std::int64_t>(std::floor(bound))), q);
}

/// Smallest prime Q with 2^mu / sqrt(Q) < 1, i.e. Q > 4^mu.
inline std::int64_t q_min(int mu) {
    if (mu < 3) throw ValidationError("q_min: mu must be >= 3");
    if (mu > 30) throw ValidationError("q_min: mu > 30 overflows the desk-scale range");
    std::int64_t q = (std::int64_t{1} << (2 * mu)) + 1;
    while (!is_prime(q)) ++q;
    return q;
}

/// pi(X), by enumeration.
inline std::int64_t prime_count(std::int64_t x) {
    if (x < 2) return 0;
    return static_cast<std::int64_t>(primes_up_to(x).size());
}

/// Number of pairs (q, m), q prime and m >= 1, with q^m <= X.
inline std::int64_t prime_power_count(std::int64_t x) {
    std::int64_t count = 0;
    for (auto q : primes_up_to(std::max<std::int64_t>(x, 0))) {
        for (std::int64_t v = q; v <= x; v *= q) {
            ++count;
            if (v > x / q) break;
        }
    }
    return count;
}

}  // namespace mdensity
