#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "mdensity/forms.hpp"
#include "mdensity/verify.hpp"

using namespace mdensity;

namespace {

HeckeFormRecord constant_record(double lam, const PrimeSet& P, std::int64_t q = 101) {
    HeckeFormRecord r;
    r.label = "c";
    r.q = q;
    for (auto p : P) r.lambda[p] = lam;
    return r;
}

}  // namespace

TEST(LambdaPrimePower, Examples) {
    EXPECT_NEAR(lambda_prime_power(1.5, 2, false), 1.25, 1e-15);
    EXPECT_EQ(lambda_prime_power(0.7, 0, false), 1.0);
    EXPECT_EQ(lambda_prime_power(0.7, 0, true), 1.0);
    EXPECT_NEAR(lambda_prime_power(2.0, 3, false), 4.0, 1e-15);
    EXPECT_NEAR(lambda_prime_power(-0.5, 3, true), -0.125, 1e-16);
    EXPECT_NEAR(lambda_prime_power(3.0, 2, true), 9.0, 1e-15);  // ramified: no bound
    EXPECT_THROW(lambda_prime_power(2.1, 2, false), ValidationError);
    EXPECT_THROW(lambda_prime_power(1.0, -1, false), ValidationError);
}

TEST(LambdaPrimePower, ChebyshevAngleIdentity) {
    for (double th = 0.1; th < 3.0; th += 0.01)
        for (int g = 0; g <= 10; ++g)
            EXPECT_NEAR(lambda_prime_power(2 * std::cos(th), g, false),
                        std::sin((g + 1) * th) / std::sin(th), 1e-10);
}

TEST(LambdaPrimePower, SumOfSatakeProducts) {
    // lambda(p^g) = sum_h alpha^{g-h} beta^h
    for (double th : {0.2, 1.1, 2.9})
        for (int g = 0; g <= 8; ++g) {
            const std::complex<double> al = std::polar(1.0, th), be = std::conj(al);
            std::complex<double> s = 0;
            for (int h = 0; h <= g; ++h) s += std::pow(al, g - h) * std::pow(be, h);
            EXPECT_NEAR(lambda_prime_power(2 * std::cos(th), g, false), s.real(), 1e-12);
        }
}

TEST(Telescoping, AlphaMuPlusBetaMu) {
    for (int i = 0; i < 50; ++i) {
        const double lam = -2.0 + 4.0 * counter_uniform(5, 6, static_cast<std::uint64_t>(i));
        const std::complex<double> al = std::polar(1.0, satake_angle(lam)), be = std::conj(al);
        for (int mu = 2; mu <= 9; ++mu)
            EXPECT_NEAR((std::pow(al, mu) + std::pow(be, mu)).real(),
                        lambda_prime_power(lam, mu, false) - lambda_prime_power(lam, mu - 2, false),
                        1e-10);
    }
}

TEST(FirstLogCoefficient, EqualsLambdaPrimePower) {
    // log det(1 - Sym^g(A) X)^{-1} = sum_l c(l) X^l / l with c(1) = tr Sym^g(A)
    for (int i = 0; i < 20; ++i) {
        const double lam = -2.0 + 4.0 * counter_uniform(77, 0, static_cast<std::uint64_t>(i));
        const std::complex<double> al = std::polar(1.0, satake_angle(lam)), be = std::conj(al);
        for (int g = 1; g <= 6; ++g) {
            // expand -sum_h log(1 - al^{g-h} be^h X) numerically: derivative at X = 0
            const double h = 1e-6;
            std::complex<double> fp = 0, fm = 0;
            for (int k = 0; k <= g; ++k) {
                const auto r = std::pow(al, g - k) * std::pow(be, k);
                fp -= std::log(1.0 - r * h);
                fm -= std::log(1.0 + r * h);
            }
            const double c1 = ((fp - fm) / (2 * h)).real();
            EXPECT_NEAR(c1, lambda_prime_power(lam, g, false), 1e-8);
        }
    }
}

TEST(SymPowerPair, Validation) {
    EXPECT_NO_THROW(SymPowerPair(3, 1));
    EXPECT_NO_THROW(SymPowerPair(7, 5));
    EXPECT_THROW(SymPowerPair(3, 2), ValidationError);
    EXPECT_THROW(SymPowerPair(2, 0), ValidationError);
}

TEST(HeckeFormRecord, Validation) {
    HeckeFormRecord r;
    r.label = "f";
    r.q = 101;
    r.lambda = {{2, 1.0}, {101, 10.0}};  // ramified entry exempt from the bound
    EXPECT_TRUE(r.validate().empty());
    r.k = 12;
    EXPECT_EQ(r.validate().size(), 1u);
    r.k = 3;
    EXPECT_THROW((void)r.validate(), ValidationError);
    r.k = 2;
    r.lambda[3] = 2.5;
    EXPECT_THROW((void)r.validate(), ValidationError);
    r.lambda.erase(3);
    r.q = 100;
    EXPECT_THROW((void)r.validate(), ValidationError);
    r.q = 101;
    r.weight = 0;
    EXPECT_THROW((void)r.validate(), ValidationError);
}

TEST(LogPartialSymDiff, Examples) {
    const auto P = exclude(primes_up_to(50), 101);
    const auto f2 = constant_record(2.0, P);
    long double expect = 0;
    for (auto p : P) expect += -2.0L * std::log1p(-std::pow(static_cast<long double>(p), -1.0L));
    EXPECT_NEAR(log_partial_sym_diff(f2, SymPowerPair(3, 1), 1.0, P), static_cast<double>(expect),
                1e-13);
    const auto f0 = constant_record(0.0, P);
    EXPECT_NEAR(log_partial_sym_diff(f0, SymPowerPair(4, 2), 1.0, P), static_cast<double>(expect),
                1e-12);
}

TEST(LogPartialSymDiff, MatchesFullEulerFactors) {
    const auto P = exclude(primes_up_to(50), 101);
    for (int i = 0; i < 20; ++i) {
        const auto f = verify::synthetic_record("s" + std::to_string(i), 101, P, 9,
                                                static_cast<std::uint64_t>(i));
        for (int mu : {3, 4, 5, 6})
            for (double s : {0.6, 1.0}) {
                const double direct = log_partial_sym_diff(f, SymPowerPair(mu, mu - 2), s, P);
                // product of degree-(gamma+1) factors prod_h (1 - alpha^{g-h} beta^h p^-s)^-1
                long double full = 0;
                for (auto p : P) {
                    const std::complex<long double> al =
                        std::polar(1.0L, static_cast<long double>(satake_angle(f.lambda.at(p))));
                    const long double z = std::pow(static_cast<long double>(p), -s);
                    for (int h = 0; h <= mu; ++h)
                        full -= std::log(1.0L - std::pow(al, mu - 2 * h) * z).real();
                    for (int h = 0; h <= mu - 2; ++h)
                        full += std::log(1.0L - std::pow(al, mu - 2 - 2 * h) * z).real();
                }
                EXPECT_NEAR(direct, static_cast<double>(full), 1e-10);
                const double series = log_partial_sym_power(f, mu, s, P) -
                                      log_partial_sym_power(f, mu - 2, s, P);
                EXPECT_NEAR(direct, series, 1e-10);
            }
    }
}

TEST(LogPartialSymDiff, Rejections) {
    const auto P = primes_up_to(20);
    auto f = constant_record(1.0, P, 101);
    EXPECT_THROW(log_partial_sym_diff(f, SymPowerPair(3, 1), 1.0, PrimeSet({2, 101})),
                 ValidationError);  // 101 lacks an eigenvalue and is the level
    f.q = 7;
    EXPECT_THROW(log_partial_sym_diff(f, SymPowerPair(3, 1), 1.0, P), ValidationError);
    f.q = 101;
    f.lambda.erase(5);
    f.lambda.erase(11);
    try {
        (void)log_partial_sym_diff(f, SymPowerPair(3, 1), 1.0, P);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("5,11"), std::string::npos) << e.what();
    }
}

TEST(SmoothedTail, Examples) {
    const auto P = primes_up_to(1000);
    const auto f2 = constant_record(2.0, P, 101);
    EXPECT_NEAR(smoothed_tail(f2, 3, 0.75, 1e-3, 5, 1000).value, 0.0, 1e-300);
    // theta = 0: each term (gamma + 1) p^-sigma e^{-p/x}
    long double expect = 0;
    for (auto p : P)
        if (p > 5 && p != 101)
            expect += 4.0L * std::pow(static_cast<long double>(p), -0.75L) *
                      std::exp(-static_cast<long double>(p) / 100.0L);
    EXPECT_NEAR(smoothed_tail(f2, 3, 0.75, 100, 5, 1000).value, static_cast<double>(expect), 1e-12);
}

TEST(SmoothedTail, SyntheticRecordMatchesLongDoubleSum) {
    const auto P = exclude(primes_up_to(1000), 101);
    const auto f = verify::synthetic_record("t", 101, P, 3, 3);
    long double expect = 0;
    for (auto p : P) {
        if (p <= 5) continue;
        const long double th = std::acos(static_cast<long double>(f.lambda.at(p)) / 2.0L);
        const long double lpg = std::sin(4.0L * th) / std::sin(th);  // angle form, independent
        expect += lpg * std::pow(static_cast<long double>(p), -0.75L) *
                  std::exp(-static_cast<long double>(p) / 100.0L);
    }
    const auto r = smoothed_tail(f, 3, 0.75, 100, 5, 1000);
    EXPECT_NEAR(r.value, static_cast<double>(expect), 1e-12);
    EXPECT_NEAR(r.omitted_bound, 4.0 * std::pow(1000.0, -0.75) * 100.0 * std::exp(-10.0), 1e-18);
    auto g = f;
    g.lambda.erase(997);
    EXPECT_THROW(smoothed_tail(g, 3, 0.75, 100, 5, 1000), ValidationError);
}

TEST(SmoothingScale, Presets) {
    EXPECT_NEAR(smoothing_scale(101, 2, 4, 3, SmoothingPreset::statement),
                std::pow(101.0, 2.0 / 9.0), 1e-12);
    EXPECT_NEAR(smoothing_scale(101, 2, 4, 3, SmoothingPreset::proof),
                std::pow(101.0, 2.0 / 36.0), 1e-12);
}

TEST(FamilyAverage, Examples) {
    const auto P = exclude(primes_up_to(20), 101);
    auto f = verify::synthetic_record("a", 101, P, 1, 1);
    f.weight = 3.5;
    const auto one = family_average({f}, SymPowerPair(3, 1), 1.0, P, IndicatorFn{});
    EXPECT_NEAR(one.raw.real(), 3.5, 1e-15);
    EXPECT_NEAR(one.normalized.real(), 1.0, 1e-15);

    auto g = verify::synthetic_record("b", 101, P, 1, 2);
    const double v1 = log_partial_sym_diff(f, SymPowerPair(3, 1), 1.0, P);
    const double v2 = log_partial_sym_diff(g, SymPowerPair(3, 1), 1.0, P);
    f.weight = g.weight = 2.0;
    const auto two = family_average({g, f}, SymPowerPair(3, 1), 1.0, P, CharacterFn{1.7});
    const cplx expect = (std::polar(1.0, 1.7 * v1) + std::polar(1.0, 1.7 * v2)) / 2.0;
    EXPECT_NEAR(std::abs(two.normalized - expect), 0.0, 1e-15);

    g.m = 2;
    EXPECT_THROW(family_average({f, g}, SymPowerPair(3, 1), 1.0, P, IndicatorFn{}),
                 ValidationError);
    EXPECT_THROW(family_average({}, SymPowerPair(3, 1), 1.0, P, IndicatorFn{}), ValidationError);
}

TEST(FamilyAverage, CharacterAverageHasModulusAtMostOne) {
    const auto P = exclude(primes_up_to(20), 101);
    std::vector<HeckeFormRecord> fam;
    for (int i = 0; i < 30; ++i) {
        auto r = verify::synthetic_record("r" + std::to_string(i), 101, P, 4,
                                          static_cast<std::uint64_t>(i));
        r.weight = 0.1 + counter_uniform(4, 999, static_cast<std::uint64_t>(i));
        fam.push_back(r);
    }
    for (double x : {0.1, 1.0, 3.0, 10.0})
        EXPECT_LE(std::abs(family_average(fam, SymPowerPair(3, 1), 1.0, P, CharacterFn{x}).normalized),
                  1.0 + 1e-15);
}

namespace {

/// Records with theta_f(p) = range * U_p, U_p uniform on [0, 1).
std::vector<HeckeFormRecord> angle_family(int n, double range, const PrimeSet& P) {
    std::vector<HeckeFormRecord> fam;
    for (int i = 0; i < n; ++i) {
        HeckeFormRecord r;
        r.label = "u" + std::to_string(i);
        r.q = 101;
        for (auto p : P)
            r.lambda[p] = 2.0 * std::cos(range * counter_uniform(17, static_cast<std::uint64_t>(i),
                                                                 static_cast<std::uint64_t>(p)));
        fam.push_back(std::move(r));
    }
    return fam;
}

}  // namespace

TEST(FamilyAverage, UniformAnglesReproduceModel) {
    // The log-difference depends on cos(mu theta) only, and for theta uniform
    // on [0, pi) cos(mu theta) has the same law as for a uniform point of the
    // circle. Uniform angles therefore sample the model exactly.
    const auto P = primes_up_to(20);
    const auto d = compute_density(1.0, P).density;
    const IndicatorFn upper{d.support.midpoint(), d.support.hi};
    const double model = integrate_against(d, upper).real();
    for (int n : {1000, 4000, 16000}) {
        const auto fam = angle_family(n, std::numbers::pi, P);
        const double avg = family_average(fam, SymPowerPair(3, 1), 1.0, P, upper).normalized.real();
        // Bernoulli standard deviation <= 1/2, four-sigma band
        EXPECT_LT(std::abs(avg - model), 2.0 / std::sqrt(static_cast<double>(n))) << n;
    }
}

TEST(FamilyAverage, HalfRangeAnglesAreNegativeControl) {
    // theta uniform on [0, pi/2) is a wrong vertical measure: the family
    // average settles away from the model value.
    const auto P = primes_up_to(20);
    const auto d = compute_density(1.0, P).density;
    const IndicatorFn upper{d.support.midpoint(), d.support.hi};
    const double model = integrate_against(d, upper).real();
    for (int n : {1000, 4000, 16000}) {
        const auto fam = angle_family(n, std::numbers::pi / 2, P);
        const double avg = family_average(fam, SymPowerPair(3, 1), 1.0, P, upper).normalized.real();
        EXPECT_GT(std::abs(avg - model), 0.01) << n;
    }
}

TEST(CorollaryAggregate, Examples) {
    const std::int64_t y = 20;
    auto rec = verify::synthetic_record("f", 3, exclude(primes_up_to(y), 3), 1, 1);
    const std::vector<Family> fams{{3, 1, {rec}}};
    const auto psi = CharacterFn{0.8};
    const auto a = corollary_aggregate(fams, SymPowerPair(3, 1), 1.0, psi, AggregateMode::primesum,
                                       3.0, y);
    const auto fam_avg =
        family_average({rec}, SymPowerPair(3, 1), 1.0, exclude(primes_up_to(y), 3), psi).normalized;
    EXPECT_EQ(a.denominator, 2);
    EXPECT_NEAR(std::abs(a.value - fam_avg / 2.0), 0.0, 1e-15);
    ASSERT_EQ(a.included.size(), 1u);
    ASSERT_EQ(a.missing.size(), 1u);  // q = 2 has no data
    EXPECT_EQ(a.missing[0].first, 2);

    const auto none = corollary_aggregate(fams, SymPowerPair(3, 1), 1.0, psi,
                                          AggregateMode::primesum, 2.0, y);
    EXPECT_EQ(none.value, cplx(0.0));
    EXPECT_TRUE(none.included.empty());

    const auto pp = corollary_aggregate(fams, SymPowerPair(3, 1), 1.0, psi,
                                        AggregateMode::primepowersum, 10.0, y);
    EXPECT_EQ(pp.denominator, 7);
    EXPECT_EQ(pp.included.size(), 1u);
    EXPECT_EQ(pp.missing.size(), 6u);
}

TEST(GroupFamilies, ByLevel) {
    const auto P = exclude(primes_up_to(10), 11);
    std::vector<HeckeFormRecord> rs{verify::synthetic_record("a", 11, P, 1, 1),
                                    verify::synthetic_record("b", 11, P, 1, 2, 2, 2),
                                    verify::synthetic_record("c", 11, P, 1, 3)};
    const auto fams = group_families(rs);
    ASSERT_EQ(fams.size(), 2u);
    EXPECT_EQ(fams[0].m, 1);
    EXPECT_EQ(fams[0].records.size(), 2u);
    EXPECT_EQ(fams[1].m, 2);
}
