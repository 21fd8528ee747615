#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mdensity/coefficients.hpp"

using namespace mdensity;

namespace {

constexpr std::int64_t kSweepPrimes[] = {2, 3, 5};
constexpr double kSweepSigmas[] = {0.6, 1.0, 1.5};

}  // namespace

TEST(GLocal, Examples) {
    EXPECT_NEAR(g_local(1.0, 2, 1.0).real(), std::numbers::ln2, 1e-15);
    EXPECT_NEAR(g_local(1.0, 2, 1.0).imag(), 0.0, 1e-15);
    EXPECT_NEAR(g_local(1.0, 2, -1.0).real(), -std::log(1.5), 1e-15);
    // mpmath: -log(1 - i 5^-0.6)
    const cplx v = g_local(0.6, 5, cplx(0.0, 1.0));
    EXPECT_NEAR(v.real(), -0.06768307478585942860, 1e-15);
    EXPECT_NEAR(v.imag(), 0.36378543213637881564, 1e-15);
}

TEST(GLocal, TwistRotatesArgument) {
    const double tau = 0.7;
    const cplx t = std::polar(1.0, 0.3);
    const cplx rot = std::polar(1.0, -tau * std::log(3.0));
    EXPECT_NEAR(std::abs(g_local(0.8, 3, t, tau) - g_local(0.8, 3, t * rot)), 0.0, 1e-15);
}

TEST(GLocal, Rejections) {
    EXPECT_THROW(g_local(0.5, 2, 1.0), ValidationError);
    EXPECT_THROW(g_local(0.4, 2, 1.0), ValidationError);
    EXPECT_THROW(g_local(1.0, 2, cplx(1.0 + 1e-9)), ValidationError);
    EXPECT_NO_THROW(g_local(1.0, 2, cplx(1.0 + 1e-13)));
}

TEST(Majorant, Examples) {
    EXPECT_EQ(majorant(0, 5.0), 1.0);
    for (double x : {0.0, 0.5, 2.0, 7.25}) EXPECT_DOUBLE_EQ(majorant(1, x), x);
    EXPECT_NEAR(majorant(3, 1.0), 13.0 / 6.0, 1e-15);
    EXPECT_THROW(majorant(-1, 1.0), ValidationError);
}

TEST(Majorant, MatchesDefiningSum) {
    for (int a = 1; a <= 30; ++a)
        for (double x : {0.1, 1.0, 3.0, 10.0}) {
            long double s = 0, fact = 1, binom = 1;  // binom(a-1, n-1)
            long double xn = 1;
            for (int n = 1; n <= a; ++n) {
                xn *= x;
                fact *= n;
                if (n > 1) binom = binom * (a - n + 1) / (n - 1);
                s += xn / fact * binom;
            }
            EXPECT_NEAR(majorant(a, x), static_cast<double>(s), 1e-13 * static_cast<double>(s));
        }
}

TEST(Majorant, Recurrence) {
    // (a+1) G_{a+1} = (2a + x) G_a - (a-1) G_{a-1}
    for (double x : {0.3, 1.0, 4.0})
        for (int a = 1; a < 40; ++a) {
            const double lhs = (a + 1) * majorant(a + 1, x);
            const double rhs = (2.0 * a + x) * majorant(a, x) - (a - 1.0) * majorant(a - 1, x);
            EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(lhs));
        }
}

TEST(MajorantPartialSum, Examples) {
    EXPECT_EQ(majorant_partial_sum(0, 3.3), 1.0);
    EXPECT_DOUBLE_EQ(majorant_partial_sum(1, 2.0), 3.0);
    EXPECT_DOUBLE_EQ(majorant_partial_sum(2, 1.0), 3.5);
}

TEST(Coefficients, Examples) {
    EXPECT_EQ(coeff_nested(2, 1.0, 1.0, 0), cplx(1.0));
    EXPECT_EQ(coeff_rising(2, 1.0, 1.0, 0), cplx(1.0));
    for (double x : {-2.0, 0.5, 3.0}) {
        const cplx expect(0.0, x * std::pow(3.0, -0.7));
        EXPECT_NEAR(std::abs(coeff_nested(3, 0.7, x, 1) - expect), 0.0, 1e-16);
        EXPECT_NEAR(std::abs(coeff_rising(3, 0.7, x, 1) - expect), 0.0, 1e-16);
    }
    // compositions {2} and {1,1}: (1/4)(ix/2 + (ix)^2/2) at x = 1
    EXPECT_NEAR(std::abs(coeff_nested(2, 1.0, 1.0, 2) - cplx(-0.125, 0.125)), 0.0, 1e-16);
    EXPECT_NEAR(std::abs(coeff_rising(2, 1.0, 1.0, 2) - cplx(-0.125, 0.125)), 0.0, 1e-16);
    EXPECT_THROW(coeff_nested(2, 1.0, 1.0, 26), ValidationError);
    EXPECT_NO_THROW(coeff_nested(2, 1.0, 1.0, 25));
}

TEST(Coefficients, NestedEqualsRisingOnSweep) {
    for (auto p : kSweepPrimes)
        for (double s : kSweepSigmas)
            for (int x = -3; x <= 3; ++x)
                for (int a = 0; a <= 20; ++a) {
                    const cplx r = coeff_rising(p, s, x, a);
                    EXPECT_LE(std::abs(coeff_nested(p, s, x, a) - r), 1e-12 * (1.0 + std::abs(r)))
                        << p << " " << s << " " << x << " " << a;
                }
}

TEST(Coefficients, MajorantDominationOnSweep) {
    for (auto p : kSweepPrimes)
        for (double s : kSweepSigmas)
            for (int x = -3; x <= 3; ++x)
                for (int a = 0; a <= 20; ++a)
                    EXPECT_LE(std::abs(coeff_rising(p, s, x, a)),
                              std::pow(static_cast<double>(p), -a * s) * majorant(a, std::abs(x)) +
                                  1e-14);
}

TEST(Coefficients, GeneratingFunctionReproducesCharacter) {
    for (auto p : kSweepPrimes)
        for (double s : kSweepSigmas)
            for (int x = -3; x <= 3; ++x) {
                const auto t = coeff_table(p, s, x, 1e-12);
                for (int j = 0; j < 32; ++j) {
                    const cplx tt = std::polar(1.0, 2.0 * std::numbers::pi * j / 32.0);
                    cplx series = 0.0, tp = 1.0;
                    for (const auto& c : t.values) {
                        series += c * tp;
                        tp *= tt;
                    }
                    const cplx direct = std::exp(cplx(0.0, x) * g_local(s, p, tt));
                    EXPECT_LE(std::abs(series - direct), t.tail_bound + 1e-14)
                        << p << " " << s << " " << x << " " << j;
                }
            }
}

TEST(Coefficients, MajorantSeriesClosedForm) {
    for (auto p : kSweepPrimes)
        for (double s : kSweepSigmas)
            for (int x = 0; x <= 3; ++x) {
                const double z = std::pow(static_cast<double>(p), -s);
                long double sum = 0, za = 1;
                for (int a = 0; a < 2000; ++a) {
                    sum += za * majorant(a, x);
                    za *= z;
                }
                const double closed = std::exp(x / (std::pow(static_cast<double>(p), s) - 1.0));
                EXPECT_NEAR(static_cast<double>(sum), closed, 1e-10) << p << " " << s << " " << x;
                EXPECT_NEAR(majorant_total(p, s, x), closed, 1e-14 * closed);
            }
}

TEST(CoeffTable, Examples) {
    const auto t0 = coeff_table(2, 1.0, 0.0, 1e-12);
    EXPECT_EQ(t0.a_max, 0);
    EXPECT_EQ(t0.values.size(), 1u);
    EXPECT_EQ(t0.values[0], cplx(1.0));
    EXPECT_EQ(t0.tail_bound, 0.0);

    const auto t1 = coeff_table(3, 1.0, 1.0, 1e-10);
    EXPECT_LE(t1.a_max, 30);
    EXPECT_LT(t1.tail_bound, 1e-10);
    for (int a = 0; a <= t1.a_max && a <= 25; ++a)
        EXPECT_LE(std::abs(t1.values[static_cast<std::size_t>(a)] - coeff_nested(3, 1.0, 1.0, a)),
                  1e-12 * (1.0 + std::abs(t1.values[static_cast<std::size_t>(a)])));

    const auto t2 = coeff_table(2, 0.51, 100.0, 1e-10);
    EXPECT_GT(t2.a_max, t1.a_max);
    EXPECT_LT(t2.a_max, kMaxCoeffOrder);
    EXPECT_LT(t2.tail_bound, 1e-10);
}

TEST(CoeffTable, InvariantsAndTailIsRigorous) {
    for (auto p : kSweepPrimes)
        for (double s : kSweepSigmas)
            for (double x : {-7.0, 0.5, 2.0, 15.0}) {
                const double tol = 1e-11;
                const auto t = coeff_table(p, s, x, tol);
                EXPECT_EQ(t.values[0], cplx(1.0));
                EXPECT_LT(t.tail_bound, tol);
                // direct tail of the majorant series, well past a_max
                const double z = std::pow(static_cast<double>(p), -s);
                long double tail = 0;
                for (int a = t.a_max + 1; a < t.a_max + 3000; ++a)
                    tail += std::pow(static_cast<long double>(z), a) * majorant(a, std::abs(x));
                EXPECT_LE(static_cast<double>(tail), t.tail_bound * (1 + 1e-9) + 1e-300);
                for (int a = 0; a <= t.a_max; ++a)
                    EXPECT_LE(std::abs(t.values[static_cast<std::size_t>(a)]),
                              std::pow(z, a) * majorant(a, std::abs(x)) * (1 + 1e-12) + 1e-300);
            }
}

TEST(CoeffTable, Rejections) {
    EXPECT_THROW(coeff_table(2, 1.0, 1.0, 0.0), ValidationError);
    EXPECT_THROW(coeff_table(2, 0.5, 1.0, 1e-10), ValidationError);
    EXPECT_THROW(coeff_table(2, 0.51, 1e6, 1e-10), ToleranceError);
}

TEST(TwistedSquareSum, PrecisionTierIsRaisedForCancellation) {
    const auto small = twisted_square_sum(13, 1.5, 1.0, 0.0, 1e-12);
    EXPECT_EQ(small.digits, 18);
    const auto big = twisted_square_sum(2, 0.6, 50.0, 0.0, 1e-12);
    EXPECT_GE(big.digits, 50);
    EXPECT_LE(std::abs(big.value), 1.0 + 1e-12);
}
