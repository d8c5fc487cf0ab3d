#include "qjoint/numerics.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace qjoint;

TEST(Binomial, SmallValues) {
  EXPECT_EQ(binomial<Rational>(0, 0), Rational(1));
  EXPECT_EQ(binomial<Rational>(7, 2), Rational(21));
  EXPECT_EQ(binomial<Rational>(3, 5), Rational(0));
  EXPECT_EQ(binomial<Tracked>(7, 2).value, 21.0);
  EXPECT_EQ(binomial<Tracked>(7, 2).err, 0.0);
}

TEST(Binomial, Symmetric) {
  for (unsigned k = 0; k <= 60; ++k)
    for (unsigned n = 0; n <= k; ++n) EXPECT_EQ(binomial_integer(k, n), binomial_integer(k, k - n));
}

TEST(Binomial, LargeValuesAreRoundedNotExact) {
  const Tracked big = binomial<Tracked>(200, 100);
  EXPECT_GT(big.err, 0.0);
  EXPECT_LE(big.err, kUnitRoundoff * big.value);
}

TEST(Factorial, MatchesProduct) {
  Integer f(1);
  for (unsigned n = 1; n <= 40; ++n) {
    f *= n;
    EXPECT_EQ(factorial(n), f);
  }
  EXPECT_EQ(multinomial_integer(2, 2, 3), Integer(210));
}

TEST(PoissonWeight, Values) {
  EXPECT_EQ(poisson_weight(Tracked(0.0), 0).value, 1.0);
  // mpmath, 50 digits
  const Tracked a = poisson_weight(Tracked(1.0), 1);
  EXPECT_NEAR(a.value, 0.3678794411714423216, 1e-16);
  EXPECT_LE(std::abs(a.value - 0.3678794411714423216), a.err + 1e-17);
  const Tracked b = poisson_weight(Tracked(2.0), 0);
  EXPECT_NEAR(b.value, 0.13533528323661269189, 1e-16);
}

TEST(PoissonWeight, TailBound) {
  const double m = 3.0;
  double sum = 0.0;
  double term = std::exp(-m);
  for (unsigned k = 0; k <= 25; ++k) {
    sum += poisson_weight(Tracked(m), k).value;
    if (k > 0) term *= m / k;
  }
  const double bound = term * m / 26.0 * std::exp(m);  // e^-m m^26/26! e^m
  EXPECT_LE(1.0 - sum, bound + 1e-15);
}

TEST(AlternatingSum, AllZero) {
  auto r = alternating_sum<Rational>([](std::size_t) { return std::optional<Rational>(0); }, 1e-12, 50);
  EXPECT_EQ(r.sum, Rational(0));
  EXPECT_TRUE(r.converged);
}

TEST(AlternatingSum, SingleTerm) {
  auto term = [](std::size_t k) -> std::optional<Rational> {
    if (k > 3) return std::nullopt;
    return Rational(k == 3 ? -1 : 0);
  };
  auto r = alternating_sum<Rational>(term, 1e-12, 50);
  EXPECT_EQ(r.sum, Rational(-1));
  EXPECT_TRUE(r.converged);
}

TEST(AlternatingSum, Geometric) {
  auto term = [](std::size_t k) -> std::optional<Tracked> {
    return Tracked((k % 2 ? -1.0 : 1.0) * std::ldexp(1.0, -static_cast<int>(k)));
  };
  SeriesOptions opts;
  opts.tail_certifier = [](std::size_t k) { return std::ldexp(1.0, -static_cast<int>(k)); };
  auto r = alternating_sum<Tracked>(term, 1e-12, 200, opts);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(r.truncation_bound, 1e-12);
  EXPECT_NEAR(r.sum.value, 2.0 / 3.0, 1e-12);
}

TEST(AlternatingSum, MaxTermsReportsNonConvergence) {
  auto term = [](std::size_t k) -> std::optional<Tracked> { return Tracked(k % 2 ? -1.0 : 1.0); };
  auto r = alternating_sum<Tracked>(term, 1e-12, 10);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.terms_used, 10u);
}

TEST(Tracked, ErrorNeverShrinks) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Tracked acc = Tracked::rounded(0.1);
  for (int i = 0; i < 1000; ++i) {
    const double before = acc.err;
    const Tracked x = Tracked::rounded(u(gen));
    switch (i % 3) {
      case 0: acc = acc + x; break;
      case 1: acc = acc - x; break;
      default: acc = acc * Tracked(0.5) + x; break;
    }
    EXPECT_GE(acc.err, 0.0);
    if (i % 3 != 2) {
      EXPECT_GE(acc.err, before);
    }
  }
}

TEST(Tracked, RationalResultInsideBound) {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> num(-50, 50), den(1, 40);
  for (int trial = 0; trial < 200; ++trial) {
    Rational exact(0);
    Tracked approx(0.0);
    for (int i = 0; i < 20; ++i) {
      const Rational q(num(gen), den(gen));
      const Rational w(den(gen), den(gen));
      exact = exact * w + q;
      approx = approx * from_rational<Tracked>(w) + from_rational<Tracked>(q);
    }
    const double diff = std::abs(exact.convert_to<double>() - approx.value);
    EXPECT_LE(diff, approx.err * (1 + 1e-12) + kUnitRoundoff * std::abs(approx.value));
  }
}

TEST(ParseRational, Forms) {
  EXPECT_EQ(parse_rational("3"), Rational(3));
  EXPECT_EQ(parse_rational("-0.125"), Rational(-1, 8));
  EXPECT_EQ(parse_rational("1/3"), Rational(1, 3));
  EXPECT_EQ(parse_rational("2.5e-3"), Rational(1, 400));
  EXPECT_EQ(format_rational(Rational(3, 10)), "0.3");
  EXPECT_EQ(format_rational(Rational(1, 3)), "1/3");
}

TEST(BinomialGeometricSum, MatchesDirectSum) {
  const Rational y(1, 3);
  for (unsigned m = 0; m < 4; ++m) {
    for (unsigned a = 0; a < 3; ++a) {
      double direct = 0.0;
      for (unsigned j = 0; j < 400; ++j)
        direct += binomial<Tracked>(j, m).value * binomial<Tracked>(j, a).value * std::pow(1.0 / 3.0, j);
      EXPECT_NEAR(binomial_geometric_sum(m, a, y).convert_to<double>(), direct, 1e-12 * std::max(1.0, direct));
    }
  }
}

TEST(BinomialWeightedTail, BoundsDirectSum) {
  for (unsigned n : {0u, 3u, 12u}) {
    double direct = 0.0;
    for (unsigned j = 21; j < 3000; ++j)
      direct += binomial<Tracked>(j, n).value * std::pow(0.4, j - 20);
    const double bound = binomial_weighted_tail(20, n, 1.0, 0.4);
    EXPECT_GE(bound, direct * (1 - 1e-12));
    EXPECT_LE(bound, direct * 1.01);
  }
  EXPECT_TRUE(std::isinf(binomial_weighted_tail(20, 2, 1.0, 1.0)));
}
