#include <gtest/gtest.h>

#include <random>

#include "corpus.hpp"

using namespace exactrng;
using exactrng::testing::R;

namespace {

UnitInterval I(Ratio lo, Ratio hi) { return UnitInterval(std::move(lo), std::move(hi)); }

mpz_class random_bits(std::mt19937_64& g, unsigned bits) {
  mpz_class z = 0;
  for (unsigned i = 0; i < bits; i += 64) {
    z <<= 64;
    z += mpz_class(std::to_string(g()));
  }
  mpz_class mask = 1;
  mask <<= bits;
  return z % mask;
}

}  // namespace

TEST(Ratio, ParsesAndPrintsCanonically) {
  EXPECT_EQ(Ratio::parse("2/4").str(), "1/2");
  EXPECT_EQ(Ratio::parse("6/3").str(), "2");
  EXPECT_EQ(Ratio::parse(" 3 / 9 ").str(), "1/3");
  EXPECT_EQ(Ratio::parse("0").str(), "0");
  EXPECT_EQ(Ratio::parse("123456789012345678901234567890/3").str(), "41152263004115226300411522630");
}

TEST(Ratio, RejectsMalformedLiterals) {
  EXPECT_THROW(Ratio::parse(""), std::invalid_argument);
  EXPECT_THROW(Ratio::parse("1/0"), std::invalid_argument);
  EXPECT_THROW(Ratio::parse("a/2"), std::invalid_argument);
  EXPECT_THROW(Ratio::parse("1/-2"), std::invalid_argument);
  EXPECT_THROW(Ratio::parse("0.5"), std::invalid_argument);
}

TEST(Ratio, ArithmeticIsExact) {
  EXPECT_EQ(R(1, 3) + R(1, 6), R(1, 2));
  EXPECT_EQ(R(2, 3) * R(3, 4), R(1, 2));
  EXPECT_EQ(R(1) - R(1, 3), R(2, 3));
  EXPECT_EQ(pow(R(3, 4), 3), R(27, 64));
  EXPECT_EQ(dyadic(10), R(1, 1024));
  EXPECT_LT(R(1, 3), R(1, 2));
}

TEST(Ratio, OrderMatchesCrossMultiplicationAt256Bits) {
  std::mt19937_64 g(20261017);
  for (int i = 0; i < 2000; ++i) {
    const mpz_class a = random_bits(g, 256), b = random_bits(g, 256) + 1;
    const mpz_class c = random_bits(g, 256), d = random_bits(g, 256) + 1;
    const Ratio x(a, b), y(c, d);
    const int cross = cmp(mpz_class(a * d), mpz_class(c * b));
    EXPECT_EQ(x < y, cross < 0);
    EXPECT_EQ(x == y, cross == 0);
    EXPECT_EQ(x > y, cross > 0);
  }
}

TEST(UnitInterval, ValidatesEndpoints) {
  EXPECT_THROW(I(R(1, 2), R(1, 3)), std::invalid_argument);
  EXPECT_THROW(I(R(-1, 2), R(1, 3)), std::invalid_argument);
  EXPECT_THROW(I(R(0), R(3, 2)), std::invalid_argument);
  EXPECT_TRUE(I(R(1, 3), R(1, 3)).empty());
  EXPECT_EQ(I(R(1, 4), R(3, 4)).length(), R(1, 2));
}

TEST(UnitInterval, ContainmentExamples) {
  EXPECT_TRUE(interval_contains(I(R(0), R(2, 3)), I(R(0), R(1, 2))));
  EXPECT_FALSE(interval_contains(I(R(0), R(2, 3)), I(R(1, 2), R(3, 4))));
  EXPECT_TRUE(interval_contains(I(R(2, 3), R(1)), I(R(3, 4), R(1))));
}

TEST(UnitInterval, EmptyInnerIsContainedWhenItsPointLiesInTheClosure) {
  EXPECT_TRUE(interval_contains(I(R(0), R(1, 2)), I(R(1, 2), R(1, 2))));
  EXPECT_TRUE(interval_contains(I(R(0), R(1, 2)), I(R(0), R(0))));
  EXPECT_FALSE(interval_contains(I(R(0), R(1, 2)), I(R(3, 4), R(3, 4))));
}

TEST(UnitInterval, IntersectionExamples) {
  EXPECT_FALSE(interval_intersects(I(R(0), R(1, 2)), I(R(1, 2), R(1))));
  EXPECT_TRUE(interval_intersects(I(R(1, 2), R(3, 4)), I(R(1, 3), R(2, 3))));
  EXPECT_FALSE(interval_intersects(I(R(0), R(0)), I(R(0), R(1))));
}

TEST(UnitInterval, RefinementLengthsSumExactly) {
  const UnitInterval parent = I(R(1, 7), R(5, 9));
  const std::vector<Ratio> pmf{R(1, 3), R(0), R(1, 5), R(7, 15)};
  const auto c = cumulative(pmf);
  Ratio sum;
  for (std::size_t x = 0; x < pmf.size(); ++x) {
    const UnitInterval child = parent.sub(c[x], c[x + 1]);
    EXPECT_EQ(child.length(), parent.length() * pmf[x]);
    sum += child.length();
  }
  EXPECT_EQ(sum, parent.length());
}

TEST(DyadicExp, ComparisonExamples) {
  EXPECT_TRUE(dyadic_leq_ratio(DyadicExp(R(1)), R(1, 2)));
  EXPECT_FALSE(dyadic_leq_ratio(DyadicExp(R(1, 2)), R(1, 2)));
  EXPECT_TRUE(dyadic_leq_ratio(DyadicExp(R(3, 2)), R(1, 2)));
}

TEST(DyadicExp, EdgeCases) {
  EXPECT_TRUE(dyadic_leq_ratio(DyadicExp(R(0)), R(1)));
  EXPECT_FALSE(dyadic_leq_ratio(DyadicExp(R(0)), R(99, 100)));
  EXPECT_TRUE(dyadic_leq_ratio(DyadicExp(R(1000)), R(1, 1000)));
  EXPECT_FALSE(dyadic_leq_ratio(DyadicExp(R(10)), R(1, 1025)));
  EXPECT_TRUE(dyadic_leq_ratio(DyadicExp(R(10)), R(1, 1024)));
  EXPECT_THROW(dyadic_leq_ratio(DyadicExp(R(1)), R(0)), std::invalid_argument);
  EXPECT_THROW(DyadicExp(R(-1)), std::invalid_argument);
}

TEST(DyadicExp, SerializesAndParses) {
  const DyadicExp v(R(3, 2));
  EXPECT_EQ(v.str(), "2^-(3/2)");
  EXPECT_EQ(DyadicExp::parse("2^-(3/2)"), v);
  EXPECT_EQ(DyadicExp::parse("2^-(4)").exponent(), R(4));
  EXPECT_THROW(DyadicExp::parse("2^(3/2)"), std::invalid_argument);
}

TEST(DyadicExp, AgreesWithHighPrecisionFloatsWhenSeparated) {
  std::mt19937_64 g(7);
  std::uniform_int_distribution<long> small(1, 400);
  int checked = 0;
  for (int i = 0; i < 3000; ++i) {
    const Ratio e(small(g), small(g));
    const Ratio q(small(g), small(g) + 400);  // q in (0, 1)
    BigFloat diff = sub(DyadicExp(e).enclose(512).lo, BigFloat::from(q, 512, MPFR_RNDN), MPFR_RNDN);
    const double margin = std::abs(diff.to_double());
    if (margin <= std::ldexp(1.0, -40)) continue;
    ++checked;
    EXPECT_EQ(dyadic_leq_ratio(DyadicExp(e), q), diff.sign() <= 0) << e.str() << " vs " << q.str();
  }
  EXPECT_GT(checked, 2500);
}

TEST(DyadicExp, LargeDenominatorsEscalatePrecision) {
  // 2^(-1/100000) is just below 1.
  EXPECT_FALSE(dyadic_leq_ratio(DyadicExp(R(1, 100000)), R(99999, 100000)));
  EXPECT_TRUE(dyadic_leq_ratio(DyadicExp(R(1, 100000)), R(999999999, 1000000000)));
}

TEST(BigFloat, EnclosuresContainTheValue) {
  const Enclosure e = Enclosure::of(R(1, 3), 64);
  EXPECT_TRUE(e.lo <= e.hi);
  EXPECT_LE(e.lo.to_double(MPFR_RNDD), 1.0 / 3.0);
  EXPECT_GE(e.hi.to_double(MPFR_RNDU), 1.0 / 3.0);
  const Enclosure l = log2_enclosure(R(1, 8), 64);
  EXPECT_DOUBLE_EQ(l.mid(), -3.0);
}
