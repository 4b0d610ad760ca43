#include <gtest/gtest.h>

#include "corpus.hpp"

using namespace exactrng;
using namespace exactrng::testing;

TEST(StoppingProfile, FairToTwoThirdsIsGeometric) {
  const auto p = stopping_profile(fair(), two_thirds(), 1, 20);
  for (std::size_t m = 0; m <= 20; ++m) EXPECT_EQ(p.overflow[m], dyadic(m)) << m;
  // Independent oracle: containment of every coin interval of length 14.
  EXPECT_EQ(overflow_by_containment(fair(), two_thirds(), 1, 14), dyadic(14));
}

TEST(StoppingProfile, IdentityConversion) {
  const auto p = stopping_profile(markov_h14(), markov_h14(), 4, 8);
  for (std::size_t m = 0; m <= 8; ++m) EXPECT_EQ(p.overflow[m], m < 4 ? R(1) : R(0)) << m;
}

TEST(StoppingProfile, FairToFair) {
  const auto p = stopping_profile(fair(), fair(), 1, 5);
  EXPECT_EQ(p.overflow[0], R(1));
  for (std::size_t m = 1; m <= 5; ++m) EXPECT_EQ(p.overflow[m], R(0));
}

TEST(StoppingProfile, Errors) {
  try {
    stopping_profile(ProcessSpec::named(NamedFamily::harmonic), fair(), 1, 3);
    FAIL();
  } catch (const IrrationalModelError& e) {
    EXPECT_STREQ(e.what(), "exact analysis requires rational conditionals");
  }
  try {
    stopping_profile(fair(), fair(), 30, 3, 1 << 10);
    FAIL();
  } catch (const BudgetError& e) {
    EXPECT_STREQ(e.what(), "target length exceeds exact-analysis budget");
  }
}

TEST(StoppingProfile, NonIncreasingAndUnderTailCertificate) {
  for (const auto& pair : corpus()) {
    const auto p = stopping_profile(pair.coin, pair.target, pair.n, 30);
    EXPECT_LE(p.overflow[0], R(1));
    for (std::size_t m = 1; m <= 30; ++m) EXPECT_LE(p.overflow[m], p.overflow[m - 1]) << pair.name;
    for (std::size_t m = 0; m <= 30; ++m) EXPECT_LE(p.overflow[m], p.tail_bound_at(m)) << pair.name;
    EXPECT_LE(mpz_class(std::to_string(p.largest_frontier)), partition_size(pair.target.alphabet_size(), pair.n) - 1);
  }
}

TEST(StoppingProfile, AgreesWithBruteForceEnumeration) {
  for (const auto& pair : corpus()) {
    for (std::size_t n = 0; n <= 3; ++n) {
      const std::size_t m_max = pair.target.alphabet_size() == 3 && n == 3 ? 10 : 12;
      const auto p = stopping_profile(pair.coin, pair.target, n, m_max);
      const auto bf = brute_force(pair.coin, pair.target, n, m_max);
      for (std::size_t m = 0; m <= m_max; ++m) {
        ASSERT_EQ(p.overflow[m], bf.overflow[m]) << pair.name << " n=" << n << " m=" << m;
        const auto pl = output_law_at(pair.coin, pair.target, n, m);
        for (const auto& [y, v] : pl.law) {
          auto it = bf.law[m].find(y);
          ASSERT_EQ(v, it == bf.law[m].end() ? R(0) : it->second) << pair.name;
        }
      }
    }
  }
}

TEST(StoppingProfile, OverflowDeficitAndTreeMassCoincide) {
  for (const auto& pair : corpus()) {
    const std::size_t n = std::min<std::size_t>(pair.n, 3);
    const auto p = stopping_profile(pair.coin, pair.target, n, 12);
    const AlgorithmTree t = build_tree(pair.coin, pair.target, n, 12);
    for (std::size_t m = 0; m <= 12; ++m) {
      EXPECT_EQ(p.overflow[m], output_law_at(pair.coin, pair.target, n, m).deficit);
      EXPECT_EQ(p.overflow[m], t.unresolved_at(m)) << pair.name << " m=" << m;
    }
  }
}

TEST(ExpectedStoppingTime, FairToTwoThirds) {
  const auto p = stopping_profile(fair(), two_thirds(), 1, 40);
  const auto [lo, hi] = expected_stopping_time(p);
  EXPECT_EQ(lo, R(2) - dyadic(40));
  EXPECT_LE(lo, R(2));
  EXPECT_GE(hi, R(2));
  EXPECT_LE(hi - lo, dyadic(38));
}

TEST(ExpectedStoppingTime, IdentityAndFair) {
  const auto [lo, hi] = expected_stopping_time(stopping_profile(markov_h14(), markov_h14(), 4, 10));
  EXPECT_EQ(lo, R(4));
  EXPECT_GE(hi, R(4));
  const auto [a, b] = expected_stopping_time(stopping_profile(fair(), fair(), 1, 10));
  EXPECT_EQ(a, R(1));
  EXPECT_LE(b - a, R(1, 1000));
}

TEST(ExpectedStoppingTime, NeedsATailCertificate) {
  const auto coin = ProcessSpec::mixture({R(1, 2), R(1, 2)}, {ProcessSpec::iid({R(1), R(0)}), ProcessSpec::iid({R(0), R(1)})});
  const auto p = stopping_profile(coin, fair(), 1, 3);
  try {
    expected_stopping_time(p);
    FAIL();
  } catch (const std::domain_error& e) {
    EXPECT_STREQ(e.what(), "no geometric tail certificate");
  }
}

TEST(OutputLaw, Examples) {
  const auto pl = output_law_at(fair(), two_thirds(), 1, 2);
  EXPECT_EQ(pl.law.at({0}), R(1, 2));
  EXPECT_EQ(pl.law.at({1}), R(1, 4));
  EXPECT_EQ(pl.deficit, R(1, 4));
  const auto z = output_law_at(fair(), two_thirds(), 1, 0);
  for (const auto& [y, v] : z.law) EXPECT_EQ(v, R(0));
  EXPECT_EQ(z.deficit, R(1));
  const auto id = output_law_at(markov_h14(), markov_h14(), 3, 3);
  EXPECT_EQ(id.law, target_law(markov_h14(), 3));
  EXPECT_EQ(id.deficit, R(0));
}

TEST(OutputLaw, DominatedMonotoneWithExactDeficit) {
  for (const auto& pair : corpus()) {
    FrontierAnalyzer fa(pair.coin, pair.target, pair.n);
    const OutputLaw truth = target_law(pair.target, pair.n);
    OutputLaw prev;
    for (std::size_t m = 0; m <= 30; ++m) {
      if (m) fa.advance();
      const PartialLaw pl = partial_law(fa);
      Ratio total;
      for (const auto& [y, v] : pl.law) {
        EXPECT_LE(v, truth.at(y));
        EXPECT_GE(v, prev[y]);
        total += v;
      }
      EXPECT_EQ(R(1) - total, pl.deficit);
      prev = pl.law;
    }
  }
}

TEST(Validity, FairToTwoThirdsPasses) {
  const auto r = validity_check(fair(), two_thirds(), 1, 40, dyadic(39));
  EXPECT_TRUE(r.passed);
  ASSERT_TRUE(r.deficit);
  EXPECT_EQ(*r.deficit, dyadic(40));
  EXPECT_FALSE(validity_check(fair(), two_thirds(), 1, 40, dyadic(41)).passed);
}

TEST(Validity, QuadraticCoinFailsWithWitness) {
  const auto r = validity_check(ProcessSpec::named(NamedFamily::quadratic), fair(), 1, 0, R(0), {R(1, 4)});
  EXPECT_FALSE(r.passed);
  ASSERT_EQ(r.evidence.size(), 1u);
  EXPECT_TRUE(r.evidence[0].never_empty);
  // 2^(-pi^2/6) = 0.31976..., quoted as roughly 0.3194.
  EXPECT_NEAR(r.evidence[0].witness_mass_lower, std::exp2(-M_PI * M_PI / 6), 1e-12);
  EXPECT_NEAR(r.evidence[0].witness_mass_lower, 0.3194, 5e-4);
  EXPECT_GT(r.evidence[0].witness_mass_lower, 0.319);
}

TEST(Validity, QuadraticCoinReachesModestThresholds) {
  const auto ev = min_entropy_evidence(ProcessSpec::named(NamedFamily::quadratic), R(1, 2));
  ASSERT_TRUE(ev.first_empty_m);
  EXPECT_EQ(*ev.first_empty_m, 1u);
  // log2(8/3) = 1.415 is first reached at m = 4 (1.4236).
  const auto ev2 = min_entropy_evidence(ProcessSpec::named(NamedFamily::quadratic), R(3, 8));
  ASSERT_TRUE(ev2.first_empty_m);
  EXPECT_EQ(*ev2.first_empty_m, 4u);
}

TEST(Validity, HarmonicCoinPassesInPrinciple) {
  // lambda = 2: first m with H_m >= 2 is 4 (25/12).
  const auto ev = min_entropy_evidence(ProcessSpec::named(NamedFamily::harmonic), R(1, 4));
  ASSERT_TRUE(ev.first_empty_m);
  EXPECT_EQ(*ev.first_empty_m, 4u);
  // lambda = 5: H_m >= 5 first at m = 83.
  const auto ev5 = min_entropy_evidence(ProcessSpec::named(NamedFamily::harmonic), dyadic(5));
  ASSERT_TRUE(ev5.first_empty_m);
  EXPECT_EQ(*ev5.first_empty_m, 83u);
  const auto r = validity_check(ProcessSpec::named(NamedFamily::harmonic), fair(), 1, 0, R(0), {R(1, 4), dyadic(5)});
  EXPECT_TRUE(r.passed);
}

TEST(Validity, IidEvidence) {
  const auto ev = min_entropy_evidence(fair(), dyadic(7));
  ASSERT_TRUE(ev.first_empty_m);
  EXPECT_EQ(*ev.first_empty_m, 7u);
}

TEST(SpectrumMass, Examples) {
  EXPECT_EQ(spectrum_mass(fair(), 3, R(1, 8)).mass_below, R(1));
  EXPECT_EQ(spectrum_mass(fair(), 3, R(1, 16)).mass_below, R(0));
  EXPECT_EQ(spectrum_mass(ProcessSpec::iid({R(3, 4), R(1, 4)}), 2, R(1, 4)).mass_below, R(7, 16));
  const auto s = spectrum_mass(fair(), 3, R(1, 8));
  EXPECT_EQ(s.mass_strictly_below, R(0));
  EXPECT_NEAR(s.lambda_bits.value, 3.0, 1e-15);
}

TEST(SpectrumMass, BudgetAndIrrationalErrors) {
  try {
    spectrum_mass(biased_mixture(), 20, R(1, 2), 8);
    FAIL();
  } catch (const BudgetError& e) {
    EXPECT_STREQ(e.what(), "spectrum enumeration budget exceeded");
  }
  EXPECT_THROW(spectrum_mass(ProcessSpec::named(NamedFamily::harmonic), 3, R(1, 2)), IrrationalModelError);
}

TEST(SpectrumMass, MonotoneInThresholdAndMatchesEnumeration) {
  const std::vector<std::pair<std::string, ProcessSpec>> models{{"markov", markov_h14()},
                                                                 {"reducible", reducible()},
                                                                 {"mixture", biased_mixture()},
                                                                 {"two_thirds", two_thirds()},
                                                                 {"ternary", ternary()}};
  for (const auto& [name, model] : models) {
    const std::size_t m = model.alphabet_size() == 3 ? 7 : 12;
    // Enumerate every sequence.
    std::vector<Ratio> probs;
    std::vector<Sequence> level{{}};
    for (std::size_t d = 0; d < m; ++d) {
      std::vector<Sequence> next;
      for (const auto& s : level)
        for (Symbol x = 0; x < model.alphabet_size(); ++x) {
          auto t = s;
          t.push_back(x);
          next.push_back(std::move(t));
        }
      level = std::move(next);
    }
    for (const auto& s : level) probs.push_back(seq_prob(model, s));
    Ratio prev(-1);
    for (unsigned k = 0; k <= 2 * m + 4; ++k) {
      const Ratio t = dyadic(2 * m + 4 - k);
      const auto sm = spectrum_mass(model, m, t);
      Ratio below, strict;
      for (const auto& p : probs) {
        if (p.is_zero()) continue;
        if (p <= t) below += p;
        if (p < t) strict += p;
      }
      ASSERT_EQ(sm.mass_below, below) << name << " t=" << t.str();
      ASSERT_EQ(sm.mass_strictly_below, strict);
      EXPECT_GE(sm.mass_below, prev);
      prev = sm.mass_below;
    }
  }
}

TEST(FlTruncate, Examples) {
  const auto r = fl_truncate(fair(), two_thirds(), 1, 2, {1});
  EXPECT_EQ(r.approx_law.at({0}), R(1, 2));
  EXPECT_EQ(r.approx_law.at({1}), R(1, 2));
  EXPECT_EQ(r.delta, R(1, 6));
  EXPECT_EQ(r.overflow_at_m, R(1, 4));
  const auto z = fl_truncate(fair(), fair(), 1, 3, {0});
  EXPECT_EQ(z.delta, R(0));
  const auto d = fl_truncate(fair(), two_thirds(), 1, 0, {0});
  EXPECT_EQ(d.delta, R(1) - R(2, 3));
  EXPECT_EQ(d.overflow_at_m, R(1));
}

TEST(FlTruncate, ErrorBelowOverflowForEveryPairAndFallback) {
  for (const auto& pair : corpus()) {
    const auto cells = TargetPartition(pair.target, pair.n).cells();
    for (const auto& fb : {cells.front().output, cells.back().output}) {
      for (std::size_t m = 0; m <= 30; m += 3) {
        const auto r = fl_truncate(pair.coin, pair.target, pair.n, m, fb);
        EXPECT_LE(r.delta, r.overflow_at_m);
      }
    }
  }
}

TEST(FlTruncate, FallbackValidation) {
  EXPECT_THROW(fl_truncate(fair(), two_thirds(), 1, 2, {0, 0}), std::invalid_argument);
  EXPECT_THROW(fl_truncate(fair(), two_thirds(), 1, 2, {2}), std::out_of_range);
}
