#include <gtest/gtest.h>

#include <cmath>

#include "corpus.hpp"

using namespace exactrng;
using namespace exactrng::testing;

namespace {

// Replays a fixed bit string and counts what it hands out.
struct FixedBits {
  std::vector<unsigned> v;
  std::size_t used = 0;
  unsigned bit() {
    if (used >= v.size()) throw std::out_of_range("fixed bit stream exhausted");
    return v[used++];
  }
};

double chi_square(const std::vector<std::uint64_t>& counts, const std::vector<double>& p, double total) {
  double s = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = p[i] * total;
    s += (static_cast<double>(counts[i]) - e) * (static_cast<double>(counts[i]) - e) / e;
  }
  return s;
}

}  // namespace

TEST(SampleSymbol, DegenerateLawUsesNoBits) {
  FixedBits b;
  for (int i = 0; i < 5; ++i) EXPECT_EQ(sample_symbol(SymbolLaw(std::vector<Ratio>{R(1), R(0)}), b), 0u);
  EXPECT_EQ(b.used, 0u);
}

TEST(SampleSymbol, FairLawReturnsTheFirstBit) {
  for (unsigned first : {0u, 1u}) {
    FixedBits b{{first, 1, 0, 1}};
    EXPECT_EQ(sample_symbol(SymbolLaw(std::vector<Ratio>{R(1, 2), R(1, 2)}), b), first);
    EXPECT_EQ(b.used, 1u);
  }
}

TEST(SampleSymbol, TwoThirdsResolvesFromAShortStream) {
  // [1/2, 3/4) straddles 2/3, so a third bit is needed.
  FixedBits b{{1, 0, 0, 0}};
  EXPECT_EQ(sample_symbol(SymbolLaw(std::vector<Ratio>{R(2, 3), R(1, 3)}), b), 0u);
  EXPECT_EQ(b.used, 3u);  // [1/2, 5/8) fits below 2/3
  FixedBits c{{1, 1}};
  EXPECT_EQ(sample_symbol(SymbolLaw(std::vector<Ratio>{R(2, 3), R(1, 3)}), c), 1u);
  EXPECT_EQ(c.used, 2u);
}

TEST(SampleSymbol, TwoThirdsFrequencyWithinThreeSigma) {
  BitSource bits(42, 0);
  const SymbolLaw law(std::vector<Ratio>{R(2, 3), R(1, 3)});
  const int n = 100000;
  int zeros = 0;
  for (int i = 0; i < n; ++i) zeros += sample_symbol(law, bits) == 0;
  const double sigma = std::sqrt(n * (2.0 / 3) * (1.0 / 3));
  EXPECT_LT(std::abs(zeros - n * 2.0 / 3), 3 * sigma);
  // Expected bits per draw is at most 2 + h(1/3).
  EXPECT_LT(static_cast<double>(bits.bits_used()) / n, 2.0 + 0.92);
}

TEST(SampleSymbol, ChiSquareOnTernaryLaw) {
  BitSource bits(7, 3);
  const SymbolLaw law(std::vector<Ratio>{R(1, 5), R(2, 5), R(2, 5)});
  std::vector<std::uint64_t> counts(3);
  for (int i = 0; i < 100000; ++i) ++counts[sample_symbol(law, bits)];
  // Two degrees of freedom: critical value 13.82 at significance 1e-3.
  EXPECT_LT(chi_square(counts, {0.2, 0.4, 0.4}, 100000), 13.82);
}

TEST(SampleSymbol, DyadicBernoulliFrequencies) {
  BitSource bits(11, 0);
  // p = 2^(-1/2) = 0.70710...
  const SymbolLaw law(DyadicBernoulli{DyadicExp(R(1, 2))});
  const int n = 100000;
  int zeros = 0;
  for (int i = 0; i < n; ++i) zeros += sample_symbol(law, bits) == 0;
  const double p = std::sqrt(0.5);
  EXPECT_LT(std::abs(zeros - n * p), 4 * std::sqrt(n * p * (1 - p)));
  // Integer exponents take the rational path: 2^-2.
  FixedBits b{{0, 0}};
  EXPECT_EQ(sample_symbol(SymbolLaw(DyadicBernoulli{DyadicExp(R(2))}), b), 0u);
  EXPECT_EQ(b.used, 2u);
}

TEST(SampleSymbol, NamedCoinFirstStepIsFair) {
  // The harmonic coin's first step is a fair split.
  FixedBits b{{1}};
  EXPECT_EQ(sample_symbol(ProcessSpec::named(NamedFamily::harmonic), {}, b), 1u);
}

TEST(BitSource, StreamsAreReproducibleAndDistinct) {
  BitSource a(5, 9), b(5, 9), c(5, 10);
  std::string sa, sb, sc;
  for (int i = 0; i < 256; ++i) {
    sa += char('0' + a.bit());
    sb += char('0' + b.bit());
    sc += char('0' + c.bit());
  }
  EXPECT_EQ(sa, sb);
  EXPECT_NE(sa, sc);
  EXPECT_EQ(a.bits_used(), 256u);
}

TEST(RunTrials, SameSeedSameResult) {
  SimConfig cfg{123, 2000, 4, 0, true};
  const auto a = run_trials(markov_h14(), iid_13_23(), cfg);
  const auto b = run_trials(markov_h14(), iid_13_23(), cfg);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  cfg.seed = 124;
  EXPECT_FALSE(run_trials(markov_h14(), iid_13_23(), cfg) == a);
}

TEST(RunTrials, IndependentOfWorkerCount) {
  const SimConfig cfg{99, 3001, 2, 0, true};
  const auto one = run_trials(biased_mixture(), fair(), cfg, 1);
  for (unsigned w : {2u, 3u, 8u}) EXPECT_TRUE(run_trials(biased_mixture(), fair(), cfg, w) == one) << w;
}

TEST(RunTrials, CountsAreConsistent) {
  const SimConfig cfg{1, 5000, 3, 0, true};
  const auto r = run_trials(fair(), ternary(), cfg);
  std::uint64_t hist = 0, law = 0;
  for (const auto& [t, c] : r.stopping_histogram) hist += c;
  for (const auto& [y, c] : r.empirical_law) law += c;
  EXPECT_EQ(hist, cfg.trials - r.truncated_trials);
  EXPECT_EQ(law, hist);
  EXPECT_EQ(r.overflow_count(0), cfg.trials);
}

TEST(RunTrials, FairToTwoThirdsMeanWithinThreeSigma) {
  const SimConfig cfg{2024, 100000, 1, 0, true};
  const auto r = run_trials(fair(), two_thirds(), cfg);
  // T is geometric with p = 1/2 on {1, 2, ...}: mean 2, variance 2.
  const double sigma = std::sqrt(2.0 / cfg.trials);
  EXPECT_LT(std::abs(r.mean_T - 2.0), 3 * sigma);
  EXPECT_EQ(r.truncated_trials, 0u);
}

TEST(RunTrials, OverflowWithinFourSigmaOfExact) {
  for (const auto& pair : corpus()) {
    const SimConfig cfg{77, 20000, std::min<std::size_t>(pair.n, 2), 0, false};
    const auto r = run_trials(pair.coin, pair.target, cfg);
    const auto q99 = static_cast<std::size_t>(r.quantile_T(0.99));
    const auto exact = stopping_profile(pair.coin, pair.target, cfg.n, q99);
    for (std::size_t m = 0; m <= q99; ++m) {
      const double p = exact.overflow[m].to_double();
      const double band = 4 * std::sqrt(p * (1 - p) / cfg.trials) + 1e-12;
      EXPECT_LE(std::abs(static_cast<double>(r.overflow_count(m)) / cfg.trials - p), band) << pair.name << " m=" << m;
    }
  }
}

TEST(RunTrials, OutputLawMatchesTarget) {
  const SimConfig cfg{5, 30000, 2, 0, true};
  const auto r = run_trials(markov_h14(), ternary(), cfg);
  const auto truth = target_law(ternary(), 2);
  std::vector<std::uint64_t> counts;
  std::vector<double> probs;
  for (const auto& [y, p] : truth) {
    auto it = r.empirical_law.find(y);
    counts.push_back(it == r.empirical_law.end() ? 0 : it->second);
    probs.push_back(p.to_double());
  }
  // Eight degrees of freedom: critical value 26.12 at significance 1e-3.
  EXPECT_LT(chi_square(counts, probs, cfg.trials), 26.12);
}

TEST(RunTrials, TruncationIsRecordedNotFatal) {
  const SimConfig cfg{3, 1000, 4, 2, true};
  const auto r = run_trials(fair(), two_thirds(), cfg);
  EXPECT_GT(r.truncated_trials, 0u);
  EXPECT_EQ(r.truncated_trials + r.completed_trials, cfg.trials);
  EXPECT_TRUE(r.truncation_flag());
  for (const auto& [t, c] : r.stopping_histogram) EXPECT_LE(t, 2u);
  EXPECT_EQ(SimConfig{}.effective_cap(), 1000000u);
}

TEST(RunTrials, IrrationalCoinRuns) {
  const SimConfig cfg{8, 2000, 2, 0, true};
  const auto r = run_trials(ProcessSpec::named(NamedFamily::harmonic), fair(), cfg);
  EXPECT_EQ(r.completed_trials, cfg.trials);
  EXPECT_GE(r.mean_T, 2.0);
}

TEST(RunTrials, TailDecayIsDominated) {
  const SimConfig cfg{31, 20000, 4, 0, false};
  const auto r = run_trials(markov_h14(), iid_13_23(), cfg);
  const auto ov = r.empirical_overflow();
  for (std::size_t m = 1; m < ov.size(); ++m) EXPECT_LE(ov[m], ov[m - 1]);
  EXPECT_EQ(ov.back(), 0u);
}

TEST(RunTrials, RejectsZeroTrials) {
  EXPECT_THROW(run_trials(fair(), fair(), SimConfig{1, 0, 1, 0, true}), std::invalid_argument);
}

TEST(EmpiricalSpectrum, FairCoinIsAPointMass) {
  const auto s = empirical_spectrum(fair(), 50, 200, 1);
  for (double v : s.rates) EXPECT_NEAR(v, 1.0, 1e-12);
  EXPECT_EQ(s.histogram().size(), 1u);
}

TEST(EmpiricalSpectrum, ReducibleTargetHasTwoClusters) {
  const auto s = empirical_spectrum(reducible(), 256, 10000, 17);
  for (double v : s.rates) EXPECT_TRUE(v < 0.05 || v > 0.95) << v;
  const double low = s.fraction_below(0.5);
  EXPECT_NEAR(low, 0.5, 3 * std::sqrt(0.25 / 10000));
}

TEST(EmpiricalSpectrum, MarkovClusterNearEntropyRate) {
  const auto s = empirical_spectrum(markov_h14(), 512, 400, 2);
  // Per-sequence spread is about 0.03 bits/symbol at this length.
  double mean = 0;
  std::size_t near = 0;
  for (double v : s.rates) {
    mean += v;
    near += std::abs(v - 0.8113) < 0.1;
  }
  EXPECT_NEAR(mean / s.rates.size(), 0.8113, 0.05);
  EXPECT_GE(near, s.rates.size() * 99 / 100);
}
