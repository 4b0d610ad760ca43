#pragma once

// Shared models and brute-force oracles for the test suites.

#include <map>
#include <string>
#include <vector>

#include "exactrng/exactrng.hpp"

namespace exactrng::testing {

inline Ratio R(long a, long b = 1) { return Ratio(a, b); }

inline ProcessSpec fair() { return ProcessSpec::iid({R(1, 2), R(1, 2)}); }
inline ProcessSpec two_thirds() { return ProcessSpec::iid({R(2, 3), R(1, 3)}); }
inline ProcessSpec markov_h14() {
  return ProcessSpec::markov({{R(3, 4), R(1, 4)}, {R(1, 4), R(3, 4)}}, {R(1, 2), R(1, 2)});
}
inline ProcessSpec iid_13_23() { return ProcessSpec::iid({R(1, 3), R(2, 3)}); }
// Classes {1,2} (fair, entropy 1) and {3} (deterministic, entropy 0), weights (1/2, 1/2).
inline ProcessSpec reducible() {
  return ProcessSpec::markov({{R(1, 2), R(1, 2), R(0)}, {R(1, 2), R(1, 2), R(0)}, {R(0), R(0), R(1)}},
                             {R(1, 4), R(1, 4), R(1, 2)});
}
inline ProcessSpec biased_mixture() {
  return ProcessSpec::mixture({R(1, 3), R(2, 3)},
                              {ProcessSpec::iid({R(1, 3), R(2, 3)}), ProcessSpec::iid({R(3, 4), R(1, 4)})});
}
inline ProcessSpec ternary() { return ProcessSpec::iid({R(1, 5), R(2, 5), R(2, 5)}); }

struct Pair {
  std::string name;
  ProcessSpec coin;
  ProcessSpec target;
  std::size_t n;  // length used by the bound suites
};

/// Corpus of rational model pairs used across suites.
inline std::vector<Pair> corpus() {
  return {
      {"fair_to_twothirds", fair(), two_thirds(), 1},
      {"markov_to_iid", markov_h14(), iid_13_23(), 4},
      {"fair_to_reducible", fair(), reducible(), 4},
      {"mixture_to_fair", biased_mixture(), fair(), 2},
      {"fair_to_ternary", fair(), ternary(), 2},
  };
}

struct BruteForce {
  std::vector<Ratio> overflow;                 // Pr(T > m), m = 0..m_max
  std::vector<std::map<Sequence, Ratio>> law;  // terminated output mass after m coins
};

/// Enumerates every positive-probability coin prefix through the step-level
/// generator.
inline BruteForce brute_force(const ProcessSpec& coin, const ProcessSpec& target, std::size_t n, std::size_t m_max) {
  BruteForce bf;
  bf.overflow.assign(m_max + 1, Ratio(0));
  bf.law.assign(m_max + 1, {});
  struct Rec {
    const ProcessSpec& coin;
    std::size_t m_max;
    BruteForce& bf;
    void go(IntervalGenerator g, std::size_t depth, const Ratio& prob) {
      if (g.done()) {
        for (std::size_t m = depth; m <= m_max; ++m) bf.law[m][g.emitted()] += prob;
        return;
      }
      bf.overflow[depth] += prob;
      if (depth == m_max) return;
      const auto pmf = g.coin().pmf();
      for (Symbol x = 0; x < pmf.size(); ++x) {
        if (pmf[x].is_zero()) continue;
        IntervalGenerator child = g;
        const Sequence one{x};
        child.step(stream_from(one));
        // step() stops after the first emission; drain any remaining releases.
        child.drain();
        go(std::move(child), depth + 1, prob * pmf[x]);
      }
    }
  } rec{coin, m_max, bf};
  auto g = make_generator(coin, target, n);
  g.drain();
  rec.go(std::move(g), 0, Ratio(1));
  return bf;
}

/// Pr(T > m) from the containment characterization alone: T <= m iff the
/// coin interval of x^m fits inside one depth-n target cell.
inline Ratio overflow_by_containment(const ProcessSpec& coin, const ProcessSpec& target, std::size_t n,
                                     std::size_t m) {
  const TargetPartition part(target, n);
  Ratio out;
  std::vector<std::pair<ExactCoinTracker, Ratio>> level{{ExactCoinTracker(coin), Ratio(1)}};
  for (std::size_t d = 0; d < m; ++d) {
    std::vector<std::pair<ExactCoinTracker, Ratio>> next;
    for (auto& [t, p] : level) {
      const auto pmf = t.pmf();
      for (Symbol x = 0; x < pmf.size(); ++x) {
        if (pmf[x].is_zero()) continue;
        ExactCoinTracker c = t;
        c.advance(x);
        next.emplace_back(std::move(c), p * pmf[x]);
      }
    }
    level = std::move(next);
  }
  for (auto& [t, p] : level) {
    bool inside = false;
    for (const auto& cell : part.cells()) inside = inside || interval_contains(cell.interval, t.interval());
    if (!inside) out += p;
  }
  return out;
}

}  // namespace exactrng::testing
