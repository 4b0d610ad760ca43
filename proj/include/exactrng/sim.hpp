#pragma once

// Seeded Monte Carlo harness.
//
// Randomness: trial i of a run with seed s draws from std::mt19937_64
// seeded through std::seed_seq{lo32(s), hi32(s), lo32(i), hi32(i)}. Both
// algorithms are fixed by the C++ standard, so streams are reproducible on
// every conforming implementation, and each trial's stream depends only on
// (s, i). Worker threads take disjoint trial indices; per-trial records are
// merged in index order.
//
// Coin symbols are drawn exactly: a uniform variate U is revealed one bit at
// a time as a dyadic interval, and the symbol is fixed once that interval
// falls inside one cell of the cumulative law.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <iterator>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <thread>
#include <variant>
#include <vector>

#include <gmpxx.h>

#include "exactrng/bigfloat.hpp"
#include "exactrng/interval_alg.hpp"
#include "exactrng/process.hpp"
#include "exactrng/ratio.hpp"

namespace exactrng {

/// Uniform random bits, most significant bit of each 64-bit word first.
class BitSource {
 public:
  BitSource(std::uint64_t seed, std::uint64_t stream) : rng_(make_seq(seed, stream)) {}

  unsigned bit() {
    if (left_ == 0) {
      word_ = rng_();
      left_ = 64;
    }
    --left_;
    ++used_;
    return static_cast<unsigned>((word_ >> left_) & 1U);
  }

  [[nodiscard]] std::uint64_t bits_used() const noexcept { return used_; }

 private:
  static std::mt19937_64 make_seq(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
  }

  std::mt19937_64 rng_;
  std::uint64_t word_ = 0;
  unsigned left_ = 0;
  std::uint64_t used_ = 0;
};

namespace detail {

// U in [k/2^j, (k+1)/2^j).
struct DyadicCell {
  mpz_class k = 0;
  unsigned long j = 0;

  [[nodiscard]] Ratio lo() const { return Ratio(k, denom()); }
  [[nodiscard]] Ratio hi() const { return Ratio(k + 1, denom()); }
  void refine(unsigned b) {
    k = 2 * k + b;
    ++j;
  }

 private:
  [[nodiscard]] mpz_class denom() const {
    mpz_class d = 1;
    mpz_mul_2exp(d.get_mpz_t(), d.get_mpz_t(), j);
    return d;
  }
};

template <class Bits>
Symbol sample_rational(const std::vector<Ratio>& pmf, Bits& bits) {
  for (Symbol x = 0; x < pmf.size(); ++x)
    if (pmf[x] == Ratio(1)) return x;
  const auto c = cumulative(pmf);
  DyadicCell u;
  for (;;) {
    u.refine(bits.bit());
    const Ratio lo = u.lo();
    const Ratio hi = u.hi();
    // The cell containing lo; resolved once hi does not pass its right end.
    const auto it = std::upper_bound(c.begin(), c.end(), lo);
    const auto x = static_cast<Symbol>(std::distance(c.begin(), it) - 1);
    if (hi <= c[x + 1]) return x;
  }
}

template <class Bits>
Symbol sample_dyadic(const DyadicExp& p, Bits& bits) {
  const Ratio& e = p.exponent();
  if (e.is_integer() && e.num().fits_ulong_p() && e.num().get_ui() < 4096) {
    const Ratio q = dyadic(e.num().get_ui());
    return sample_rational(std::vector<Ratio>{q, Ratio(1) - q}, bits);
  }
  // Irrational threshold: U < p gives symbol 0.
  DyadicCell u;
  for (;;) {
    u.refine(bits.bit());
    if (!dyadic_leq_ratio(p, u.hi())) return 0;  // hi < p
    if (u.k == 0) continue;  // lo = 0 < p
    if (dyadic_leq_ratio(p, u.lo())) return 1;
  }
}

}  // namespace detail

/// Draws one symbol with exactly the probabilities of `law`.
template <class Bits>
Symbol sample_symbol(const SymbolLaw& law, Bits& bits) {
  if (const auto* pmf = std::get_if<std::vector<Ratio>>(&law)) return detail::sample_rational(*pmf, bits);
  return detail::sample_dyadic(std::get<DyadicBernoulli>(law).first, bits);
}

template <class Bits>
Symbol sample_symbol(const ProcessSpec& model, const Sequence& prefix, Bits& bits) {
  return sample_symbol(cond_law(model, prefix), bits);
}

struct SimConfig {
  std::uint64_t seed = 0;
  std::size_t trials = 1;
  std::size_t n = 1;
  std::size_t m_cap = 0;  // 0 selects the default 10^6 * n
  bool keep_law = true;

  [[nodiscard]] std::size_t effective_cap() const {
    if (m_cap) return m_cap;
    return std::max<std::size_t>(1, 1'000'000 * n);
  }
};

inline constexpr double kTruncationFlagLevel = 1e-4;

struct SimResult {
  SimConfig config;
  std::map<std::size_t, std::uint64_t> stopping_histogram;  // completed trials only
  std::uint64_t truncated_trials = 0;
  std::uint64_t completed_trials = 0;
  double mean_T = 0.0;
  double var_T = 0.0;  // sample variance of completed trials
  std::map<Sequence, std::uint64_t> empirical_law;

  /// Number of trials with T > m. Truncated trials count for every m below the cap.
  [[nodiscard]] std::uint64_t overflow_count(std::size_t m) const {
    std::uint64_t c = m < config.effective_cap() ? truncated_trials : 0;
    for (auto it = stopping_histogram.upper_bound(m); it != stopping_histogram.end(); ++it) c += it->second;
    return c;
  }
  [[nodiscard]] std::size_t max_T() const { return stopping_histogram.empty() ? 0 : stopping_histogram.rbegin()->first; }
  [[nodiscard]] std::vector<std::uint64_t> empirical_overflow() const {
    std::vector<std::uint64_t> out;
    for (std::size_t m = 0; m <= max_T(); ++m) out.push_back(overflow_count(m));
    return out;
  }
  [[nodiscard]] double truncation_fraction() const {
    return static_cast<double>(truncated_trials) / static_cast<double>(config.trials);
  }
  [[nodiscard]] bool truncation_flag() const { return truncation_fraction() > kTruncationFlagLevel; }
  [[nodiscard]] double quantile_T(double q) const {
    const auto need = static_cast<std::uint64_t>(std::ceil(q * static_cast<double>(completed_trials)));
    std::uint64_t acc = 0;
    for (const auto& [t, c] : stopping_histogram) {
      acc += c;
      if (acc >= need) return static_cast<double>(t);
    }
    return static_cast<double>(max_T());
  }

  friend bool operator==(const SimResult& a, const SimResult& b) {
    return a.stopping_histogram == b.stopping_histogram && a.truncated_trials == b.truncated_trials &&
           a.completed_trials == b.completed_trials && a.mean_T == b.mean_T && a.var_T == b.var_T &&
           a.empirical_law == b.empirical_law;
  }
};

struct TrialRecord {
  std::size_t stopping_time = 0;
  bool truncated = false;
  Sequence output;
};

template <class Tracker>
TrialRecord run_one_trial(Tracker tracker, const ProcessSpec& target, std::size_t n, std::size_t cap,
                          BitSource& bits) {
  BasicIntervalGenerator<Tracker> g(std::move(tracker), target, n);
  g.drain();
  while (!g.done()) {
    if (g.coin().count() >= cap) return {g.coin().count(), true, {}};
    g.feed(sample_symbol(g.coin().law(), bits));
    g.drain();
  }
  return {g.coin().count(), false, g.emitted()};
}

inline TrialRecord run_trial(const ProcessSpec& coin, const ProcessSpec& target, const SimConfig& cfg,
                             std::uint64_t index) {
  BitSource bits(cfg.seed, index);
  if (coin.has_rational_conditionals())
    return run_one_trial(ExactCoinTracker(coin), target, cfg.n, cfg.effective_cap(), bits);
  return run_one_trial(EnclosedCoinTracker(coin), target, cfg.n, cfg.effective_cap(), bits);
}

/// Runs cfg.trials independent trials; the result does not depend on `workers`.
inline SimResult run_trials(const ProcessSpec& coin, const ProcessSpec& target, const SimConfig& cfg,
                            unsigned workers = 1) {
  if (cfg.trials == 0) throw std::invalid_argument("trials must be >= 1");
  if (!target.has_rational_conditionals()) throw IrrationalModelError();
  std::vector<TrialRecord> records(cfg.trials);
  workers = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(cfg.trials)));
  if (workers == 1) {
    for (std::size_t i = 0; i < cfg.trials; ++i) records[i] = run_trial(coin, target, cfg, i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < cfg.trials; i += workers) records[i] = run_trial(coin, target, cfg, i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  SimResult res;
  res.config = cfg;
  long double sum = 0, sumsq = 0;
  for (auto& r : records) {
    if (r.truncated) {
      ++res.truncated_trials;
      continue;
    }
    ++res.completed_trials;
    ++res.stopping_histogram[r.stopping_time];
    const auto t = static_cast<long double>(r.stopping_time);
    sum += t;
    sumsq += t * t;
    if (cfg.keep_law) ++res.empirical_law[std::move(r.output)];
  }
  if (res.completed_trials) {
    const auto k = static_cast<long double>(res.completed_trials);
    res.mean_T = static_cast<double>(sum / k);
    if (res.completed_trials > 1) res.var_T = static_cast<double>((sumsq - sum * sum / k) / (k - 1));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Empirical information spectrum

struct EmpiricalSpectrum {
  std::size_t length = 0;
  std::vector<double> rates;  // (1/length) log2 1/P(seq), one per trial, in trial order
  double bin_width = 0.01;

  /// Fraction of samples with rate < r.
  [[nodiscard]] double fraction_below(double r) const {
    if (rates.empty()) return 0.0;
    return static_cast<double>(std::count_if(rates.begin(), rates.end(), [r](double v) { return v < r; })) /
           static_cast<double>(rates.size());
  }
  /// Histogram keyed by bin index floor(rate / bin_width).
  [[nodiscard]] std::map<long, std::uint64_t> histogram() const {
    std::map<long, std::uint64_t> h;
    for (double v : rates) ++h[static_cast<long>(std::floor(v / bin_width))];
    return h;
  }
};

inline EmpiricalSpectrum empirical_spectrum(const ProcessSpec& model, std::size_t length, std::size_t trials,
                                            std::uint64_t seed, double bin_width = 0.01) {
  if (length == 0) throw std::invalid_argument("spectrum length must be >= 1");
  EmpiricalSpectrum out;
  out.length = length;
  out.bin_width = bin_width;
  out.rates.reserve(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    BitSource bits(seed, i);
    ProcessCursor cur(model);
    double info = 0.0;  // only used for the named families
    for (std::size_t t = 0; t < length; ++t) {
      const SymbolLaw law = cur.law();
      const Symbol x = sample_symbol(law, bits);
      if (const auto* db = std::get_if<DyadicBernoulli>(&law)) {
        if (x == 0) {
          info += db->first.exponent().to_double();
        } else {
          info -= std::log2(-std::expm1(-db->first.exponent().to_double() * std::log(2.0)));
        }
      }
      cur.advance(x);
    }
    if (model.has_rational_conditionals()) info = -log2_enclosure(cur.prob(), 80).mid();
    out.rates.push_back(info / static_cast<double>(length));
  }
  return out;
}

}  // namespace exactrng
