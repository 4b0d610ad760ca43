#pragma once

// Exact analysis of the interval algorithm.
//
// Frontier dynamic program. After m coin symbols the algorithm is still
// running on prefix x^m exactly when I_{x^m} is not inside any cell J_{y^n}
// of the depth-n target partition, i.e. when some interior partition
// boundary lies strictly inside I_{x^m}. Live intervals at one depth are
// disjoint and each holds a distinct boundary, so the frontier never exceeds
// N^n - 1 entries, and its total length is exactly Pr(T > m).
//
// Geometric tail certificate. A live interval of depth m is a product of m
// conditional coin probabilities, each at most p_max (the largest
// conditional probability the coin can assign to one symbol). Hence
//   Pr(T > m) <= (N^n - 1) * p_max^m,
// and summing the tail past m_max gives the certified E[T] interval.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "exactrng/bigfloat.hpp"
#include "exactrng/interval_alg.hpp"
#include "exactrng/markov.hpp"
#include "exactrng/process.hpp"
#include "exactrng/ratio.hpp"

namespace exactrng {

class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// N^n as an exact integer.
inline mpz_class partition_size(std::size_t alphabet, std::size_t n) {
  mpz_class r;
  mpz_ui_pow_ui(r.get_mpz_t(), alphabet, n);
  return r;
}

/// Non-empty cells J_{y^n} of the depth-n target partition, in interval order.
class TargetPartition {
 public:
  struct Cell {
    UnitInterval interval;
    Sequence output;
  };

  TargetPartition(const ProcessSpec& target, std::size_t n, std::size_t budget = frontier_cap_from_env())
      : alphabet_(target.alphabet_size()), n_(n) {
    if (!target.has_rational_conditionals()) throw IrrationalModelError();
    if (partition_size(alphabet_, n) > mpz_class(std::to_string(budget)))
      throw BudgetError("target length exceeds exact-analysis budget");
    ProcessCursor cur(target);
    Sequence prefix;
    expand(cur, UnitInterval(), prefix);
    for (std::size_t i = 1; i < cells_.size(); ++i) boundaries_.push_back(cells_[i].interval.lo());
  }

  [[nodiscard]] const std::vector<Cell>& cells() const noexcept { return cells_; }
  [[nodiscard]] std::size_t n() const noexcept { return n_; }
  [[nodiscard]] std::size_t alphabet() const noexcept { return alphabet_; }
  // Interior points separating consecutive non-empty cells.
  [[nodiscard]] const std::vector<Ratio>& boundaries() const noexcept { return boundaries_; }

  /// Index of the cell that contains `iv`, if any.
  [[nodiscard]] std::optional<std::size_t> cell_containing(const UnitInterval& iv) const {
    // Last cell whose lo <= iv.lo.
    auto it = std::upper_bound(cells_.begin(), cells_.end(), iv.lo(),
                               [](const Ratio& v, const Cell& c) { return v < c.interval.lo(); });
    if (it == cells_.begin()) return std::nullopt;
    const auto idx = static_cast<std::size_t>(std::distance(cells_.begin(), it) - 1);
    if (interval_contains(cells_[idx].interval, iv)) return idx;
    return std::nullopt;
  }

  [[nodiscard]] std::optional<std::size_t> index_of(const Sequence& y) const {
    for (std::size_t i = 0; i < cells_.size(); ++i)
      if (cells_[i].output == y) return i;
    return std::nullopt;
  }

 private:
  void expand(const ProcessCursor& cur, const UnitInterval& iv, Sequence& prefix) {
    if (prefix.size() == n_) {
      cells_.push_back({iv, prefix});
      return;
    }
    const auto q = cur.pmf();
    const auto c = cumulative(q);
    for (Symbol y = 0; y < q.size(); ++y) {
      if (q[y].is_zero()) continue;
      ProcessCursor next = cur;
      next.advance(y);
      prefix.push_back(y);
      expand(next, iv.sub(c[y], c[y + 1]), prefix);
      prefix.pop_back();
    }
  }

  std::size_t alphabet_;
  std::size_t n_;
  std::vector<Cell> cells_;
  std::vector<Ratio> boundaries_;
};

/// Level-by-level frontier of live coin prefixes.
class FrontierAnalyzer {
 public:
  FrontierAnalyzer(const ProcessSpec& coin, const ProcessSpec& target, std::size_t n,
                   std::size_t cap = frontier_cap_from_env())
      : partition_(target, n, cap), law_(partition_.cells().size()) {
    if (!coin.has_rational_conditionals()) throw IrrationalModelError();
    max_frontier_ = partition_size(target.alphabet_size(), n) - 1;
    ExactCoinTracker root(coin);
    if (auto cell = partition_.cell_containing(root.interval())) {
      law_[*cell] += Ratio(1);
    } else {
      overflow_ = Ratio(1);
      frontier_.push_back(std::move(root));
    }
    largest_ = frontier_.size();
  }

  void advance() {
    std::vector<ExactCoinTracker> next;
    Ratio mass;
    for (const auto& node : frontier_) {
      const auto pmf = node.pmf();
      for (Symbol x = 0; x < pmf.size(); ++x) {
        if (pmf[x].is_zero()) continue;
        ExactCoinTracker child = node;
        child.advance(x);
        if (auto cell = partition_.cell_containing(child.interval())) {
          law_[*cell] += child.interval().length();
        } else {
          mass += child.interval().length();
          next.push_back(std::move(child));
        }
      }
    }
    if (mpz_class(std::to_string(next.size())) > max_frontier_ || next.size() > partition_.boundaries().size())
      throw std::logic_error("frontier exceeded N^n - 1 live prefixes");
    frontier_ = std::move(next);
    overflow_ = std::move(mass);
    largest_ = std::max(largest_, frontier_.size());
    ++depth_;
  }

  [[nodiscard]] std::size_t depth() const noexcept { return depth_; }
  [[nodiscard]] const Ratio& overflow() const noexcept { return overflow_; }
  [[nodiscard]] const std::vector<ExactCoinTracker>& frontier() const noexcept { return frontier_; }
  [[nodiscard]] std::size_t largest_frontier() const noexcept { return largest_; }
  [[nodiscard]] const TargetPartition& partition() const noexcept { return partition_; }
  // Terminated mass per partition cell so far.
  [[nodiscard]] const std::vector<Ratio>& law() const noexcept { return law_; }

 private:
  TargetPartition partition_;
  std::vector<Ratio> law_;
  std::vector<ExactCoinTracker> frontier_;
  Ratio overflow_;
  mpz_class max_frontier_;
  std::size_t largest_ = 0;
  std::size_t depth_ = 0;
};

struct StoppingProfile {
  std::vector<Ratio> overflow;  // overflow[m] = Pr(T > m)
  std::size_t n = 0;
  std::size_t target_alphabet = 0;
  Ratio tail_rate;              // p_max
  std::size_t largest_frontier = 0;

  [[nodiscard]] std::size_t m_max() const { return overflow.empty() ? 0 : overflow.size() - 1; }
  [[nodiscard]] Ratio boundary_count() const {
    return Ratio(partition_size(target_alphabet, n) - 1, mpz_class(1));
  }
  [[nodiscard]] Ratio tail_bound_at(std::size_t m) const { return boundary_count() * pow(tail_rate, m); }
};

inline StoppingProfile stopping_profile(const ProcessSpec& coin, const ProcessSpec& target, std::size_t n,
                                        std::size_t m_max, std::size_t cap = frontier_cap_from_env()) {
  FrontierAnalyzer fa(coin, target, n, cap);
  StoppingProfile p;
  p.n = n;
  p.target_alphabet = target.alphabet_size();
  p.tail_rate = coin.max_conditional();
  p.overflow.push_back(fa.overflow());
  for (std::size_t m = 1; m <= m_max; ++m) {
    fa.advance();
    p.overflow.push_back(fa.overflow());
  }
  p.largest_frontier = fa.largest_frontier();
  for (std::size_t m = 0; m <= m_max; ++m)
    if (p.overflow[m] > p.tail_bound_at(m)) throw std::logic_error("overflow exceeds geometric tail certificate");
  return p;
}

/// Certified bracket on E[T] = sum_{m >= 0} Pr(T > m).
inline std::pair<Ratio, Ratio> expected_stopping_time(const StoppingProfile& profile) {
  if (profile.tail_rate >= Ratio(1)) throw std::domain_error("no geometric tail certificate");
  Ratio lower;
  for (const auto& v : profile.overflow) lower += v;
  const Ratio tail = profile.boundary_count() * pow(profile.tail_rate, profile.m_max() + 1) /
                     (Ratio(1) - profile.tail_rate);
  return {lower, lower + tail};
}

using OutputLaw = std::map<Sequence, Ratio>;

struct PartialLaw {
  OutputLaw law;   // y^n -> Pr(phi(X^m) = y^n), all non-empty target cells
  Ratio deficit;   // Pr(T > m)
};

inline PartialLaw partial_law(const FrontierAnalyzer& fa) {
  PartialLaw out;
  const auto& cells = fa.partition().cells();
  for (std::size_t i = 0; i < cells.size(); ++i) out.law[cells[i].output] = fa.law()[i];
  out.deficit = fa.overflow();
  return out;
}

inline PartialLaw output_law_at(const ProcessSpec& coin, const ProcessSpec& target, std::size_t n, std::size_t m,
                                std::size_t cap = frontier_cap_from_env()) {
  FrontierAnalyzer fa(coin, target, n, cap);
  for (std::size_t i = 0; i < m; ++i) fa.advance();
  return partial_law(fa);
}

/// Exact P_{Y^n} over the non-empty cells.
inline OutputLaw target_law(const ProcessSpec& target, std::size_t n) {
  OutputLaw law;
  TargetPartition part(target, n);
  for (const auto& c : part.cells()) law[c.output] = c.interval.length();
  return law;
}

// ---------------------------------------------------------------------------
// Spectrum sets

struct SpectrumMass {
  std::size_t m = 0;
  Ratio threshold;
  Ratio mass_below;           // P{seq : P(seq) <= t}, the set S_m(lambda)
  Ratio mass_strictly_below;  // P{seq : P(seq) < t}; 1 minus this is P(T_m(tau))
  RealValue lambda_bits;      // -log2 t
};

inline constexpr std::size_t kDefaultSpectrumBudget = std::size_t{1} << 20;

/// Exact masses of {P(seq) <= t} and {P(seq) < t} over length-m sequences.
/// Continuations are merged when they share memory state and running
/// probability, which keeps i.i.d. and Markov enumerations polynomial.
inline SpectrumMass spectrum_mass(const ProcessSpec& model, std::size_t length, const Ratio& threshold,
                                  std::size_t budget = kDefaultSpectrumBudget) {
  if (!model.has_rational_conditionals()) throw IrrationalModelError();
  if (threshold.sign() <= 0) throw std::invalid_argument("spectrum threshold must be positive");
  struct Group {
    ProcessCursor cursor;
    Ratio count;  // number of merged sequences, as an exact multiplier
  };
  std::map<std::string, Group> level;
  level.emplace("", Group{ProcessCursor(model), Ratio(1)});
  for (std::size_t i = 0; i < length; ++i) {
    std::map<std::string, Group> next;
    for (const auto& [key, g] : level) {
      const auto pmf = g.cursor.pmf();
      for (Symbol x = 0; x < pmf.size(); ++x) {
        if (pmf[x].is_zero()) continue;
        ProcessCursor c = g.cursor;
        c.advance(x);
        std::string k = c.state_key() + "|" + c.prob().str();
        auto it = next.find(k);
        if (it == next.end())
          next.emplace(std::move(k), Group{std::move(c), g.count});
        else
          it->second.count += g.count;
      }
    }
    if (next.size() > budget) throw BudgetError("spectrum enumeration budget exceeded");
    level = std::move(next);
  }
  SpectrumMass out;
  out.m = length;
  out.threshold = threshold;
  for (const auto& [key, g] : level) {
    const Ratio mass = g.count * g.cursor.prob();
    if (g.cursor.prob() <= threshold) out.mass_below += mass;
    if (g.cursor.prob() < threshold) out.mass_strictly_below += mass;
  }
  const Enclosure lg = log2_enclosure(threshold, 128);
  RealValue l = RealValue::from(lg);
  out.lambda_bits = {-l.value, l.error};
  return out;
}

// ---------------------------------------------------------------------------
// Validity

/// Min-entropy evidence that S_m^c(lambda) eventually empties, for one threshold
/// t = 2^(-lambda). S_m^c(lambda) is empty exactly when the most likely length-m
/// sequence has probability <= t.
struct MinEntropyEvidence {
  Ratio threshold;
  std::optional<std::size_t> first_empty_m;  // first m with S_m^c empty
  bool never_empty = false;                  // certified for every m
  double witness_mass_lower = 0.0;           // lower bound on P(S_m^c) for all m when never_empty
  std::string note;
};

struct ValidityReport {
  bool passed = false;
  std::optional<Ratio> deficit;  // Pr(T > m_max) when exact analysis ran
  std::size_t m_max = 0;
  Ratio eps;
  std::vector<MinEntropyEvidence> evidence;
  std::string reason;
};

inline constexpr std::size_t kMinEntropySearchLimit = 100000;

inline MinEntropyEvidence min_entropy_evidence(const ProcessSpec& coin, const Ratio& threshold,
                                               std::size_t search_limit = kMinEntropySearchLimit) {
  MinEntropyEvidence ev;
  ev.threshold = threshold;
  if (const auto* k = coin.as<IidKind>()) {
    Ratio best;
    for (const auto& v : k->pmf)
      if (v > best) best = v;
    if (best == Ratio(1)) {
      ev.never_empty = true;
      ev.witness_mass_lower = 1.0;
      ev.note = "deterministic coin symbol";
      return ev;
    }
    Ratio p(1);
    for (std::size_t m = 0; m <= search_limit; ++m, p *= best)
      if (p <= threshold) {
        ev.first_empty_m = m;
        return ev;
      }
    ev.note = "search limit reached";
    return ev;
  }
  if (const auto* k = coin.as<NamedKind>()) {
    if (k->family == NamedFamily::quadratic) {
      // H_min(X^m) = sum 1/i^2 increases to pi^2/6 and never reaches it.
      BigFloat pi(256), limit_hi(256), limit_lo(256);
      mpfr_const_pi(pi.get(), MPFR_RNDU);
      mpfr_sqr(limit_hi.get(), pi.get(), MPFR_RNDU);
      mpfr_div_ui(limit_hi.get(), limit_hi.get(), 6, MPFR_RNDU);
      mpfr_const_pi(pi.get(), MPFR_RNDD);
      mpfr_sqr(limit_lo.get(), pi.get(), MPFR_RNDD);
      mpfr_div_ui(limit_lo.get(), limit_lo.get(), 6, MPFR_RNDD);
      const Enclosure lambda = log2_enclosure(threshold, 256);  // -lambda
      BigFloat neg_lambda_lo(256);
      mpfr_neg(neg_lambda_lo.get(), lambda.hi.get(), MPFR_RNDD);  // lower bound on lambda
      if (limit_hi < neg_lambda_lo) {
        BigFloat w(256);
        mpfr_neg(w.get(), limit_hi.get(), MPFR_RNDD);
        mpfr_exp2(w.get(), w.get(), MPFR_RNDD);
        ev.never_empty = true;
        ev.witness_mass_lower = w.to_double(MPFR_RNDD);
        ev.note = "all-ones prefix keeps probability above 2^(-pi^2/6) > threshold";
        return ev;
      }
    }
    // A double running sum screens out m far below the threshold; exact
    // sums are only formed near the crossing.
    const double lambda_d = -RealValue::from(log2_enclosure(threshold, 128)).value;
    double approx = 0.0;
    std::optional<Ratio> hmin;
    for (std::size_t m = 0; m <= search_limit; ++m) {
      if (m > 0) {
        const double i = static_cast<double>(m);
        approx += k->family == NamedFamily::harmonic ? 1.0 / i : 1.0 / (i * i);
        if (hmin) *hmin += named_exponent(k->family, m);
      }
      if (approx + 1e-6 < lambda_d) continue;
      if (!hmin) hmin = named_min_entropy(k->family, m);
      if (dyadic_leq_ratio(DyadicExp(*hmin), threshold)) {
        ev.first_empty_m = m;
        return ev;
      }
    }
    ev.note = "search limit reached";
    return ev;
  }
  ev.note = "min-entropy additivity unavailable for models with memory";
  return ev;
}

inline ValidityReport validity_check(const ProcessSpec& coin, const ProcessSpec& target, std::size_t n,
                                     std::size_t m_max, const Ratio& eps,
                                     const std::vector<Ratio>& lambda_thresholds = {},
                                     std::size_t cap = frontier_cap_from_env()) {
  ValidityReport r;
  r.m_max = m_max;
  r.eps = eps;
  if (coin.is_independent())
    for (const auto& t : lambda_thresholds) r.evidence.push_back(min_entropy_evidence(coin, t));
  if (coin.has_rational_conditionals()) {
    FrontierAnalyzer fa(coin, target, n, cap);
    for (std::size_t m = 0; m < m_max; ++m) fa.advance();
    r.deficit = fa.overflow();
    r.passed = fa.overflow() <= eps;
    r.reason = r.passed ? "deficit within tolerance" : "deficit exceeds tolerance";
    return r;
  }
  // Irrational coin: decide from the min-entropy growth condition alone.
  r.passed = !r.evidence.empty();
  for (const auto& ev : r.evidence) {
    if (ev.never_empty) {
      r.passed = false;
      r.reason = "coin randomness does not diverge: " + ev.note;
      return r;
    }
    if (!ev.first_empty_m) {
      r.passed = false;
      r.reason = "undetermined within search limit";
      return r;
    }
  }
  r.reason = r.passed ? "min-entropy diverges past every requested threshold" : "no thresholds supplied";
  return r;
}

// ---------------------------------------------------------------------------
// Fixed-length truncation

struct FLReport {
  std::size_t m = 0;
  Sequence fallback;
  OutputLaw approx_law;
  Ratio delta;
  Ratio overflow_at_m;
};

/// psi(x^m) = phi(x^m) if the algorithm has terminated, else the fallback.
inline FLReport fl_truncate(const ProcessSpec& coin, const ProcessSpec& target, std::size_t n, std::size_t m,
                            const Sequence& fallback, std::size_t cap = frontier_cap_from_env()) {
  if (fallback.size() != n) throw std::invalid_argument("fallback must have length n");
  for (Symbol b : fallback)
    if (b >= target.alphabet_size()) throw std::out_of_range("fallback symbol outside target alphabet");
  const PartialLaw pl = output_law_at(coin, target, n, m, cap);
  FLReport r;
  r.m = m;
  r.fallback = fallback;
  r.approx_law = pl.law;
  r.approx_law[fallback] += pl.deficit;
  r.overflow_at_m = pl.deficit;
  const OutputLaw truth = target_law(target, n);
  Ratio sum;
  for (const auto& [y, p] : r.approx_law) {
    auto it = truth.find(y);
    sum += abs(p - (it == truth.end() ? Ratio(0) : it->second));
  }
  for (const auto& [y, p] : truth)
    if (!r.approx_law.count(y)) sum += p;
  r.delta = sum / Ratio(2);
  if (r.delta > r.overflow_at_m) throw std::logic_error("approximation error exceeds overflow probability");
  return r;
}

}  // namespace exactrng
