#pragma once

// The sequential interval algorithm.
//
// The coin prefix s owns the interval I_s, refined by the cumulative
// conditional coin law; the emitted target prefix t owns J_t, refined the
// same way by the target law. Whenever I_s fits inside one child J_{ty}, the
// symbol y is emitted; a coin symbol is consumed only when no child fits.
// The loop invariant is I_s inside J_t.
//
// Coin-side bookkeeping is delegated to a tracker so that the same driver
// runs on exact rational intervals and on certified MPFR enclosures (needed
// for the named Bernoulli families whose endpoints are irrational).

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "exactrng/bigfloat.hpp"
#include "exactrng/process.hpp"
#include "exactrng/ratio.hpp"

namespace exactrng {

class InvalidCoinError : public std::domain_error {
 public:
  InvalidCoinError() : std::domain_error("invalid coin realization") {}
};

class FrontierCapError : public std::runtime_error {
 public:
  FrontierCapError() : std::runtime_error("frontier cap exceeded") {}
};

inline constexpr std::size_t kDefaultDepthLimit = 64;
inline constexpr std::size_t kDefaultFrontierCap = std::size_t{1} << 22;

// EXACTRNG_FRONTIER_CAP overrides the default cap when set to a positive integer.
inline std::size_t frontier_cap_from_env() {
  if (const char* env = std::getenv("EXACTRNG_FRONTIER_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return kDefaultFrontierCap;
}

/// Prefix sums 0 = c_0 <= c_1 <= ... <= c_M = 1 of a pmf.
inline std::vector<Ratio> cumulative(const std::vector<Ratio>& pmf) {
  std::vector<Ratio> c(pmf.size() + 1);
  for (std::size_t i = 0; i < pmf.size(); ++i) c[i + 1] = c[i] + pmf[i];
  return c;
}

/// Coin prefix s, target prefix t and both intervals.
struct GeneratorState {
  UnitInterval coin_interval;
  UnitInterval target_interval;
  Sequence coin_prefix;
  Sequence emitted;
  std::size_t n = 0;

  [[nodiscard]] std::size_t coin_count() const noexcept { return coin_prefix.size(); }
};

/// Replaces I_s by I_{sx} using the conditional pmf of the next coin symbol.
inline GeneratorState refine_coin(GeneratorState state, Symbol x, const std::vector<Ratio>& pmf) {
  if (x >= pmf.size()) throw std::out_of_range("coin symbol outside alphabet");
  const auto c = cumulative(pmf);
  state.coin_interval = state.coin_interval.sub(c[x], c[x + 1]);
  state.coin_prefix.push_back(x);
  return state;
}

/// Exact rational coin interval.
class ExactCoinTracker {
 public:
  explicit ExactCoinTracker(ProcessSpec coin) : cursor_(std::move(coin)) {
    if (!cursor_.model().has_rational_conditionals()) throw IrrationalModelError();
  }

  void advance(Symbol x) {
    if (x >= cursor_.model().alphabet_size()) throw std::out_of_range("coin symbol outside alphabet");
    const auto pmf = cursor_.pmf();
    if (pmf[x].is_zero()) throw InvalidCoinError();
    const auto c = cumulative(pmf);
    interval_ = interval_.sub(c[x], c[x + 1]);
    cursor_.advance(x);
    prefix_.push_back(x);
  }

  [[nodiscard]] bool inside(const UnitInterval& cell) const { return interval_contains(cell, interval_); }
  [[nodiscard]] SymbolLaw law() const { return cursor_.law(); }
  [[nodiscard]] std::vector<Ratio> pmf() const { return cursor_.pmf(); }
  [[nodiscard]] const UnitInterval& interval() const noexcept { return interval_; }
  [[nodiscard]] const Sequence& prefix() const noexcept { return prefix_; }
  [[nodiscard]] std::size_t count() const noexcept { return prefix_.size(); }

 private:
  ProcessCursor cursor_;
  UnitInterval interval_;
  Sequence prefix_;
};

/// Coin interval held as outward-rounded MPFR enclosures of both endpoints.
/// Undecided containment tests recompute the whole transcript at doubled
/// precision; endpoints that are irrational never tie with a rational cell
/// boundary, so the escalation terminates.
class EnclosedCoinTracker {
 public:
  explicit EnclosedCoinTracker(ProcessSpec coin, mpfr_prec_t prec = 128, mpfr_prec_t max_prec = 1 << 16)
      : cursor_(std::move(coin)), prec_(prec), max_prec_(max_prec), lo_(point(0, prec)), hi_(point(1, prec)) {}

  void advance(Symbol x) {
    if (x >= cursor_.model().alphabet_size()) throw std::out_of_range("coin symbol outside alphabet");
    const SymbolLaw law = cursor_.law();
    if (const auto* pmf = std::get_if<std::vector<Ratio>>(&law))
      if ((*pmf)[x].is_zero()) throw InvalidCoinError();
    apply(law, x, prec_);
    cursor_.advance(x);
    prefix_.push_back(x);
  }

  [[nodiscard]] bool inside(const UnitInterval& cell) {
    for (;;) {
      const Enclosure a = Enclosure::of(cell.lo(), prec_);
      const Enclosure b = Enclosure::of(cell.hi(), prec_);
      if (a.hi <= lo_.lo && hi_.hi <= b.lo) return true;
      if (lo_.hi < a.lo || b.hi < hi_.lo) return false;
      if (prec_ >= max_prec_) throw std::runtime_error("containment undecidable at precision cap");
      prec_ *= 2;
      recompute();
    }
  }

  [[nodiscard]] SymbolLaw law() const { return cursor_.law(); }
  [[nodiscard]] const Sequence& prefix() const noexcept { return prefix_; }
  [[nodiscard]] std::size_t count() const noexcept { return prefix_.size(); }
  [[nodiscard]] mpfr_prec_t precision() const noexcept { return prec_; }
  [[nodiscard]] const Enclosure& lo() const noexcept { return lo_; }
  [[nodiscard]] const Enclosure& hi() const noexcept { return hi_; }

 private:
  static Enclosure point(long v, mpfr_prec_t prec) { return Enclosure::of(Ratio(v), prec); }

  // Enclosures of the cumulative masses c_x and c_{x+1}, plus whether they are exactly 0 / 1.
  struct CumBounds {
    Enclosure lo, hi;
    bool lo_is_zero, hi_is_one;
  };
  static CumBounds cum_bounds(const SymbolLaw& law, Symbol x, mpfr_prec_t prec) {
    if (const auto* pmf = std::get_if<std::vector<Ratio>>(&law)) {
      const auto c = cumulative(*pmf);
      return {Enclosure::of(c[x], prec), Enclosure::of(c[x + 1], prec), c[x].is_zero(), c[x + 1] == Ratio(1)};
    }
    const Enclosure p = std::get<DyadicBernoulli>(law).first.enclose(prec);
    if (x == 0) return {point(0, prec), p, true, false};
    return {p, point(1, prec), false, true};
  }

  void apply(const SymbolLaw& law, Symbol x, mpfr_prec_t prec) {
    const CumBounds c = cum_bounds(law, x, prec);
    BigFloat len_lo = sub(hi_.lo, lo_.hi, MPFR_RNDD);
    if (len_lo.sign() < 0) len_lo = BigFloat(prec);
    const BigFloat len_hi = sub(hi_.hi, lo_.lo, MPFR_RNDU);
    // Endpoints that do not move keep their enclosure, so exact endpoints stay exact.
    Enclosure nlo = c.lo_is_zero ? lo_
                                 : Enclosure{add(lo_.lo, mul(len_lo, c.lo.lo, MPFR_RNDD), MPFR_RNDD),
                                             add(lo_.hi, mul(len_hi, c.lo.hi, MPFR_RNDU), MPFR_RNDU)};
    Enclosure nhi = c.hi_is_one ? hi_
                                : Enclosure{add(lo_.lo, mul(len_lo, c.hi.lo, MPFR_RNDD), MPFR_RNDD),
                                            add(lo_.hi, mul(len_hi, c.hi.hi, MPFR_RNDU), MPFR_RNDU)};
    lo_ = std::move(nlo);
    hi_ = std::move(nhi);
  }

  void recompute() {
    ProcessCursor replay(cursor_.model());
    lo_ = point(0, prec_);
    hi_ = point(1, prec_);
    for (Symbol x : prefix_) {
      apply(replay.law(), x, prec_);
      replay.advance(x);
    }
  }

  ProcessCursor cursor_;
  mpfr_prec_t prec_;
  mpfr_prec_t max_prec_;
  Enclosure lo_;
  Enclosure hi_;
  Sequence prefix_;
};

/// Outcome of one call to step().
struct StepResult {
  enum class Kind { emitted, need_more_coins, done };
  Kind kind = Kind::need_more_coins;
  Sequence symbols;             // symbols emitted during this call
  Sequence output;              // complete y^n when done
  std::size_t stopping_time = 0;
};

/// Pull-style coin source; returns nullopt when exhausted.
using CoinStream = std::function<std::optional<Symbol>()>;

inline CoinStream stream_from(const Sequence& coins) {
  return [&coins, i = std::size_t{0}]() mutable -> std::optional<Symbol> {
    if (i >= coins.size()) return std::nullopt;
    return coins[i++];
  };
}

template <class Tracker>
class BasicIntervalGenerator {
 public:
  BasicIntervalGenerator(Tracker coin, ProcessSpec target, std::size_t n)
      : coin_(std::move(coin)), target_(std::move(target)), n_(n) {
    if (!target_.model().has_rational_conditionals()) throw IrrationalModelError();
  }

  /// Emits every target symbol already determined by the current coin prefix.
  Sequence drain() {
    Sequence out;
    while (emitted_.size() < n_) {
      const auto q = target_.pmf();
      const auto c = cumulative(q);
      bool hit = false;
      for (Symbol y = 0; y < q.size(); ++y) {
        if (q[y].is_zero()) continue;
        UnitInterval cell = target_interval_.sub(c[y], c[y + 1]);
        if (coin_.inside(cell)) {
          target_interval_ = std::move(cell);
          target_.advance(y);
          emitted_.push_back(y);
          out.push_back(y);
          hit = true;
          break;
        }
      }
      if (!hit) break;
    }
    return out;
  }

  void feed(Symbol x) {
    if (done()) throw std::logic_error("generator already terminated");
    coin_.advance(x);
  }

  StepResult step(const CoinStream& next) {
    StepResult r;
    for (;;) {
      auto em = drain();
      r.symbols.insert(r.symbols.end(), em.begin(), em.end());
      if (done()) {
        r.kind = StepResult::Kind::done;
        r.output = emitted_;
        r.stopping_time = coin_.count();
        return r;
      }
      if (!r.symbols.empty()) {
        r.kind = StepResult::Kind::emitted;
        return r;
      }
      const auto x = next();
      if (!x) {
        r.kind = StepResult::Kind::need_more_coins;
        return r;
      }
      feed(*x);
    }
  }

  [[nodiscard]] bool done() const noexcept { return emitted_.size() == n_; }
  [[nodiscard]] std::size_t n() const noexcept { return n_; }
  [[nodiscard]] const Sequence& emitted() const noexcept { return emitted_; }
  [[nodiscard]] const UnitInterval& target_interval() const noexcept { return target_interval_; }
  [[nodiscard]] const Tracker& coin() const noexcept { return coin_; }
  [[nodiscard]] Tracker& coin() noexcept { return coin_; }

 private:
  Tracker coin_;
  ProcessCursor target_;
  std::size_t n_;
  UnitInterval target_interval_;
  Sequence emitted_;
};

using IntervalGenerator = BasicIntervalGenerator<ExactCoinTracker>;
using EnclosedIntervalGenerator = BasicIntervalGenerator<EnclosedCoinTracker>;

inline IntervalGenerator make_generator(const ProcessSpec& coin, const ProcessSpec& target, std::size_t n) {
  return IntervalGenerator(ExactCoinTracker(coin), target, n);
}

inline GeneratorState state_of(const IntervalGenerator& g) {
  return GeneratorState{g.coin().interval(), g.target_interval(), g.coin().prefix(), g.emitted(), g.n()};
}

/// One coin symbol consumed, with the target symbols it released.
struct TranscriptEntry {
  std::optional<Symbol> coin;  // nullopt for emissions before any coin symbol
  Sequence emitted;
};

struct GenerationResult {
  bool complete = false;
  Sequence output;
  std::size_t stopping_time = 0;
  std::vector<TranscriptEntry> transcript;
};

/// Runs the generator over a fixed coin sequence.
template <class Tracker>
GenerationResult run_generator(BasicIntervalGenerator<Tracker>& g, const CoinStream& next) {
  GenerationResult res;
  auto em = g.drain();
  if (!em.empty()) res.transcript.push_back({std::nullopt, em});
  while (!g.done()) {
    const auto x = next();
    if (!x) break;
    g.feed(*x);
    res.transcript.push_back({*x, g.drain()});
  }
  res.complete = g.done();
  res.output = g.emitted();
  res.stopping_time = g.coin().count();
  return res;
}

inline GenerationResult generate(const ProcessSpec& coin, const ProcessSpec& target, std::size_t n,
                                 const Sequence& coins) {
  auto g = make_generator(coin, target, n);
  return run_generator(g, stream_from(coins));
}

/// Step-level entry point over an exact generator.
inline StepResult step_generate(IntervalGenerator& g, const CoinStream& next) { return g.step(next); }

// ---------------------------------------------------------------------------
// Algorithm tree

enum class NodeStatus { internal, terminal, unresolved, null };

inline char status_flag(NodeStatus s) {
  switch (s) {
    case NodeStatus::internal: return 'I';
    case NodeStatus::terminal: return 'T';
    case NodeStatus::unresolved: return 'U';
    case NodeStatus::null: return 'Z';
  }
  return '?';
}

struct TreeNode {
  std::size_t depth = 0;
  Sequence path;      // coin symbols from the root
  Sequence emitted;   // target symbols released on arrival at this node
  NodeStatus status = NodeStatus::internal;
  Ratio prob;         // P_{X^depth}(path)
  std::vector<std::size_t> children;  // M entries for internal nodes
};

/// Full M-ary tree of the interval algorithm, expanded breadth-first. Null
/// nodes are zero-probability coin branches; unresolved nodes were cut by
/// the depth limit.
class AlgorithmTree {
 public:
  AlgorithmTree(std::size_t coin_alphabet, std::size_t n, std::size_t depth_limit)
      : coin_alphabet_(coin_alphabet), n_(n), depth_limit_(depth_limit) {}

  [[nodiscard]] const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  [[nodiscard]] std::size_t coin_alphabet() const noexcept { return coin_alphabet_; }
  [[nodiscard]] std::size_t n() const noexcept { return n_; }
  [[nodiscard]] std::size_t depth_limit() const noexcept { return depth_limit_; }

  std::size_t add(TreeNode node) {
    nodes_.push_back(std::move(node));
    return nodes_.size() - 1;
  }
  TreeNode& at(std::size_t i) { return nodes_.at(i); }

  /// Full output sequence of a terminal node (labels concatenated along its path).
  [[nodiscard]] Sequence output_of(const Sequence& path) const {
    Sequence out;
    std::size_t cur = 0;
    out.insert(out.end(), nodes_[0].emitted.begin(), nodes_[0].emitted.end());
    for (Symbol x : path) {
      cur = nodes_[cur].children.at(x);
      out.insert(out.end(), nodes_[cur].emitted.begin(), nodes_[cur].emitted.end());
    }
    return out;
  }

  [[nodiscard]] Ratio mass(NodeStatus s) const {
    Ratio m;
    for (const auto& nd : nodes_)
      if (nd.status == s) m += nd.prob;
    return m;
  }
  [[nodiscard]] Ratio terminal_mass() const { return mass(NodeStatus::terminal); }
  [[nodiscard]] Ratio unresolved_mass() const { return mass(NodeStatus::unresolved); }

  /// Terminal mass per output, restricted to leaves at depth <= m.
  [[nodiscard]] std::map<Sequence, Ratio> output_law(std::size_t m) const {
    std::map<Sequence, Ratio> law;
    for (const auto& nd : nodes_)
      if (nd.status == NodeStatus::terminal && nd.depth <= m) law[output_of(nd.path)] += nd.prob;
    return law;
  }

  /// Unresolved mass as seen at depth m: nodes that are still undecided after m coins.
  [[nodiscard]] Ratio unresolved_at(std::size_t m) const {
    Ratio r;
    for (const auto& nd : nodes_) {
      if (nd.depth == m && (nd.status == NodeStatus::internal || nd.status == NodeStatus::unresolved)) r += nd.prob;
    }
    return r;
  }

 private:
  std::size_t coin_alphabet_;
  std::size_t n_;
  std::size_t depth_limit_;
  std::vector<TreeNode> nodes_;
};

inline std::string symbols_text(const Sequence& s, const char* empty = "-") {
  if (s.empty()) return empty;
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(s[i] + 1);
  }
  return out;
}

/// Line-oriented export, one node per line in breadth-first order:
/// depth, path, emitted labels, flag (I/T/U/Z), probability.
inline std::string export_tree(const AlgorithmTree& tree) {
  std::ostringstream os;
  os << "# exactrng-tree v1 coin_alphabet=" << tree.coin_alphabet() << " n=" << tree.n()
     << " depth_limit=" << tree.depth_limit() << "\n";
  for (const auto& nd : tree.nodes())
    os << nd.depth << '\t' << symbols_text(nd.path) << '\t' << symbols_text(nd.emitted) << '\t'
       << status_flag(nd.status) << '\t' << nd.prob.str() << '\n';
  return os.str();
}

inline AlgorithmTree build_tree(const ProcessSpec& coin, const ProcessSpec& target, std::size_t n,
                                std::size_t depth_limit = kDefaultDepthLimit,
                                std::size_t frontier_cap = frontier_cap_from_env()) {
  if (!coin.has_rational_conditionals()) throw IrrationalModelError();
  AlgorithmTree tree(coin.alphabet_size(), n, depth_limit);

  struct Live {
    std::size_t node;
    IntervalGenerator gen;
  };
  IntervalGenerator root_gen = make_generator(coin, target, n);
  TreeNode root;
  root.emitted = root_gen.drain();
  root.prob = Ratio(1);
  root.status = root_gen.done() ? NodeStatus::terminal
                                : (depth_limit == 0 ? NodeStatus::unresolved : NodeStatus::internal);
  const bool expand_root = root.status == NodeStatus::internal;
  tree.add(std::move(root));

  std::vector<Live> level;
  if (expand_root) level.push_back({0, std::move(root_gen)});
  for (std::size_t depth = 0; !level.empty(); ++depth) {
    if (level.size() > frontier_cap) throw FrontierCapError();
    std::vector<Live> next;
    for (auto& live : level) {
      const auto pmf = live.gen.coin().pmf();
      const Sequence path = tree.nodes()[live.node].path;
      std::vector<std::size_t> kids;
      for (Symbol x = 0; x < pmf.size(); ++x) {
        TreeNode child;
        child.depth = depth + 1;
        child.path = path;
        child.path.push_back(x);
        child.prob = tree.nodes()[live.node].prob * pmf[x];
        if (pmf[x].is_zero()) {
          child.status = NodeStatus::null;
          kids.push_back(tree.add(std::move(child)));
          continue;
        }
        IntervalGenerator g = live.gen;
        g.feed(x);
        child.emitted = g.drain();
        if (g.done()) {
          child.status = NodeStatus::terminal;
          kids.push_back(tree.add(std::move(child)));
        } else if (depth + 1 >= depth_limit) {
          child.status = NodeStatus::unresolved;
          kids.push_back(tree.add(std::move(child)));
        } else {
          child.status = NodeStatus::internal;
          const auto idx = tree.add(std::move(child));
          kids.push_back(idx);
          next.push_back({idx, std::move(g)});
        }
      }
      tree.at(live.node).children = std::move(kids);
    }
    level = std::move(next);
  }
  return tree;
}

}  // namespace exactrng
