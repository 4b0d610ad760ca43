#pragma once

// Finite-alphabet process models with exact conditional laws.
//
// Symbols are 0-based internally. Text formats (configs, transcripts, tree
// exports) use the 1-based alphabet {1, ..., M}.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "exactrng/bigfloat.hpp"
#include "exactrng/ratio.hpp"

namespace exactrng {

using Symbol = std::uint32_t;
using Sequence = std::vector<Symbol>;

/// Raised when an exact operation is asked to condition on a probability-zero prefix.
class NullEventError : public std::domain_error {
 public:
  NullEventError() : std::domain_error("conditioning on null event") {}
};

/// Raised when an operation needs rational conditionals and the model has irrational ones.
class IrrationalModelError : public std::domain_error {
 public:
  IrrationalModelError() : std::domain_error("exact analysis requires rational conditionals") {}
};

enum class NamedFamily { harmonic, quadratic };

inline const char* family_name(NamedFamily f) { return f == NamedFamily::harmonic ? "harmonic" : "quadratic"; }

class ProcessSpec;

struct IidKind {
  std::vector<Ratio> pmf;
};
struct MarkovKind {
  std::vector<std::vector<Ratio>> transition;  // transition[from][to]
  std::vector<Ratio> initial;
};
struct MixtureKind {
  std::vector<Ratio> weights;
  std::vector<ProcessSpec> components;
};
// Binary non-stationary Bernoulli process with P(X_i = first symbol) = 2^(-1/i) or 2^(-1/i^2).
struct NamedKind {
  NamedFamily family;
};

namespace detail {

inline void check_pmf(const std::vector<Ratio>& p, const char* what) {
  if (p.empty()) throw std::invalid_argument(std::string(what) + ": empty distribution");
  Ratio sum;
  for (const auto& v : p) {
    if (v.sign() < 0 || v > Ratio(1))
      throw std::invalid_argument(std::string(what) + ": entry " + v.str() + " outside [0,1]");
    sum += v;
  }
  if (sum != Ratio(1))
    throw std::invalid_argument(std::string(what) + ": entries sum to " + sum.str() + ", not 1");
}

}  // namespace detail

/// Immutable process model. Copies are cheap (shared representation).
class ProcessSpec {
 public:
  using Kind = std::variant<IidKind, MarkovKind, MixtureKind, NamedKind>;

  static ProcessSpec iid(std::vector<Ratio> pmf) {
    detail::check_pmf(pmf, "iid pmf");
    const auto m = pmf.size();
    return ProcessSpec(IidKind{std::move(pmf)}, m);
  }

  static ProcessSpec markov(std::vector<std::vector<Ratio>> transition, std::vector<Ratio> initial) {
    const auto m = transition.size();
    if (m == 0) throw std::invalid_argument("markov: empty transition matrix");
    for (std::size_t i = 0; i < m; ++i) {
      if (transition[i].size() != m)
        throw std::invalid_argument("markov: transition row " + std::to_string(i + 1) + " has wrong length");
      detail::check_pmf(transition[i], ("markov transition row " + std::to_string(i + 1)).c_str());
    }
    if (initial.size() != m) throw std::invalid_argument("markov: initial distribution has wrong length");
    detail::check_pmf(initial, "markov initial");
    return ProcessSpec(MarkovKind{std::move(transition), std::move(initial)}, m);
  }

  static ProcessSpec mixture(std::vector<Ratio> weights, std::vector<ProcessSpec> components) {
    if (weights.size() != components.size() || components.empty())
      throw std::invalid_argument("mixture: weights and components differ in length");
    detail::check_pmf(weights, "mixture weights");
    const auto m = components.front().alphabet_size();
    for (const auto& c : components) {
      if (c.alphabet_size() != m) throw std::invalid_argument("mixture: components must share one alphabet");
      if (!c.has_rational_conditionals())
        throw std::invalid_argument("mixture: components must have rational conditionals");
    }
    return ProcessSpec(MixtureKind{std::move(weights), std::move(components)}, m);
  }

  static ProcessSpec named(NamedFamily family) { return ProcessSpec(NamedKind{family}, 2); }

  [[nodiscard]] std::size_t alphabet_size() const noexcept { return alphabet_; }
  [[nodiscard]] const Kind& kind() const noexcept { return *kind_; }

  template <class T>
  [[nodiscard]] const T* as() const noexcept { return std::get_if<T>(kind_.get()); }

  [[nodiscard]] bool has_rational_conditionals() const {
    if (as<NamedKind>()) return false;
    if (const auto* mx = as<MixtureKind>())
      for (const auto& c : mx->components)
        if (!c.has_rational_conditionals()) return false;
    return true;
  }

  [[nodiscard]] bool is_independent() const { return as<IidKind>() || as<NamedKind>(); }

  [[nodiscard]] std::string kind_name() const {
    if (as<IidKind>()) return "iid";
    if (as<MarkovKind>()) return "markov";
    if (as<MixtureKind>()) return "mixture";
    return "named";
  }

  /// Largest conditional probability any prefix can assign to a single next symbol.
  /// Posterior mixtures stay in the convex hull of their components, so the
  /// component maximum bounds them.
  [[nodiscard]] Ratio max_conditional() const {
    Ratio best;
    auto upd = [&best](const std::vector<Ratio>& row) {
      for (const auto& v : row)
        if (v > best) best = v;
    };
    if (const auto* k = as<IidKind>()) upd(k->pmf);
    if (const auto* k = as<MarkovKind>()) {
      upd(k->initial);
      for (const auto& r : k->transition) upd(r);
    }
    if (const auto* k = as<MixtureKind>())
      for (const auto& c : k->components) {
        const Ratio r = c.max_conditional();
        if (r > best) best = r;
      }
    if (as<NamedKind>()) throw IrrationalModelError();
    return best;
  }

 private:
  ProcessSpec(Kind k, std::size_t alphabet)
      : kind_(std::make_shared<const Kind>(std::move(k))), alphabet_(alphabet) {}

  std::shared_ptr<const Kind> kind_;
  std::size_t alphabet_ = 0;
};

/// Two-point law whose first symbol has probability 2^(-exponent).
struct DyadicBernoulli {
  DyadicExp first;
};

/// Next-symbol law: an exact rational pmf or an irrational dyadic Bernoulli.
using SymbolLaw = std::variant<std::vector<Ratio>, DyadicBernoulli>;

inline Ratio named_exponent(NamedFamily f, std::size_t i) {
  const long ii = static_cast<long>(i);
  return f == NamedFamily::harmonic ? Ratio(1, ii) : Ratio(1, ii * ii);
}

/// Walks a model forward one symbol at a time, tracking the exact prefix
/// probability and whatever memory the model needs.
class ProcessCursor {
 public:
  explicit ProcessCursor(ProcessSpec model) : model_(std::move(model)), prob_(1) {
    if (const auto* mx = model_.as<MixtureKind>()) {
      joint_ = mx->weights;
      for (const auto& c : mx->components) parts_.emplace_back(c);
    }
  }

  [[nodiscard]] const ProcessSpec& model() const noexcept { return model_; }
  [[nodiscard]] std::size_t length() const noexcept { return length_; }
  // Exact probability of the prefix consumed so far (rational models only).
  [[nodiscard]] const Ratio& prob() const noexcept { return prob_; }

  [[nodiscard]] SymbolLaw law() const {
    if (const auto* nk = model_.as<NamedKind>())
      return DyadicBernoulli{DyadicExp(named_exponent(nk->family, length_ + 1))};
    return pmf();
  }

  [[nodiscard]] std::vector<Ratio> pmf() const {
    if (prob_.is_zero()) throw NullEventError();
    const auto& kind = model_.kind();
    if (const auto* k = std::get_if<IidKind>(&kind)) return k->pmf;
    if (const auto* k = std::get_if<MarkovKind>(&kind))
      return length_ == 0 ? k->initial : k->transition[last_];
    if (std::holds_alternative<MixtureKind>(kind)) {
      std::vector<Ratio> out(model_.alphabet_size());
      Ratio total;
      for (std::size_t c = 0; c < parts_.size(); ++c) {
        if (joint_[c].is_zero()) continue;
        total += joint_[c];
        const auto p = parts_[c].pmf();
        for (std::size_t x = 0; x < out.size(); ++x) out[x] += joint_[c] * p[x];
      }
      for (auto& v : out) v /= total;
      return out;
    }
    throw IrrationalModelError();
  }

  // Consumes symbol x. Throws NullEventError if x has conditional probability zero.
  void advance(Symbol x) {
    if (x >= model_.alphabet_size()) throw std::out_of_range("symbol outside alphabet");
    if (model_.as<NamedKind>()) {
      ++length_;
      return;
    }
    if (model_.as<MixtureKind>()) {
      Ratio total;
      for (std::size_t c = 0; c < parts_.size(); ++c) {
        if (joint_[c].is_zero()) continue;
        const auto p = parts_[c].pmf();
        joint_[c] *= p[x];
        if (!joint_[c].is_zero()) parts_[c].advance(x);
        total += joint_[c];
      }
      if (total.is_zero()) throw NullEventError();
      prob_ = total;
    } else {
      const auto p = pmf();
      if (p[x].is_zero()) throw NullEventError();
      prob_ *= p[x];
      if (model_.as<MarkovKind>()) last_ = x;
    }
    ++length_;
  }

  // Identifies the memory state (not the prefix probability). Two cursors with
  // equal keys have identical future conditional laws up to the factor prob().
  [[nodiscard]] std::string state_key() const {
    if (model_.as<IidKind>()) return "i";
    if (model_.as<NamedKind>()) return "t" + std::to_string(length_);
    if (model_.as<MarkovKind>()) return length_ == 0 ? "m-" : "m" + std::to_string(last_);
    // Mixture: posterior weights plus component states.
    std::string key = "x(";
    for (std::size_t c = 0; c < parts_.size(); ++c) {
      const Ratio post = joint_[c] / prob_;
      key += post.str();
      if (!post.is_zero()) key += ":" + parts_[c].state_key();
      key += ";";
    }
    return key + ")";
  }

 private:
  ProcessSpec model_;
  std::size_t length_ = 0;
  Ratio prob_;
  Symbol last_ = 0;
  std::vector<Ratio> joint_;
  std::vector<ProcessCursor> parts_;
};

/// Exact conditional pmf of the next symbol after `prefix`.
inline std::vector<Ratio> cond_pmf(const ProcessSpec& model, const Sequence& prefix) {
  ProcessCursor cur(model);
  for (Symbol x : prefix) cur.advance(x);
  return cur.pmf();
}

/// Like cond_pmf but also covers the irrational named families.
inline SymbolLaw cond_law(const ProcessSpec& model, const Sequence& prefix) {
  ProcessCursor cur(model);
  for (Symbol x : prefix) cur.advance(x);
  return cur.law();
}

/// Exact probability of `seq` (zero for null sequences).
inline Ratio seq_prob(const ProcessSpec& model, const Sequence& seq) {
  ProcessCursor cur(model);
  for (Symbol x : seq) {
    if (x >= model.alphabet_size()) throw std::out_of_range("symbol outside alphabet");
    const auto p = cur.pmf();
    if (p[x].is_zero()) return Ratio(0);
    cur.advance(x);
  }
  return cur.prob();
}

/// The largest probability of any length-m sequence of an independent process.
using ExactProb = std::variant<Ratio, DyadicExp>;

inline Ratio named_min_entropy(NamedFamily f, std::size_t m) {
  Ratio sum;
  for (std::size_t i = 1; i <= m; ++i) sum += named_exponent(f, i);
  return sum;
}

inline ExactProb max_sequence_probability(const ProcessSpec& model, std::size_t m) {
  if (const auto* k = model.as<IidKind>()) {
    Ratio best;
    for (const auto& v : k->pmf)
      if (v > best) best = v;
    return pow(best, m);
  }
  // 2^(-e) >= 1/2 for e <= 1, so the all-first-symbol sequence is the mode.
  if (const auto* k = model.as<NamedKind>()) return DyadicExp(named_min_entropy(k->family, m));
  throw std::domain_error("min-entropy additivity unavailable");
}

/// H_min(X^m) in bits, exact. Available for named families and for i.i.d.
/// models whose largest mass is a power of two.
inline Ratio min_entropy(const ProcessSpec& model, std::size_t m) {
  if (const auto* k = model.as<NamedKind>()) return named_min_entropy(k->family, m);
  if (const auto* k = model.as<IidKind>()) {
    Ratio best;
    for (const auto& v : k->pmf)
      if (v > best) best = v;
    const mpz_class den = best.den();
    if (best.num() == 1 && mpz_popcount(den.get_mpz_t()) == 1)
      return Ratio(static_cast<long>(mpz_sizeinbase(den.get_mpz_t(), 2) - 1) * static_cast<long>(m));
    throw std::domain_error("min-entropy is irrational for this pmf; use max_sequence_probability");
  }
  throw std::domain_error("min-entropy additivity unavailable");
}

}  // namespace exactrng
