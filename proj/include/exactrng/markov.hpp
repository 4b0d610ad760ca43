#pragma once

// Markov-chain structure: stationary laws, entropy rates, closed-class
// decomposition and the spectral summaries (sup / inf / average entropy rate)
// that drive the asymptotic rate formulas.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "exactrng/bigfloat.hpp"
#include "exactrng/process.hpp"
#include "exactrng/ratio.hpp"

namespace exactrng {

using Matrix = std::vector<std::vector<Ratio>>;

/// A real number known to lie in [value - error, value + error].
struct RealValue {
  double value = 0.0;
  double error = 0.0;

  [[nodiscard]] double lower() const { return std::nextafter(value - error, -INFINITY); }
  [[nodiscard]] double upper() const { return std::nextafter(value + error, INFINITY); }

  static RealValue exact(double v) { return {v, 0.0}; }
  static RealValue from(const Enclosure& e) {
    const double lo = e.lo.to_double(MPFR_RNDD);
    const double hi = e.hi.to_double(MPFR_RNDU);
    const double mid = 0.5 * (lo + hi);
    return {mid, std::max(mid - lo, hi - mid)};
  }
  static RealValue from_bounds(double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    return {mid, std::nextafter(std::max(mid - lo, hi - mid), INFINITY)};
  }
};

// Quotient a / b with b > 0, rounded outward.
inline RealValue divide(const RealValue& a, const RealValue& b) {
  const double blo = b.lower();
  const double bhi = b.upper();
  if (!(blo > 0.0)) throw std::domain_error("divisor interval touches zero");
  const double cands[] = {a.lower() / blo, a.lower() / bhi, a.upper() / blo, a.upper() / bhi};
  const double lo = *std::min_element(std::begin(cands), std::end(cands));
  const double hi = *std::max_element(std::begin(cands), std::end(cands));
  return RealValue::from_bounds(std::nextafter(lo, -INFINITY), std::nextafter(hi, INFINITY));
}

namespace detail {

// reach[i][j]: j reachable from i in >= 0 steps along positive transitions.
inline std::vector<std::vector<bool>> reachability(const Matrix& w) {
  const auto k = w.size();
  std::vector<std::vector<bool>> r(k, std::vector<bool>(k, false));
  for (std::size_t i = 0; i < k; ++i) {
    r[i][i] = true;
    for (std::size_t j = 0; j < k; ++j)
      if (!w[i][j].is_zero()) r[i][j] = true;
  }
  for (std::size_t m = 0; m < k; ++m)
    for (std::size_t i = 0; i < k; ++i)
      if (r[i][m])
        for (std::size_t j = 0; j < k; ++j)
          if (r[m][j]) r[i][j] = true;
  return r;
}

inline void check_square_stochastic(const Matrix& w) {
  for (const auto& row : w) {
    if (row.size() != w.size()) throw std::invalid_argument("transition matrix must be square");
    check_pmf(row, "transition row");
  }
}

}  // namespace detail

/// Strong connectivity of the positive-transition digraph.
inline bool is_irreducible(const Matrix& w) {
  const auto r = detail::reachability(w);
  for (const auto& row : r)
    for (bool b : row)
      if (!b) return false;
  return true;
}

/// Exact stationary law of an irreducible chain, by rational elimination.
inline std::vector<Ratio> stationary_distribution(const Matrix& w) {
  detail::check_square_stochastic(w);
  if (!is_irreducible(w)) throw std::domain_error("not irreducible");
  const auto k = w.size();
  // Unknowns pi[0..k-1]: equations (W^T - I) pi = 0 with the last one replaced by sum = 1.
  Matrix a(k, std::vector<Ratio>(k + 1));
  for (std::size_t row = 0; row + 1 < k; ++row) {
    for (std::size_t col = 0; col < k; ++col) a[row][col] = w[col][row];
    a[row][row] -= Ratio(1);
  }
  for (std::size_t col = 0; col < k; ++col) a[k - 1][col] = Ratio(1);
  a[k - 1][k] = Ratio(1);

  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    while (piv < k && a[piv][col].is_zero()) ++piv;
    if (piv == k) throw std::domain_error("singular stationary system");
    std::swap(a[piv], a[col]);
    const Ratio inv = Ratio(1) / a[col][col];
    for (auto& v : a[col]) v *= inv;
    for (std::size_t row = 0; row < k; ++row) {
      if (row == col || a[row][col].is_zero()) continue;
      const Ratio f = a[row][col];
      for (std::size_t c = col; c <= k; ++c) a[row][c] -= f * a[col][c];
    }
  }
  std::vector<Ratio> pi(k);
  for (std::size_t i = 0; i < k; ++i) pi[i] = a[i][k];
  return pi;
}

/// H^W = sum_{x'} pi(x') sum_x W(x|x') log2 1/W(x|x'), with a rigorous error bound.
inline RealValue entropy_rate_markov(const Matrix& w, const std::vector<Ratio>& stationary,
                                     mpfr_prec_t prec = 160) {
  Enclosure acc{BigFloat(prec), BigFloat(prec)};
  for (std::size_t from = 0; from < w.size(); ++from) {
    for (std::size_t to = 0; to < w[from].size(); ++to) {
      const Ratio& p = w[from][to];
      if (p.is_zero() || stationary[from].is_zero() || p == Ratio(1)) continue;
      const Enclosure c = Enclosure::of(stationary[from] * p, prec);
      const Enclosure lg = log2_enclosure(p, prec);  // negative
      BigFloat neg_lo(prec), neg_hi(prec);
      mpfr_neg(neg_lo.get(), lg.hi.get(), MPFR_RNDD);
      mpfr_neg(neg_hi.get(), lg.lo.get(), MPFR_RNDU);
      acc.lo = add(acc.lo, mul(c.lo, neg_lo, MPFR_RNDD), MPFR_RNDD);
      acc.hi = add(acc.hi, mul(c.hi, neg_hi, MPFR_RNDU), MPFR_RNDU);
    }
  }
  return RealValue::from(acc);
}

/// Shannon entropy of a pmf in bits, with error bound.
inline RealValue entropy_bits(const std::vector<Ratio>& pmf) {
  return entropy_rate_markov(Matrix{pmf}, std::vector<Ratio>{Ratio(1)});
}

struct ClassDecomposition {
  std::vector<std::vector<std::size_t>> classes;  // 0-based states, ascending
  std::vector<Ratio> weights;
  std::vector<RealValue> per_class_entropy;
};

/// Splits a chain without transient classes into closed irreducible blocks.
inline ClassDecomposition decompose_classes(const Matrix& v, const std::vector<Ratio>& initial) {
  detail::check_square_stochastic(v);
  if (initial.size() != v.size()) throw std::invalid_argument("initial distribution has wrong length");
  detail::check_pmf(initial, "initial distribution");
  const auto k = v.size();
  const auto reach = detail::reachability(v);

  std::vector<bool> reachable(k, false);
  for (std::size_t s = 0; s < k; ++s)
    if (!initial[s].is_zero())
      for (std::size_t t = 0; t < k; ++t)
        if (reach[s][t]) reachable[t] = true;

  ClassDecomposition out;
  std::vector<bool> assigned(k, false);
  for (std::size_t s = 0; s < k; ++s) {
    if (assigned[s]) continue;
    std::vector<std::size_t> cls;
    for (std::size_t t = s; t < k; ++t)
      if (reach[s][t] && reach[t][s]) cls.push_back(t);
    for (auto t : cls) assigned[t] = true;
    bool closed = true;
    for (auto a : cls)
      for (std::size_t b = 0; b < k; ++b)
        if (!v[a][b].is_zero() && !(reach[b][a] && reach[a][b])) closed = false;
    if (!closed) {
      if (reachable[s]) throw std::domain_error("transient class unsupported");
      continue;  // never visited; carries no mass
    }
    Matrix block(cls.size(), std::vector<Ratio>(cls.size()));
    Ratio weight;
    for (std::size_t i = 0; i < cls.size(); ++i) {
      weight += initial[cls[i]];
      for (std::size_t j = 0; j < cls.size(); ++j) block[i][j] = v[cls[i]][cls[j]];
    }
    out.per_class_entropy.push_back(entropy_rate_markov(block, stationary_distribution(block)));
    out.weights.push_back(weight);
    out.classes.push_back(std::move(cls));
  }
  return out;
}

struct SpectrumSummary {
  RealValue sup_entropy;
  RealValue inf_entropy;
  RealValue avg_entropy;

  [[nodiscard]] bool one_point() const {
    return sup_entropy.lower() <= inf_entropy.upper() && inf_entropy.lower() <= sup_entropy.upper();
  }
};

/// Weighted entropy-rate atoms: the spectrum concentrates on these values.
struct SpectrumAtom {
  Ratio weight;
  RealValue entropy;
};

inline SpectrumSummary summarize_atoms(const std::vector<SpectrumAtom>& atoms) {
  double sup_lo = -INFINITY, sup_hi = -INFINITY, inf_lo = INFINITY, inf_hi = INFINITY;
  double avg_v = 0.0, avg_e = 0.0;
  bool any = false;
  for (const auto& a : atoms) {
    if (a.weight.is_zero()) continue;
    any = true;
    sup_lo = std::max(sup_lo, a.entropy.lower());
    sup_hi = std::max(sup_hi, a.entropy.upper());
    inf_lo = std::min(inf_lo, a.entropy.lower());
    inf_hi = std::min(inf_hi, a.entropy.upper());
    const double w = a.weight.to_double();
    avg_v += w * a.entropy.value;
    avg_e += w * a.entropy.error;
  }
  if (!any) throw std::invalid_argument("spectrum has no positive-weight atom");
  // Slack for the double-precision weighted sum.
  avg_e += 4 * std::numeric_limits<double>::epsilon() * (std::abs(avg_v) + 1.0) * static_cast<double>(atoms.size());
  return {RealValue::from_bounds(sup_lo, sup_hi), RealValue::from_bounds(inf_lo, inf_hi), {avg_v, avg_e}};
}

inline SpectrumSummary spectrum_summary(const ClassDecomposition& d) {
  std::vector<SpectrumAtom> atoms;
  for (std::size_t i = 0; i < d.classes.size(); ++i) atoms.push_back({d.weights[i], d.per_class_entropy[i]});
  return summarize_atoms(atoms);
}

/// Spectrum atoms for models whose spectral quantities are known in closed form:
/// i.i.d., Markov without transient classes, and finite mixtures of those.
inline std::vector<SpectrumAtom> spectrum_atoms(const ProcessSpec& model) {
  if (const auto* k = model.as<IidKind>()) return {{Ratio(1), entropy_bits(k->pmf)}};
  if (const auto* k = model.as<MarkovKind>()) {
    const auto d = decompose_classes(k->transition, k->initial);
    std::vector<SpectrumAtom> out;
    for (std::size_t i = 0; i < d.classes.size(); ++i) out.push_back({d.weights[i], d.per_class_entropy[i]});
    return out;
  }
  if (const auto* k = model.as<MixtureKind>()) {
    std::vector<SpectrumAtom> out;
    for (std::size_t c = 0; c < k->components.size(); ++c)
      for (auto a : spectrum_atoms(k->components[c])) {
        a.weight *= k->weights[c];
        out.push_back(std::move(a));
      }
    return out;
  }
  throw std::domain_error("spectral entropies of the " + std::string(family_name(model.as<NamedKind>()->family)) +
                          " family are not available in closed form");
}

inline SpectrumSummary spectrum_summary(const ProcessSpec& model) { return summarize_atoms(spectrum_atoms(model)); }

}  // namespace exactrng
