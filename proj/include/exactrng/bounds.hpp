#pragma once

// Single-shot converse and achievability bounds on Pr(T > m), and the
// asymptotic rate formulas built from spectral entropies.
//
// Thresholds are exact rationals t = 2^(-lambda), t' = 2^(-tau), so the
// cross terms 2^(lambda - tau) = t' / t and 2^(tau - lambda + 1) = 2t / t'
// are exact as well.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "exactrng/analysis.hpp"
#include "exactrng/markov.hpp"
#include "exactrng/process.hpp"
#include "exactrng/ratio.hpp"

namespace exactrng {

struct BoundQuery {
  std::size_t m = 0;
  std::size_t n = 0;
  Ratio lambda_threshold;  // 2^(-lambda)
  Ratio tau_threshold;     // 2^(-tau)
  Ratio s_mass;            // P_{X^m}(S_m(lambda))
  Ratio s_complement;      // P_{X^m}(S_m^c(lambda))
  Ratio t_mass;            // P_{Y^n}(T_n(tau))
  Ratio t_complement;      // P_{Y^n}(T_n^c(tau))

  [[nodiscard]] Ratio cross_term() const { return tau_threshold / lambda_threshold; }
};

namespace detail {
inline void check_threshold(const Ratio& t, const char* what) {
  if (t.sign() <= 0 || t > Ratio(1)) throw std::invalid_argument(std::string(what) + " threshold must lie in (0, 1]");
}
}  // namespace detail

/// Assembles a query from explicit masses; S and T complements are derived.
inline BoundQuery make_query(std::size_t m, std::size_t n, Ratio t_lambda, Ratio t_tau, Ratio s_mass, Ratio t_mass) {
  detail::check_threshold(t_lambda, "lambda");
  detail::check_threshold(t_tau, "tau");
  BoundQuery q;
  q.m = m;
  q.n = n;
  q.lambda_threshold = std::move(t_lambda);
  q.tau_threshold = std::move(t_tau);
  q.s_complement = Ratio(1) - s_mass;
  q.s_mass = std::move(s_mass);
  q.t_complement = Ratio(1) - t_mass;
  q.t_mass = std::move(t_mass);
  return q;
}

/// Computes the four spectrum masses exactly from the models.
inline BoundQuery make_query(const ProcessSpec& coin, const ProcessSpec& target, std::size_t m, std::size_t n,
                             const Ratio& t_lambda, const Ratio& t_tau) {
  const SpectrumMass s = spectrum_mass(coin, m, t_lambda);
  const SpectrumMass t = spectrum_mass(target, n, t_tau);
  // T_n(tau) = {P >= 2^(-tau)}.
  return make_query(m, n, t_lambda, t_tau, s.mass_below, Ratio(1) - t.mass_strictly_below);
}

struct ConverseBound {
  Ratio first;   // P(T^c) - P(S) - 2^(lambda - tau)
  Ratio second;  // P(S^c) - P(T) - 2^(lambda - tau)
};

inline ConverseBound converse_bound(const BoundQuery& q) {
  detail::check_threshold(q.lambda_threshold, "lambda");
  detail::check_threshold(q.tau_threshold, "tau");
  const Ratio c = q.cross_term();
  return {q.t_complement - q.s_mass - c, q.s_complement - q.t_mass - c};
}

inline Ratio achievability_bound(const BoundQuery& q) {
  detail::check_threshold(q.lambda_threshold, "lambda");
  detail::check_threshold(q.tau_threshold, "tau");
  return q.s_complement + q.t_complement + Ratio(2) * q.lambda_threshold / q.tau_threshold;
}

struct BoundCheckPoint {
  std::size_t m = 0;
  Ratio lambda_threshold;
  Ratio tau_threshold;
  Ratio overflow;  // exact Pr(T > m)
  ConverseBound converse;
  Ratio achievability;
  bool converse_ok = false;
  bool achievability_ok = false;
  bool forms_agree = false;  // P(T^c) - P(S) == P(S^c) - P(T)
};

struct BoundCheckReport {
  std::vector<BoundCheckPoint> points;
  [[nodiscard]] std::size_t violations() const {
    return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const BoundCheckPoint& p) {
      return !(p.converse_ok && p.achievability_ok && p.forms_agree);
    }));
  }
  [[nodiscard]] bool passed() const { return violations() == 0; }
};

/// Evaluates both bounds on a grid against the exact overflow probabilities.
inline BoundCheckReport check_bounds(const ProcessSpec& coin, const ProcessSpec& target, std::size_t n,
                                     const std::vector<std::size_t>& ms, const std::vector<Ratio>& lambda_thresholds,
                                     const std::vector<Ratio>& tau_thresholds) {
  BoundCheckReport rep;
  if (ms.empty()) return rep;
  const std::size_t m_max = *std::max_element(ms.begin(), ms.end());
  const StoppingProfile prof = stopping_profile(coin, target, n, m_max);
  std::map<std::size_t, Ratio> t_mass;  // by tau index
  for (std::size_t j = 0; j < tau_thresholds.size(); ++j)
    t_mass[j] = Ratio(1) - spectrum_mass(target, n, tau_thresholds[j]).mass_strictly_below;
  for (std::size_t m : ms) {
    for (const auto& tl : lambda_thresholds) {
      const Ratio s_mass = spectrum_mass(coin, m, tl).mass_below;
      for (std::size_t j = 0; j < tau_thresholds.size(); ++j) {
        const BoundQuery q = make_query(m, n, tl, tau_thresholds[j], s_mass, t_mass[j]);
        BoundCheckPoint pt;
        pt.m = m;
        pt.lambda_threshold = tl;
        pt.tau_threshold = tau_thresholds[j];
        pt.overflow = prof.overflow[m];
        pt.converse = converse_bound(q);
        pt.achievability = achievability_bound(q);
        pt.converse_ok = pt.converse.first <= pt.overflow && pt.converse.second <= pt.overflow;
        pt.achievability_ok = pt.overflow <= pt.achievability;
        pt.forms_agree = (q.t_complement - q.s_mass) == (q.s_complement - q.t_mass);
        rep.points.push_back(std::move(pt));
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Asymptotic rates

struct RatesReport {
  RealValue r_int_upper;  // sup H(Y) / inf H(X)
  RealValue r_lower;      // max[sup H(Y) / sup H(X), inf H(Y) / inf H(X)]
  RealValue l_int_upper;  // H(Y) / inf H(X)
  RealValue l_lower;      // H(Y) / sup H(X)
  bool coin_one_point = false;
  bool target_one_point = false;
  std::optional<RealValue> r_star;  // equality case: either spectrum is one-point
  std::optional<RealValue> l_star;  // equality case: coin spectrum is one-point
};

inline RealValue max_of(const RealValue& a, const RealValue& b) {
  return RealValue::from_bounds(std::max(a.lower(), b.lower()), std::max(a.upper(), b.upper()));
}

inline RatesReport asymptotic_rates(const SpectrumSummary& coin, const SpectrumSummary& target) {
  if (!(coin.inf_entropy.lower() > 0.0)) throw std::domain_error("coin spectrum touches zero");
  RatesReport r;
  r.r_int_upper = divide(target.sup_entropy, coin.inf_entropy);
  r.r_lower = max_of(divide(target.sup_entropy, coin.sup_entropy), divide(target.inf_entropy, coin.inf_entropy));
  r.l_int_upper = divide(target.avg_entropy, coin.inf_entropy);
  r.l_lower = divide(target.avg_entropy, coin.sup_entropy);
  r.coin_one_point = coin.one_point();
  r.target_one_point = target.one_point();
  if (r.coin_one_point) {
    r.r_star = divide(target.sup_entropy, coin.avg_entropy);
    r.l_star = divide(target.avg_entropy, coin.avg_entropy);
  } else if (r.target_one_point) {
    r.r_star = divide(target.avg_entropy, coin.inf_entropy);
  }
  return r;
}

}  // namespace exactrng
