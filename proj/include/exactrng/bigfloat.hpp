#pragma once

// Directed-rounding MPFR values and exact powers of two with rational
// exponents.

#include <mpfr.h>

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>

#include "exactrng/ratio.hpp"

namespace exactrng {

/// RAII owner of one mpfr_t.
class BigFloat {
 public:
  explicit BigFloat(mpfr_prec_t prec = 128) { mpfr_init2(v_, prec); mpfr_set_zero(v_, 1); }
  BigFloat(const BigFloat& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  BigFloat(BigFloat&& o) noexcept {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_swap(v_, o.v_);
  }
  BigFloat& operator=(BigFloat o) noexcept {
    mpfr_swap(v_, o.v_);
    return *this;
  }
  ~BigFloat() { mpfr_clear(v_); }

  static BigFloat from(const Ratio& r, mpfr_prec_t prec, mpfr_rnd_t rnd) {
    BigFloat f(prec);
    mpfr_set_q(f.v_, r.gmp().get_mpq_t(), rnd);
    return f;
  }
  static BigFloat from(double d, mpfr_prec_t prec) {
    BigFloat f(prec);
    mpfr_set_d(f.v_, d, MPFR_RNDN);
    return f;
  }

  mpfr_ptr get() noexcept { return v_; }
  mpfr_srcptr get() const noexcept { return v_; }
  [[nodiscard]] mpfr_prec_t prec() const noexcept { return mpfr_get_prec(v_); }
  [[nodiscard]] double to_double(mpfr_rnd_t rnd = MPFR_RNDN) const { return mpfr_get_d(v_, rnd); }
  [[nodiscard]] int sign() const noexcept { return mpfr_sgn(v_); }

  friend int compare(const BigFloat& a, const BigFloat& b) { return mpfr_cmp(a.v_, b.v_); }
  friend bool operator<(const BigFloat& a, const BigFloat& b) { return compare(a, b) < 0; }
  friend bool operator<=(const BigFloat& a, const BigFloat& b) { return compare(a, b) <= 0; }

 private:
  mpfr_t v_;
};

inline BigFloat add(const BigFloat& a, const BigFloat& b, mpfr_rnd_t rnd) {
  BigFloat r(std::max(a.prec(), b.prec()));
  mpfr_add(r.get(), a.get(), b.get(), rnd);
  return r;
}
inline BigFloat sub(const BigFloat& a, const BigFloat& b, mpfr_rnd_t rnd) {
  BigFloat r(std::max(a.prec(), b.prec()));
  mpfr_sub(r.get(), a.get(), b.get(), rnd);
  return r;
}
inline BigFloat mul(const BigFloat& a, const BigFloat& b, mpfr_rnd_t rnd) {
  BigFloat r(std::max(a.prec(), b.prec()));
  mpfr_mul(r.get(), a.get(), b.get(), rnd);
  return r;
}
inline BigFloat div(const BigFloat& a, const BigFloat& b, mpfr_rnd_t rnd) {
  BigFloat r(std::max(a.prec(), b.prec()));
  mpfr_div(r.get(), a.get(), b.get(), rnd);
  return r;
}

/// Closed enclosure [lo, hi] of a real number.
struct Enclosure {
  BigFloat lo;
  BigFloat hi;

  static Enclosure of(const Ratio& r, mpfr_prec_t prec) {
    return {BigFloat::from(r, prec, MPFR_RNDD), BigFloat::from(r, prec, MPFR_RNDU)};
  }
  [[nodiscard]] double mid() const {
    return 0.5 * (lo.to_double(MPFR_RNDN) + hi.to_double(MPFR_RNDN));
  }
  [[nodiscard]] double radius() const {
    return 0.5 * (hi.to_double(MPFR_RNDU) - lo.to_double(MPFR_RNDD));
  }
};

// Enclosure of log2(r) for r > 0.
inline Enclosure log2_enclosure(const Ratio& r, mpfr_prec_t prec) {
  if (r.sign() <= 0) throw std::domain_error("log2 of non-positive value");
  Enclosure x = Enclosure::of(r, prec);
  Enclosure out{BigFloat(prec), BigFloat(prec)};
  mpfr_log2(out.lo.get(), x.lo.get(), MPFR_RNDD);
  mpfr_log2(out.hi.get(), x.hi.get(), MPFR_RNDU);
  return out;
}

// Enclosure of 2^(-e) for e >= 0.
inline Enclosure exp2_neg_enclosure(const Ratio& e, mpfr_prec_t prec) {
  Enclosure x = Enclosure::of(e, prec);
  Enclosure out{BigFloat(prec), BigFloat(prec)};
  // 2^(-x) is decreasing in x.
  BigFloat neg(prec);
  mpfr_neg(neg.get(), x.hi.get(), MPFR_RNDD);
  mpfr_exp2(out.lo.get(), neg.get(), MPFR_RNDD);
  mpfr_neg(neg.get(), x.lo.get(), MPFR_RNDU);
  mpfr_exp2(out.hi.get(), neg.get(), MPFR_RNDU);
  return out;
}

/// The value 2^(-exponent), exponent a non-negative rational number of bits.
class DyadicExp {
 public:
  DyadicExp() = default;
  explicit DyadicExp(Ratio exponent) : exponent_(std::move(exponent)) {
    if (exponent_.sign() < 0) throw std::invalid_argument("DyadicExp exponent must be >= 0");
  }

  [[nodiscard]] const Ratio& exponent() const noexcept { return exponent_; }
  [[nodiscard]] std::string str() const { return "2^-(" + exponent_.str() + ")"; }

  static DyadicExp parse(std::string_view text) {
    constexpr std::string_view prefix = "2^-(";
    if (text.size() < prefix.size() + 2 || text.substr(0, prefix.size()) != prefix ||
        text.back() != ')')
      throw std::invalid_argument("malformed dyadic literal '" + std::string(text) + "'");
    return DyadicExp(Ratio::parse(text.substr(prefix.size(), text.size() - prefix.size() - 1)));
  }

  [[nodiscard]] Enclosure enclose(mpfr_prec_t prec) const { return exp2_neg_enclosure(exponent_, prec); }
  [[nodiscard]] double to_double() const { return enclose(64).mid(); }

  friend bool operator==(const DyadicExp&, const DyadicExp&) = default;

 private:
  Ratio exponent_{0};
};

namespace detail {

inline std::size_t bit_size(const mpz_class& z) { return mpz_sizeinbase(z.get_mpz_t(), 2); }

// Exact test 2^(-p/d) <= a/b via b^d <= a^d * 2^p. Only used when the powers stay small.
inline bool dyadic_leq_exact(const Ratio& e, const Ratio& q) {
  const unsigned long d = e.den().get_ui();
  const mpz_class& p = e.num();
  mpz_class lhs, rhs;
  mpz_pow_ui(lhs.get_mpz_t(), q.den().get_mpz_t(), d);
  mpz_pow_ui(rhs.get_mpz_t(), q.num().get_mpz_t(), d);
  mpz_mul_2exp(rhs.get_mpz_t(), rhs.get_mpz_t(), p.get_ui());
  return lhs <= rhs;
}

}  // namespace detail

/// Exact truth value of 2^(-v.exponent) <= q, for q > 0.
inline bool dyadic_leq_ratio(const DyadicExp& v, const Ratio& q) {
  if (q.sign() <= 0) throw std::invalid_argument("dyadic_leq_ratio requires q > 0");
  const Ratio& e = v.exponent();
  if (e.is_integer()) {
    // q >= 1/den, so any 2^-k with 2^k > den is below it.
    if (!e.num().fits_ulong_p() || e.num().get_ui() > detail::bit_size(q.den())) return true;
    return dyadic(e.num().get_ui()) <= q;
  }
  // Non-integer exponent: 2^(-e) is irrational, so it never ties with q.
  if (e.den().fits_ulong_p() && e.num().fits_ulong_p()) {
    const double work = static_cast<double>(e.den().get_ui()) *
                            static_cast<double>(std::max(detail::bit_size(q.num()), detail::bit_size(q.den()))) +
                        static_cast<double>(e.num().get_ui());
    if (work < 65536.0) return detail::dyadic_leq_exact(e, q);
  }
  for (mpfr_prec_t prec = 128;; prec *= 2) {
    const Enclosure val = v.enclose(prec);
    const Enclosure qq = Enclosure::of(q, prec);
    if (val.hi <= qq.lo) return true;
    if (qq.hi < val.lo) return false;
    if (prec > (mpfr_prec_t{1} << 24))
      throw std::runtime_error("dyadic comparison failed to separate at maximum precision");
  }
}

}  // namespace exactrng
