#pragma once

// Exact rational numbers and half-open subintervals of [0, 1).
//
// Ratio is a thin value wrapper around GMP's mpq_class that is always kept in
// canonical (reduced, positive-denominator) form. It is signed so that bound
// expressions such as P(A) - P(B) - c can be evaluated exactly; probability
// values are validated at the model boundary rather than by the type.

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace exactrng {

class Ratio {
 public:
  Ratio() = default;
  Ratio(long v) : v_(v) {}  // NOLINT(google-explicit-constructor)
  Ratio(int v) : v_(static_cast<long>(v)) {}  // NOLINT
  Ratio(long num, long den) {
    if (den == 0) throw std::domain_error("Ratio: zero denominator");
    v_ = mpq_class(num, den);
    v_.canonicalize();
  }
  Ratio(const mpz_class& num, const mpz_class& den) {
    if (den == 0) throw std::domain_error("Ratio: zero denominator");
    v_ = mpq_class(num, den);
    v_.canonicalize();
  }
  explicit Ratio(mpq_class v) : v_(std::move(v)) { v_.canonicalize(); }

  // Accepts "num/den" or "num" in decimal, with an optional leading '-'.
  static Ratio parse(std::string_view text) {
    std::string s(text);
    auto trim = [](std::string& t) {
      const auto b = t.find_first_not_of(" \t");
      const auto e = t.find_last_not_of(" \t");
      t = (b == std::string::npos) ? std::string() : t.substr(b, e - b + 1);
    };
    trim(s);
    if (s.empty()) throw std::invalid_argument("empty rational literal");
    const auto slash = s.find('/');
    std::string num = s.substr(0, slash);
    std::string den = slash == std::string::npos ? "1" : s.substr(slash + 1);
    trim(num);
    trim(den);
    auto digits_ok = [](const std::string& t, bool allow_sign) {
      if (t.empty()) return false;
      std::size_t i = 0;
      if (allow_sign && t[0] == '-') i = 1;
      if (i == t.size()) return false;
      for (; i < t.size(); ++i)
        if (t[i] < '0' || t[i] > '9') return false;
      return true;
    };
    if (!digits_ok(num, true) || !digits_ok(den, false))
      throw std::invalid_argument("malformed rational literal '" + std::string(text) + "'");
    mpz_class n(num, 10), d(den, 10);
    if (d == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
    return Ratio(n, d);
  }

  [[nodiscard]] std::string str() const {
    if (v_.get_den() == 1) return v_.get_num().get_str();
    return v_.get_num().get_str() + "/" + v_.get_den().get_str();
  }

  [[nodiscard]] const mpq_class& gmp() const noexcept { return v_; }
  [[nodiscard]] mpz_class num() const { return v_.get_num(); }
  [[nodiscard]] mpz_class den() const { return v_.get_den(); }
  [[nodiscard]] int sign() const noexcept { return sgn(v_); }
  [[nodiscard]] bool is_zero() const noexcept { return sgn(v_) == 0; }
  [[nodiscard]] bool is_integer() const { return v_.get_den() == 1; }
  [[nodiscard]] double to_double() const { return v_.get_d(); }

  Ratio& operator+=(const Ratio& o) { v_ += o.v_; return *this; }
  Ratio& operator-=(const Ratio& o) { v_ -= o.v_; return *this; }
  Ratio& operator*=(const Ratio& o) { v_ *= o.v_; return *this; }
  Ratio& operator/=(const Ratio& o) {
    if (o.is_zero()) throw std::domain_error("Ratio: division by zero");
    v_ /= o.v_;
    return *this;
  }

  friend Ratio operator+(Ratio a, const Ratio& b) { return a += b; }
  friend Ratio operator-(Ratio a, const Ratio& b) { return a -= b; }
  friend Ratio operator*(Ratio a, const Ratio& b) { return a *= b; }
  friend Ratio operator/(Ratio a, const Ratio& b) { return a /= b; }
  friend Ratio operator-(const Ratio& a) { return Ratio(mpq_class(-a.v_)); }

  friend bool operator==(const Ratio& a, const Ratio& b) { return cmp(a.v_, b.v_) == 0; }
  friend std::strong_ordering operator<=>(const Ratio& a, const Ratio& b) {
    const int c = cmp(a.v_, b.v_);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

 private:
  mpq_class v_{0};
};

inline Ratio pow(const Ratio& base, unsigned long exp) {
  mpz_class n, d;
  mpz_pow_ui(n.get_mpz_t(), base.gmp().get_num_mpz_t(), exp);
  mpz_pow_ui(d.get_mpz_t(), base.gmp().get_den_mpz_t(), exp);
  return Ratio(n, d);
}

inline Ratio abs(const Ratio& r) { return r.sign() < 0 ? -r : r; }

// 2^(-k) for k >= 0.
inline Ratio dyadic(unsigned long k) {
  mpz_class d;
  mpz_ui_pow_ui(d.get_mpz_t(), 2, k);
  return Ratio(mpz_class(1), d);
}

/// Half-open interval [lo, hi) with 0 <= lo <= hi <= 1.
class UnitInterval {
 public:
  UnitInterval() : lo_(0), hi_(1) {}
  UnitInterval(Ratio lo, Ratio hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.sign() < 0 || lo_ > hi_ || hi_ > Ratio(1))
      throw std::invalid_argument("invalid unit interval [" + lo_.str() + ", " + hi_.str() + ")");
  }

  [[nodiscard]] const Ratio& lo() const noexcept { return lo_; }
  [[nodiscard]] const Ratio& hi() const noexcept { return hi_; }
  [[nodiscard]] Ratio length() const { return hi_ - lo_; }
  [[nodiscard]] bool empty() const { return lo_ == hi_; }

  // Child [lo + len*cum_lo, lo + len*cum_hi) for cumulative masses cum_lo <= cum_hi.
  [[nodiscard]] UnitInterval sub(const Ratio& cum_lo, const Ratio& cum_hi) const {
    const Ratio len = length();
    return UnitInterval(lo_ + len * cum_lo, lo_ + len * cum_hi);
  }

  [[nodiscard]] std::string str() const { return "[" + lo_.str() + ", " + hi_.str() + ")"; }

  friend bool operator==(const UnitInterval&, const UnitInterval&) = default;

 private:
  Ratio lo_;
  Ratio hi_;
};

inline bool interval_contains(const UnitInterval& outer, const UnitInterval& inner) {
  return outer.lo() <= inner.lo() && inner.hi() <= outer.hi();
}

inline bool interval_intersects(const UnitInterval& a, const UnitInterval& b) {
  const Ratio& lo = a.lo() < b.lo() ? b.lo() : a.lo();
  const Ratio& hi = a.hi() < b.hi() ? a.hi() : b.hi();
  return lo < hi;
}

}  // namespace exactrng
