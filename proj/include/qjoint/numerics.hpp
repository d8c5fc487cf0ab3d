#ifndef QJOINT_NUMERICS_HPP
#define QJOINT_NUMERICS_HPP

#include <Eigen/Core>
#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/eigen.hpp>

#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace qjoint {

using Integer = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                              boost::multiprecision::et_off>;
using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;

// Unit roundoff of IEEE binary64.
inline constexpr double kUnitRoundoff = 0x1p-53;

/// Floating value carrying a running absolute error bound.
///
/// Every arithmetic operation adds the first-order propagated error of its
/// operands plus one rounding of the result, so `err` never shrinks.
struct Tracked {
  double value = 0.0;
  double err = 0.0;

  constexpr Tracked() = default;
  // Literals and integers converted here are taken as exact.
  constexpr Tracked(double v) : value(v) {}  // NOLINT(google-explicit-constructor)
  constexpr Tracked(int v) : value(v) {}     // NOLINT(google-explicit-constructor)
  constexpr Tracked(double v, double e) : value(v), err(e) {}

  static Tracked rounded(double v) { return {v, kUnitRoundoff * std::abs(v)}; }

  Tracked& operator+=(const Tracked& o);
  Tracked& operator-=(const Tracked& o);
  Tracked& operator*=(const Tracked& o);
  Tracked& operator/=(const Tracked& o);
};

inline Tracked operator-(const Tracked& a) { return {-a.value, a.err}; }

inline Tracked operator+(const Tracked& a, const Tracked& b) {
  const double r = a.value + b.value;
  return {r, a.err + b.err + kUnitRoundoff * std::abs(r)};
}

inline Tracked operator-(const Tracked& a, const Tracked& b) {
  const double r = a.value - b.value;
  return {r, a.err + b.err + kUnitRoundoff * std::abs(r)};
}

inline Tracked operator*(const Tracked& a, const Tracked& b) {
  const double r = a.value * b.value;
  return {r, std::abs(a.value) * b.err + std::abs(b.value) * a.err + a.err * b.err +
                 kUnitRoundoff * std::abs(r)};
}

inline Tracked operator/(const Tracked& a, const Tracked& b) {
  const double r = a.value / b.value;
  const double denom = std::abs(b.value) * (std::abs(b.value) - b.err);
  const double prop = denom > 0.0
                          ? (std::abs(a.value) * b.err + std::abs(b.value) * a.err) / denom
                          : std::numeric_limits<double>::infinity();
  return {r, prop + kUnitRoundoff * std::abs(r)};
}

inline Tracked& Tracked::operator+=(const Tracked& o) { return *this = *this + o; }
inline Tracked& Tracked::operator-=(const Tracked& o) { return *this = *this - o; }
inline Tracked& Tracked::operator*=(const Tracked& o) { return *this = *this * o; }
inline Tracked& Tracked::operator/=(const Tracked& o) { return *this = *this / o; }

inline bool operator==(const Tracked& a, const Tracked& b) { return a.value == b.value; }
inline auto operator<=>(const Tracked& a, const Tracked& b) { return a.value <=> b.value; }

inline Tracked abs(const Tracked& a) { return {std::abs(a.value), a.err}; }
inline Tracked sqrt(const Tracked& a) {
  const double r = std::sqrt(a.value);
  const double prop = r > 0.0 ? a.err / (2.0 * r) : std::sqrt(a.err);
  return {r, prop + kUnitRoundoff * r};
}
// libm exp/sin/cos/tanh are faithful to within a couple of ulps; 2u covers it.
inline Tracked exp(const Tracked& a) {
  const double r = std::exp(a.value);
  return {r, r * std::expm1(a.err) + 2.0 * kUnitRoundoff * r};
}

std::ostream& operator<<(std::ostream& os, const Tracked& t);

template <class S>
concept ScalarType = std::same_as<S, Rational> || std::same_as<S, Tracked>;

enum class ScalarMode { rational, tracked };

std::string to_string(ScalarMode mode);
ScalarMode parse_scalar_mode(const std::string& text);

template <class S>
struct scalar_traits;

template <>
struct scalar_traits<Rational> {
  static constexpr bool is_exact = true;
  static constexpr ScalarMode mode = ScalarMode::rational;
  static Rational from_integer(const Integer& z) { return Rational(z); }
  static Rational from_rational(const Rational& q) { return q; }
  static double to_double(const Rational& q) { return q.convert_to<double>(); }
  static double error_bound(const Rational&) { return 0.0; }
};

template <>
struct scalar_traits<Tracked> {
  static constexpr bool is_exact = false;
  static constexpr ScalarMode mode = ScalarMode::tracked;
  static Tracked from_integer(const Integer& z) {
    const double v = z.convert_to<double>();
    if (!std::isfinite(v)) return {v, std::numeric_limits<double>::infinity()};
    return Integer(v) == z ? Tracked(v) : Tracked::rounded(v);
  }
  static Tracked from_rational(const Rational& q) {
    const double v = q.convert_to<double>();
    if (!std::isfinite(v)) return {v, std::numeric_limits<double>::infinity()};
    return Rational(v) == q ? Tracked(v) : Tracked::rounded(v);
  }
  static double to_double(const Tracked& t) { return t.value; }
  static double error_bound(const Tracked& t) { return t.err; }
};

template <ScalarType S>
double to_double(const S& x) {
  return scalar_traits<S>::to_double(x);
}

template <ScalarType S>
double error_bound(const S& x) {
  return scalar_traits<S>::error_bound(x);
}

template <ScalarType S>
S from_rational(const Rational& q) {
  return scalar_traits<S>::from_rational(q);
}

template <ScalarType S>
S pow_int(S base, unsigned exponent) {
  S result(1);
  while (exponent != 0) {
    if (exponent & 1U) result = result * base;
    exponent >>= 1U;
    if (exponent != 0) base = base * base;
  }
  return result;
}

/// Parses "3", "-0.125", "1/3" or "2.5e-3" into an exact rational.
Rational parse_rational(const std::string& text);
std::string rational_string(const Rational& q);
/// Terminating decimals print as decimals ("0.3"), everything else as "p/q".
std::string format_rational(const Rational& q);

// ---------------------------------------------------------------------------
// Combinatorics

/// n! from a memoized big-integer table; safe under concurrent first use.
const Integer& factorial(unsigned n);

Integer binomial_integer(unsigned k, unsigned n);

/// C(k, n), zero when n > k.
template <ScalarType S>
S binomial(unsigned k, unsigned n) {
  return scalar_traits<S>::from_integer(binomial_integer(k, n));
}

/// Multinomial (a+b+c)! / (a! b! c!).
Integer multinomial_integer(unsigned a, unsigned b, unsigned c);

/// e^{-mean} mean^k / k! in Tracked arithmetic.
Tracked poisson_weight(const Tracked& mean, unsigned k);

// ---------------------------------------------------------------------------
// Series

template <ScalarType S>
struct SeriesResult {
  S sum{};
  std::size_t terms_used = 0;
  double truncation_bound = 0.0;
  bool converged = false;
};

struct SeriesOptions {
  // Tail estimate is |last term| * safety_factor when no certifier is given.
  double safety_factor = 10.0;
  // Certified bound on sum_{i>k} |t_i|; overrides the heuristic estimate.
  std::function<double(std::size_t)> tail_certifier;
  // Bound on everything after the generator reports exhaustion.
  double exhausted_tail = 0.0;
};

namespace detail {

// Neumaier-compensated accumulator for Tracked terms.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  double term_err = 0.0;
  double abs_sum = 0.0;
  std::size_t count = 0;

  void add(const Tracked& t) {
    const double x = t.value;
    const double s = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - s) + x;
    } else {
      comp += (x - s) + sum;
    }
    sum = s;
    term_err += t.err;
    abs_sum += std::abs(x);
    ++count;
  }

  Tracked result() const {
    const double r = sum + comp;
    const double n = static_cast<double>(count);
    const double rounding = 2.0 * kUnitRoundoff * std::abs(r) +
                            2.0 * n * kUnitRoundoff * kUnitRoundoff * abs_sum;
    return {r, term_err + rounding};
  }
};

}  // namespace detail

/// Sums an indexed series, generally alternating.
///
/// `term(k)` returns the k-th term, or nullopt once every remaining term is
/// known to be zero (or unavailable, with `exhausted_tail` bounding the rest).
/// Summation stops at index k once 0 < |t_k| * safety < tol and, when a tail
/// certifier is present, its bound is <= tol too (zero terms then count).
/// Running into `max_terms` without meeting the rule yields converged = false.
template <ScalarType S, class TermFn>
SeriesResult<S> alternating_sum(TermFn&& term, double tolerance, std::size_t max_terms,
                                const SeriesOptions& options = {}) {
  SeriesResult<S> out;
  [[maybe_unused]] detail::CompensatedSum acc;
  S exact_sum(0);
  double last_abs = 0.0;
  bool stopped = false;

  for (std::size_t k = 0; k < max_terms; ++k) {
    std::optional<S> t = term(k);
    if (!t) {
      out.truncation_bound = options.exhausted_tail;
      stopped = true;
      break;
    }
    if constexpr (std::is_same_v<S, Tracked>) {
      acc.add(*t);
    } else {
      exact_sum += *t;
    }
    ++out.terms_used;
    last_abs = std::abs(to_double(*t));
    const double heuristic = last_abs * options.safety_factor;
    // A zero term says nothing about the rest without a certifier.
    if (heuristic < tolerance && (last_abs > 0.0 || options.tail_certifier)) {
      if (!options.tail_certifier) {
        out.truncation_bound = heuristic;
        stopped = true;
        break;
      }
      const double certified = options.tail_certifier(k);
      if (certified <= tolerance) {
        out.truncation_bound = certified;
        stopped = true;
        break;
      }
    }
  }
  if (!stopped) {
    out.truncation_bound = options.tail_certifier && out.terms_used > 0
                               ? options.tail_certifier(out.terms_used - 1)
                               : last_abs * options.safety_factor;
  }
  out.converged = out.truncation_bound <= tolerance;

  if constexpr (std::is_same_v<S, Tracked>) {
    out.sum = acc.result();
  } else {
    out.sum = exact_sum;
  }
  return out;
}

/// Certified bound on sum_{j>cutoff} C(j, n) * anchor * ratio^{j - cutoff}.
///
/// Infinite when the term ratio does not settle below one.
double binomial_weighted_tail(unsigned cutoff, unsigned n, double anchor, double ratio);

/// Exact closed form of sum_{j>=0} C(j, m) C(j, a) y^j for |y| < 1.
Rational binomial_geometric_sum(unsigned m, unsigned a, const Rational& y);

}  // namespace qjoint

namespace Eigen {

template <>
struct NumTraits<qjoint::Tracked> : GenericNumTraits<double> {
  using Real = qjoint::Tracked;
  using NonInteger = qjoint::Tracked;
  using Literal = qjoint::Tracked;
  using Nested = qjoint::Tracked;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2,
    AddCost = 4,
    MulCost = 8
  };
  static qjoint::Tracked epsilon() { return std::numeric_limits<double>::epsilon(); }
  static qjoint::Tracked dummy_precision() { return 1e-12; }
  static qjoint::Tracked highest() { return std::numeric_limits<double>::max(); }
  static qjoint::Tracked lowest() { return std::numeric_limits<double>::lowest(); }
  static int digits10() { return std::numeric_limits<double>::digits10; }
};

}  // namespace Eigen

#endif  // QJOINT_NUMERICS_HPP
