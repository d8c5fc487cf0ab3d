#include "qjoint/numerics.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <iomanip>
#include <mutex>

namespace qjoint {

std::ostream& operator<<(std::ostream& os, const Tracked& t) {
  return os << std::setprecision(17) << t.value << " (+/- " << std::setprecision(3) << t.err
            << ")";
}

std::string to_string(ScalarMode mode) {
  return mode == ScalarMode::rational ? "rational" : "float";
}

ScalarMode parse_scalar_mode(const std::string& text) {
  if (text == "rational" || text == "exact") return ScalarMode::rational;
  if (text == "float" || text == "tracked") return ScalarMode::tracked;
  throw std::invalid_argument("unknown scalar mode '" + text + "' (expected rational|float)");
}

namespace {

Integer parse_integer(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty integer literal");
  std::size_t i = (text[0] == '-' || text[0] == '+') ? 1 : 0;
  if (i == text.size()) throw std::invalid_argument("bad integer literal '" + text + "'");
  for (std::size_t j = i; j < text.size(); ++j) {
    if (!std::isdigit(static_cast<unsigned char>(text[j]))) {
      throw std::invalid_argument("bad integer literal '" + text + "'");
    }
  }
  // Leading zeros would make GMP read the literal as octal.
  const std::size_t first = std::min(text.find_first_not_of('0', i), text.size() - 1);
  Integer z(text.substr(first));
  return text[0] == '-' ? Integer(-z) : z;
}

Integer pow10(unsigned e) {
  Integer r(1);
  for (unsigned i = 0; i < e; ++i) r *= 10;
  return r;
}

}  // namespace

Rational parse_rational(const std::string& raw) {
  std::string text = raw;
  text.erase(std::remove_if(text.begin(), text.end(),
                            [](unsigned char c) { return std::isspace(c); }),
             text.end());
  if (text.empty()) throw std::invalid_argument("empty number");

  if (auto slash = text.find('/'); slash != std::string::npos) {
    Integer num = parse_integer(text.substr(0, slash));
    Integer den = parse_integer(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator in '" + raw + "'");
    return Rational(num, den);
  }

  bool negative = false;
  std::size_t i = 0;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    i = 1;
  }
  std::string digits;
  int frac_digits = 0;
  bool seen_point = false;
  bool any_digit = false;
  for (; i < text.size(); ++i) {
    const char c = text[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      any_digit = true;
      if (seen_point) ++frac_digits;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!any_digit) throw std::invalid_argument("bad number '" + raw + "'");
  long exponent = 0;
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') throw std::invalid_argument("bad number '" + raw + "'");
    exponent = std::stol(parse_integer(text.substr(i + 1)).str());
  }
  Rational value{parse_integer(digits)};
  const long scale = exponent - frac_digits;
  if (scale > 0) value *= Rational(pow10(static_cast<unsigned>(scale)));
  if (scale < 0) value /= Rational(pow10(static_cast<unsigned>(-scale)));
  return negative ? Rational(-value) : value;
}

std::string rational_string(const Rational& q) { return q.str(); }

std::string format_rational(const Rational& q) {
  Integer den = denominator(q);
  unsigned twos = 0;
  unsigned fives = 0;
  while (den % 2 == 0) {
    den /= 2;
    ++twos;
  }
  while (den % 5 == 0) {
    den /= 5;
    ++fives;
  }
  if (den != 1) return q.str();
  const unsigned places = std::max(twos, fives);
  if (places == 0) return numerator(q).str();
  const Integer scaled = numerator(q) * pow10(places) / denominator(q);
  const bool negative = scaled < 0;
  std::string digits = (negative ? Integer(-scaled) : scaled).str();
  if (digits.size() <= places) digits.insert(0, places + 1 - digits.size(), '0');
  digits.insert(digits.size() - places, ".");
  return negative ? "-" + digits : digits;
}

const Integer& factorial(unsigned n) {
  static std::mutex mutex;
  static std::deque<Integer> table{Integer(1)};
  std::lock_guard<std::mutex> lock(mutex);
  while (table.size() <= n) {
    table.push_back(table.back() * Integer(static_cast<unsigned long>(table.size())));
  }
  // deque::push_back never invalidates references to existing elements.
  return table[n];
}

Integer binomial_integer(unsigned k, unsigned n) {
  if (n > k) return Integer(0);
  return factorial(k) / (factorial(n) * factorial(k - n));
}

Integer multinomial_integer(unsigned a, unsigned b, unsigned c) {
  return factorial(a + b + c) / (factorial(a) * factorial(b) * factorial(c));
}

Tracked poisson_weight(const Tracked& mean, unsigned k) {
  if (mean.value == 0.0 && mean.err == 0.0) return Tracked(k == 0 ? 1.0 : 0.0);
  Tracked w = exp(-mean);
  for (unsigned i = 1; i <= k; ++i) {
    w = w * mean / Tracked(static_cast<double>(i));
  }
  return w;
}

double binomial_weighted_tail(unsigned cutoff, unsigned n, double anchor, double ratio) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (anchor == 0.0) return 0.0;
  if (!(ratio >= 0.0) || !std::isfinite(anchor)) return kInf;
  if (ratio == 0.0) return 0.0;
  if (ratio >= 1.0) return kInf;
  // Terms t_j = C(j, n) A rho^(j-K) for j > K. Their ratio (j+1) rho / (j+1-n)
  // falls towards rho, so sum explicitly until it drops below 1/2, then bound
  // the remainder geometrically. Log space keeps C(j, n) representable.
  const double log_anchor = std::log(anchor);
  const double log_ratio = std::log(ratio);
  auto log_term = [&](unsigned j) {
    return std::lgamma(j + 1.0) - std::lgamma(n + 1.0) - std::lgamma(j - n + 1.0) + log_anchor +
           static_cast<double>(j - cutoff) * log_ratio;
  };
  unsigned j = std::max(cutoff + 1, n);
  double sum = 0.0;
  for (unsigned steps = 0; steps < 1000000; ++steps, ++j) {
    const double theta = ratio * static_cast<double>(j + 1) / static_cast<double>(j + 1 - n);
    const double t = std::exp(log_term(j));
    if (theta <= 0.5) {
      sum += t / (1.0 - theta);
      // lgamma-based terms carry a small relative error; widen generously.
      return sum * (1.0 + 1e-9);
    }
    sum += t;
    if (!std::isfinite(sum)) return kInf;
  }
  return kInf;
}

Rational binomial_geometric_sum(unsigned m, unsigned a, const Rational& y) {
  if (abs(y) >= 1) throw std::domain_error("binomial_geometric_sum requires |y| < 1");
  const Rational one_minus = 1 - y;
  Rational total(0);
  for (unsigned l = 0; l <= std::min(m, a); ++l) {
    const unsigned power = m + a - l;
    const Integer coeff = factorial(power) / (factorial(l) * factorial(m - l) * factorial(a - l));
    total += Rational(coeff) * pow_int<Rational>(y, power) / pow_int<Rational>(one_minus, power + 1);
  }
  return total;
}

}  // namespace qjoint
