#include "qjoint/phase_number.hpp"

#include <cmath>
#include <limits>
#include <set>

namespace qjoint::pn {

std::string to_string(MDefinition d) {
  switch (d) {
    case MDefinition::normalized: return "normalized";
    case MDefinition::difference: return "difference";
    case MDefinition::n1: return "n1";
  }
  return "normalized";
}

MDefinition parse_m_definition(const std::string& text) {
  if (text == "normalized") return MDefinition::normalized;
  if (text == "difference") return MDefinition::difference;
  if (text == "n1") return MDefinition::n1;
  throw ParseError("unknown m definition '" + text + "' (normalized, difference, n1)");
}

ReferenceBeam::ReferenceBeam(Rational n) : nbar(std::move(n)) {
  if (nbar < 0) throw std::invalid_argument("reference nbar must be non-negative");
}

Rational m_value(MDefinition d, unsigned total, unsigned n1) {
  const long diff = 2L * n1 - static_cast<long>(total);
  switch (d) {
    case MDefinition::normalized:
      return total == 0 ? Rational(0) : Rational(Integer(diff), Integer(total));
    case MDefinition::difference: return Rational(Integer(diff));
    case MDefinition::n1: return Rational(Integer(n1));
  }
  return Rational(0);
}

std::vector<Rational> m_grid(MDefinition d, unsigned total) {
  if (d == MDefinition::normalized && total == 0) return {Rational(0)};
  std::vector<Rational> g;
  g.reserve(total + 1);
  for (unsigned n1 = 0; n1 <= total; ++n1) g.push_back(m_value(d, total, n1));
  return g;
}

std::optional<unsigned> n1_of(MDefinition d, unsigned total, const Rational& m) {
  Rational n1;
  switch (d) {
    case MDefinition::normalized: n1 = Rational(total) * (1 + m) / 2; break;
    case MDefinition::difference: n1 = (Rational(total) + m) / 2; break;
    case MDefinition::n1: n1 = m; break;
  }
  if (denominator(n1) != 1 || n1 < 0 || n1 > total) return std::nullopt;
  return numerator(n1).convert_to<unsigned>();
}

template <ScalarType S>
Tracked weighted_value(const S& stored, const Rational& w) {
  Tracked v;
  if constexpr (std::is_same_v<S, Rational>) {
    v = from_rational<Tracked>(stored);
  } else {
    v = stored;
  }
  if (w == 0) return v;
  return v * exp(from_rational<Tracked>(w));
}

template <ScalarType S>
std::size_t RaggedJoint<S>::cell_count() const {
  std::size_t c = 0;
  for (const auto& row : rows) c += row.size();
  return c;
}

template <ScalarType S>
S RaggedJoint<S>::stored(unsigned total, const Rational& m) const {
  if (total >= rows.size()) return S(0);
  const auto it = rows[total].find(m);
  return it == rows[total].end() ? S(0) : it->second;
}

template <ScalarType S>
Tracked RaggedJoint<S>::total() const {
  S sum(0);
  for (const auto& row : rows)
    for (const auto& [m, v] : row) sum += v;
  return weighted_value(sum, exp_weight);
}

// ---------------------------------------------------------------------------

namespace {

// Upper tails P(X > k) of Poisson(nbar) for k = 0..upto.
std::vector<double> poisson_upper_tails(double nbar, unsigned upto) {
  std::vector<double> q(upto + 1, 0.0);
  if (nbar == 0.0) return q;
  const unsigned extra = 60 + static_cast<unsigned>(std::ceil(nbar + 12.0 * std::sqrt(nbar)));
  const unsigned last = upto + extra;
  std::vector<double> pmf(last + 1);
  for (unsigned i = 0; i <= last; ++i) {
    pmf[i] = std::exp(i * std::log(nbar) - nbar - std::lgamma(i + 1.0));
  }
  // Beyond `last` the pmf ratio nbar/(i+1) is below 1/2, so the remainder is
  // at most the final term.
  double suffix = pmf[last];
  for (unsigned i = last; i-- > 0;) {
    if (i <= upto) q[i] = suffix;
    suffix += pmf[i];
  }
  return q;
}

// A(n, n1, n2) = sum_j C(n, j) (-1)^(n2-n+j) n1!/(n1-j)! n2!/(n2-n+j)!.
// Output probability of |n>|beta> is A^2 / (n1! n2! n! 2^n) (nbar/2)^(N-n) e^{-nbar}.
Integer amplitude_sum(unsigned n, unsigned n1, unsigned n2) {
  Integer sum(0);
  const unsigned lo = n > n2 ? n - n2 : 0;
  const unsigned hi = std::min(n, n1);
  for (unsigned j = lo; j <= hi; ++j) {
    const unsigned d2 = n2 + j - n;
    Integer t = binomial_integer(n, j) * (factorial(n1) / factorial(n1 - j)) *
                (factorial(n2) / factorial(d2));
    if (d2 % 2 == 1) t = -t;
    sum += t;
  }
  return sum;
}

}  // namespace

double pn_mass_deficit(const std::vector<double>& p, double p_tail, const Rational& nbar,
                       unsigned cutoff) {
  const std::vector<double> q = poisson_upper_tails(nbar.convert_to<double>(), cutoff);
  double deficit = p_tail;
  for (std::size_t n = 0; n < p.size(); ++n) {
    const double mass = std::abs(p[n]);
    deficit += n <= cutoff ? mass * q[cutoff - n] : mass;
  }
  return deficit;
}

template <ScalarType S>
PNObserved<S> pn_forward(const NumberDistribution<S>& p, const ReferenceBeam& ref,
                         const ForwardOptions& options) {
  std::vector<double> pd;
  for (const auto& v : p.probs) pd.push_back(to_double(v));

  unsigned C = 0;
  double deficit = 0.0;
  if (options.cutoff) {
    C = *options.cutoff;
    deficit = pn_mass_deficit(pd, p.tail_bound, ref.nbar, C);
  } else {
    constexpr unsigned kMaxCutoff = 400;
    for (C = 0;; ++C) {
      deficit = pn_mass_deficit(pd, p.tail_bound, ref.nbar, C);
      if (deficit <= options.tolerance || C == kMaxCutoff) break;
    }
  }
  if (!(deficit <= options.tolerance)) {
    throw CutoffTooSmall("output mass beyond N = " + std::to_string(C) + " is " +
                         std::to_string(deficit) + ", above tolerance");
  }

  PNObserved<S> out;
  out.cutoff = C;
  out.mass_deficit = deficit;
  out.exp_weight = -ref.nbar;
  out.joint.values = Matrix<S>::Zero(C + 1, C + 1);
  out.joint.row_labels = range_labels(C + 1);
  out.joint.col_labels = range_labels(C + 1);

  const Rational half_nbar = ref.nbar / 2;
  std::vector<Rational> half_power(C + 1);
  half_power[0] = 1;
  for (unsigned i = 1; i <= C; ++i) half_power[i] = half_power[i - 1] * half_nbar;

  for (unsigned n = 0; n <= std::min(C, p.cutoff); ++n) {
    if (to_double(p.probs[n]) == 0.0 && error_bound(p.probs[n]) == 0.0) continue;
    const Integer norm = factorial(n) << n;
    for (unsigned total = n; total <= C; ++total) {
      if (half_power[total - n] == 0) continue;
      for (unsigned n1 = 0; n1 <= total; ++n1) {
        const unsigned n2 = total - n1;
        const Integer a = amplitude_sum(n, n1, n2);
        if (a == 0) continue;
        const Rational coeff =
            Rational(a * a, factorial(n1) * factorial(n2) * norm) * half_power[total - n];
        out.joint.values(n1, n2) += from_rational<S>(coeff) * p.probs[n];
      }
    }
  }
  return out;
}

template <ScalarType S>
RaggedJoint<S> to_ragged(const JointGrid<S>& joint, MDefinition mdef, const Rational& exp_weight,
                         std::optional<unsigned> max_total_opt) {
  RaggedJoint<S> r;
  r.mdef = mdef;
  r.exp_weight = exp_weight;
  r.is_signed = joint.is_signed;
  const unsigned max_total = max_total_opt.value_or(
      joint.rows() == 0 ? 0 : static_cast<unsigned>(joint.rows() - 1 + joint.cols() - 1));
  r.rows.resize(max_total + 1);
  for (unsigned total = 0; total <= max_total; ++total) {
    for (unsigned n1 = 0; n1 <= total; ++n1) {
      const unsigned n2 = total - n1;
      const bool inside = n1 < joint.rows() && n2 < joint.cols();
      r.rows[total][m_value(mdef, total, n1)] = inside ? joint.values(n1, n2) : S(0);
    }
  }
  return r;
}

template <ScalarType S>
JointGrid<S> from_ragged(const RaggedJoint<S>& r) {
  const unsigned E = r.max_total();
  JointGrid<S> g;
  g.values = Matrix<S>::Zero(E + 1, E + 1);
  g.row_labels = range_labels(E + 1);
  g.col_labels = range_labels(E + 1);
  g.is_signed = r.is_signed;
  for (unsigned total = 0; total <= E; ++total) {
    for (const auto& [m, v] : r.rows[total]) {
      const auto n1 = n1_of(r.mdef, total, m);
      if (!n1) {
        throw DimensionMismatch("m = " + format_rational(m) + " has no (n1, n2) cell at N = " +
                                std::to_string(total));
      }
      g.values(*n1, total - *n1) = v;
    }
  }
  return g;
}

template <ScalarType S>
ScaledVector<S> pn_total_marginal(const RaggedJoint<S>& r) {
  ScaledVector<S> out;
  out.exp_weight = r.exp_weight;
  out.values = Vector<S>::Zero(static_cast<Eigen::Index>(r.rows.size()));
  for (std::size_t total = 0; total < r.rows.size(); ++total) {
    S sum(0);
    for (const auto& [m, v] : r.rows[total]) sum += v;
    out.values(static_cast<Eigen::Index>(total)) = sum;
  }
  return out;
}

namespace {

// (-nbar)^d / d! for d = 0..upto.
template <ScalarType S>
std::vector<S> inverse_poisson_coefficients(const Rational& nbar, unsigned upto) {
  std::vector<S> c;
  c.reserve(upto + 1);
  Rational t(1);
  for (unsigned d = 0; d <= upto; ++d) {
    if (d > 0) t = t * (-nbar) / d;
    c.push_back(from_rational<S>(t));
  }
  return c;
}

}  // namespace

template <ScalarType S>
ScaledKernel<S> pn_number_kernel(const Rational& nbar, unsigned cutoff) {
  if (nbar < 0) throw std::invalid_argument("reference nbar must be non-negative");
  const std::vector<S> c = inverse_poisson_coefficients<S>(nbar, cutoff);
  ScaledKernel<S> k;
  k.exp_weight = nbar;
  k.kernel.entries = Matrix<S>::Zero(cutoff + 1, cutoff + 1);
  for (unsigned n = 0; n <= cutoff; ++n)
    for (unsigned total = 0; total <= n; ++total) k.kernel.entries(n, total) = c[n - total];
  k.kernel.labels = range_labels(cutoff + 1);
  return k;
}

template <ScalarType S>
RaggedJoint<S> pn_retrieve(const RaggedJoint<S>& observed, const Rational& nbar) {
  if (nbar < 0) throw std::invalid_argument("reference nbar must be non-negative");
  const unsigned E = observed.max_total();
  const std::vector<S> c = inverse_poisson_coefficients<S>(nbar, E);
  RaggedJoint<S> out;
  out.mdef = observed.mdef;
  out.exp_weight = observed.exp_weight + nbar;
  out.is_signed = true;
  out.rows.resize(observed.rows.size());

  std::set<Rational> keys;
  for (unsigned n = 0; n < observed.rows.size(); ++n) {
    for (const auto& [m, v] : observed.rows[n]) keys.insert(m);
    for (const auto& m : keys) {
      S sum(0);
      for (unsigned total = 0; total <= n; ++total) {
        const auto it = observed.rows[total].find(m);
        if (it != observed.rows[total].end()) sum += c[n - total] * it->second;
      }
      out.rows[n].emplace(m, sum);
    }
  }
  return out;
}

template <ScalarType S>
S pc_identity(const NumberDistribution<S>& p, const Rational& nbar) {
  const S v = from_rational<S>(nbar) * p.at(0);
  return -v;
}

template <ScalarType S>
VacuumVerdict vacuum_verdict(const NumberDistribution<S>& p, const Rational& nbar) {
  if (!(nbar > 0)) throw std::invalid_argument("vacuum verdict needs a reference with nbar > 0");
  VacuumVerdict v;
  const S p0 = p.at(0);
  v.nonclassical = to_double(p0) > error_bound(p0);
  if (v.nonclassical) {
    v.note = "p(0) > 0, so the retrieved cell (N=1, m=0) = -nbar p(0) is negative";
  } else {
    v.note =
        "p(0) = 0: this scheme shows no negativity at (N=1, m=0); the complementary case is "
        "covered by the Lee criterion, which is not implemented here";
  }
  return v;
}

template <ScalarType S>
RaggedMinimum ragged_minimum(const RaggedJoint<S>& r) {
  RaggedMinimum best;
  bool first = true;
  for (unsigned total = 0; total < r.rows.size(); ++total) {
    for (const auto& [m, stored] : r.rows[total]) {
      const Tracked v = weighted_value(stored, r.exp_weight);
      if (v.value < -v.err) best.negative_mass += v.value;
      if (first || v.value < best.value.value) {
        best.total = total;
        best.m = m;
        best.value = v;
        first = false;
      }
    }
  }
  best.nonclassical = best.negative_mass < 0.0;
  return best;
}

#define QJOINT_PN_INSTANTIATE(S)                                                          \
  template Tracked weighted_value(const S&, const Rational&);                             \
  template struct RaggedJoint<S>;                                                         \
  template PNObserved<S> pn_forward(const NumberDistribution<S>&, const ReferenceBeam&,   \
                                    const ForwardOptions&);                               \
  template RaggedJoint<S> to_ragged(const JointGrid<S>&, MDefinition, const Rational&,   \
                                    std::optional<unsigned>);                             \
  template JointGrid<S> from_ragged(const RaggedJoint<S>&);                               \
  template ScaledVector<S> pn_total_marginal(const RaggedJoint<S>&);                      \
  template ScaledKernel<S> pn_number_kernel(const Rational&, unsigned);                   \
  template RaggedJoint<S> pn_retrieve(const RaggedJoint<S>&, const Rational&);            \
  template S pc_identity(const NumberDistribution<S>&, const Rational&);                  \
  template VacuumVerdict vacuum_verdict(const NumberDistribution<S>&, const Rational&);   \
  template RaggedMinimum ragged_minimum(const RaggedJoint<S>&);
QJOINT_PN_INSTANTIATE(Rational)
QJOINT_PN_INSTANTIATE(Tracked)

}  // namespace qjoint::pn
