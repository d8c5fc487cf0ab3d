#ifndef QJOINT_DETAIL_NUMBER_NUMBER_IMPL_HPP
#define QJOINT_DETAIL_NUMBER_NUMBER_IMPL_HPP

#include <algorithm>
#include <cmath>
#include <limits>

namespace qjoint::nn {

namespace detail {

template <ScalarType S>
S half_power(unsigned k) {
  return from_rational<S>(Rational(Integer(1), Integer(1) << k));
}

// Envelope of the single-port marginal beyond the cutoff, derived from the
// source envelope p(i) <= A rho^(i-K): p~(j) <= A/(1-rho/2) (2-rho)^-K rho'^(j-K).
inline std::pair<double, double> thinned_envelope(double anchor, double ratio, unsigned cutoff) {
  if (anchor == 0.0) return {0.0, 0.0};
  if (!(ratio < 2.0) || !std::isfinite(anchor)) {
    return {std::numeric_limits<double>::infinity(), 1.0};
  }
  const double thinned_ratio = ratio / (2.0 - ratio);
  const double log_anchor =
      std::log(anchor) - std::log1p(-ratio / 2.0) - cutoff * std::log(2.0 - ratio);
  const double a = std::max(std::exp(log_anchor), std::numeric_limits<double>::denorm_min());
  return {a * (1.0 + 1e-12), thinned_ratio * (1.0 + 1e-12)};
}

inline double geometric_tail(double anchor, double ratio) {
  if (anchor == 0.0) return 0.0;
  if (!(ratio < 1.0)) return std::numeric_limits<double>::infinity();
  return anchor * ratio / (1.0 - ratio);
}

// Binomial coefficient held as mant * 2^exp and advanced by exact integer
// ratios, so C(k, n) far beyond double range can still weight tiny
// probabilities. rel bounds the accumulated relative error.
class ScaledCount {
 public:
  void times_ratio(unsigned num, unsigned den) {
    mant_ = mant_ * static_cast<double>(num) / static_cast<double>(den);
    rel_ += 2.0 * kUnitRoundoff;
    int e = 0;
    mant_ = std::frexp(mant_, &e);
    exp_ += e;
  }

  // count * 2^shift * v
  Tracked apply(const Tracked& v, long shift = 0) const {
    const int scale = static_cast<int>(std::clamp<long>(exp_ + shift, -4000, 4000));
    const double r = std::ldexp(mant_ * v.value, scale);
    const double carried = std::ldexp(mant_ * v.err, scale);
    const double err = (carried + std::abs(r) * (rel_ + 2.0 * kUnitRoundoff)) * (1.0 + 4.0 * kUnitRoundoff) +
                       std::numeric_limits<double>::denorm_min();
    return {r, err};
  }

 private:
  double mant_ = 1.0;
  long exp_ = 0;
  double rel_ = 0.0;
};

}  // namespace detail

template <ScalarType S>
NNObserved<S> nn_forward(const NumberDistribution<S>& p) {
  const unsigned K = p.cutoff;
  NNObserved<S> out;
  out.source_cutoff = K;
  out.truncation_bound = p.tail_bound;
  out.joint.values = Matrix<S>::Zero(K + 1, K + 1);
  out.joint.row_labels = range_labels(K + 1);
  out.joint.col_labels = range_labels(K + 1);
  for (unsigned total = 0; total <= K; ++total) {
    if (to_double(p.probs[total]) == 0.0 && error_bound(p.probs[total]) == 0.0) continue;
    if constexpr (std::is_same_v<S, Tracked>) {
      detail::ScaledCount c;  // C(total, n1)
      for (unsigned n1 = 0; n1 <= total; ++n1) {
        if (n1 > 0) c.times_ratio(total - n1 + 1, n1);
        out.joint.values(n1, total - n1) = c.apply(p.probs[total], -static_cast<long>(total));
      }
    } else {
      const S scaled = p.probs[total] * detail::half_power<S>(total);
      for (unsigned n1 = 0; n1 <= total; ++n1) {
        out.joint.values(n1, total - n1) = binomial<S>(total, n1) * scaled;
      }
    }
  }
  return out;
}

template <ScalarType S>
InversionKernel<S> nn_marginal_kernel(unsigned cutoff) {
  InversionKernel<S> k;
  k.entries = Matrix<S>::Zero(cutoff + 1, cutoff + 1);
  for (unsigned n = 0; n <= cutoff; ++n) {
    const S scale = pow_int<S>(S(-2), n);
    for (unsigned j = n; j <= cutoff; ++j) {
      const S sign = (j % 2 == 0) ? S(1) : S(-1);
      k.entries(n, j) = scale * binomial<S>(j, n) * sign;
    }
  }
  k.labels = range_labels(cutoff + 1);
  return k;
}

template <ScalarType S>
Matrix<S> nn_forward_matrix(unsigned cutoff) {
  Matrix<S> b = Matrix<S>::Zero(cutoff + 1, cutoff + 1);
  for (unsigned n = 0; n <= cutoff; ++n) {
    const S scale = detail::half_power<S>(n);
    for (unsigned k = 0; k <= n; ++k) b(k, n) = binomial<S>(n, k) * scale;
  }
  return b;
}

template <ScalarType S>
NumberDistribution<S> nn_forward_marginal(const NumberDistribution<S>& p) {
  const unsigned K = p.cutoff;
  NumberDistribution<S> out;
  out.cutoff = K;
  out.probs.assign(K + 1, S(0));
  const auto [anchor, ratio] = detail::thinned_envelope(p.tail_anchor, p.tail_ratio, K);
  out.tail_anchor = anchor;
  out.tail_ratio = ratio;
  out.tail_bound = detail::geometric_tail(anchor, ratio);
  if (p.mean) out.mean = *p.mean / 2.0;

  if constexpr (std::is_same_v<S, Rational>) {
    if (p.analytic) {
      out.analytic = p.analytic->thinned();
      for (unsigned n = 0; n <= K; ++n) out.probs[n] = out.analytic->value(n);
      return out;
    }
  }
  for (unsigned n = 0; n <= K; ++n) {
    S sum(0);
    if constexpr (std::is_same_v<S, Tracked>) {
      detail::ScaledCount c;  // C(k, n)
      for (unsigned k = n; k <= K; ++k) {
        if (k > n) c.times_ratio(k, k - n);
        sum += c.apply(p.probs[k], -static_cast<long>(k));
      }
      const double scaled_anchor = std::ldexp(p.tail_anchor, -static_cast<int>(K));
      sum.err += binomial_weighted_tail(K, n, scaled_anchor, p.tail_ratio / 2.0);
    } else {
      for (unsigned k = n; k <= K; ++k) {
        sum += binomial<S>(k, n) * detail::half_power<S>(k) * p.probs[k];
      }
    }
    out.probs[n] = sum;
  }
  return out;
}

template <ScalarType S>
MarginalInversion<S> nn_invert_marginal(const NumberDistribution<S>& observed, unsigned upto) {
  const unsigned K = observed.cutoff;
  MarginalInversion<S> out;
  out.values.resize(upto + 1);
  out.truncation.assign(upto + 1, 0.0);

  if constexpr (std::is_same_v<S, Rational>) {
    if (observed.analytic) {
      for (unsigned n = 0; n <= upto; ++n) {
        out.values(n) = pow_int<Rational>(Rational(-2), n) *
                        observed.analytic->weighted_sum(n, Rational(-1));
      }
      return out;
    }
  }
  if constexpr (std::is_same_v<S, Tracked>) {
    for (unsigned n = 0; n <= upto; ++n) {
      detail::ScaledCount c;  // C(k, n)
      Tracked sum(0);
      for (unsigned k = n; k <= K; ++k) {
        if (k > n) c.times_ratio(k, k - n);
        const Tracked t = c.apply(observed.probs[k], n);
        sum += (k - n) % 2 == 0 ? t : -t;
      }
      out.values(n) = sum;
    }
  } else {
    const InversionKernel<S> kernel = nn_marginal_kernel<S>(std::max(K, upto));
    Vector<S> column = Vector<S>::Zero(std::max(K, upto) + 1);
    for (unsigned k = 0; k <= K; ++k) column(k) = observed.probs[k];
    const Vector<S> full = invert_marginal(kernel, column);
    out.values = full.head(upto + 1);
  }
  for (unsigned n = 0; n <= upto; ++n) {
    out.truncation[n] = std::ldexp(
        binomial_weighted_tail(K, n, observed.tail_anchor, observed.tail_ratio), static_cast<int>(n));
  }
  return out;
}

template <ScalarType S>
NNRetrieved<S> nn_retrieve(const NumberDistribution<S>& p, const RetrieveOptions& options) {
  const unsigned K = p.cutoff;
  const unsigned E = options.extent.value_or(default_extent(p, options.negligible_mass));
  NNRetrieved<S> out;
  out.extent = E;
  out.joint.values = Matrix<S>::Zero(E + 1, E + 1);
  out.joint.extra_error = Eigen::MatrixXd::Zero(E + 1, E + 1);
  out.joint.row_labels = range_labels(E + 1);
  out.joint.col_labels = range_labels(E + 1);
  out.joint.is_signed = true;

  for (unsigned total = 0; total <= 2 * E; ++total) {
    SeriesDiagnostics diag;
    diag.total = total;
    S antidiagonal(0);

    bool closed = false;
    if constexpr (std::is_same_v<S, Rational>) {
      if (p.analytic) {
        const Rational sign = total % 2 == 0 ? Rational(1) : Rational(-1);
        antidiagonal = sign * p.analytic->weighted_sum(total, Rational(-1));
        diag.converged = true;
        diag.closed_form = true;
        closed = true;
      }
    }
    if (!closed) {
      // Largest cell multiplier C(N, n1) that lands inside the square.
      const unsigned lo = total > E ? total - E : 0;
      const unsigned mid = std::clamp(total / 2, lo, std::min(total, E));
      const double spread = binomial_integer(total, mid).convert_to<double>();
      const double tolerance = options.cell_tolerance / spread;

      const double exhausted =
          p.finite_support() ? 0.0 : binomial_weighted_tail(K, total, p.tail_anchor, p.tail_ratio);
      S coeff(1);  // C(N + k, N)
      detail::ScaledCount scaled;
      double abs_sum = 0.0;
      auto term = [&](std::size_t k) -> std::optional<S> {
        const unsigned j = total + static_cast<unsigned>(k);
        if (j > K) return std::nullopt;
        S t;
        if constexpr (std::is_same_v<S, Tracked>) {
          if (k > 0) scaled.times_ratio(j, static_cast<unsigned>(k));
          t = scaled.apply(p.probs[j]);
        } else {
          if (k > 0) coeff = coeff * S(static_cast<int>(j)) / S(static_cast<int>(k));
          t = coeff * p.probs[j];
        }
        if (k % 2 == 1) t = -t;
        abs_sum += std::abs(to_double(t));
        return t;
      };
      SeriesOptions so;
      so.safety_factor = 100.0;
      so.exhausted_tail = exhausted;
      so.tail_certifier = [&](std::size_t k) {
        return total + k >= K ? exhausted : std::numeric_limits<double>::infinity();
      };
      const std::size_t max_terms = total <= K ? K - total + 2 : 1;
      auto series = alternating_sum<S>(term, tolerance, max_terms, so);
      antidiagonal = series.sum;
      diag.terms_used = series.terms_used;
      diag.truncation_bound = series.truncation_bound;
      diag.abs_term_sum = abs_sum;
      diag.converged = series.converged && std::isfinite(to_double(series.sum)) &&
                       std::isfinite(error_bound(series.sum));
    }

    for (unsigned n1 = total > E ? total - E : 0; n1 <= std::min(total, E); ++n1) {
      const unsigned n2 = total - n1;
      const S multiplier = binomial<S>(total, n1);
      out.joint.values(n1, n2) = multiplier * antidiagonal;
      out.joint.extra_error(n1, n2) = to_double(multiplier) * diag.truncation_bound;
      const double cell_err = out.joint.cell_error(n1, n2);
      out.max_cell_error = std::max(out.max_cell_error, std::isfinite(cell_err)
                                                            ? cell_err
                                                            : std::numeric_limits<double>::infinity());
    }
    out.all_converged = out.all_converged && diag.converged;
    out.diagnostics.push_back(diag);
  }
  return out;
}

template <ScalarType S>
S nn_pfunction_oracle(const StateSpec& spec, unsigned n1, unsigned n2) {
  const unsigned total = n1 + n2;
  if (const auto* t = std::get_if<Thermal>(&spec)) {
    const Rational& nbar = t->nbar;
    const Rational value = Rational(binomial_integer(total, n1)) * pow_int<Rational>(nbar, total) /
                           pow_int<Rational>(1 + 2 * nbar, total + 1);
    return from_rational<S>(value);
  }
  if (const auto* c = std::get_if<Coherent>(&spec)) {
    if (c->nbar == 0) return S(total == 0 ? 1 : 0);
    if constexpr (std::is_same_v<S, Rational>) {
      throw UnsupportedState("coherent P-function oracle is irrational; use float mode");
    } else {
      const Tracked m = from_rational<Tracked>(c->nbar);
      const Tracked denom =
          scalar_traits<Tracked>::from_integer(factorial(n1) * factorial(n2));
      return pow_int<Tracked>(m, total) * exp(Tracked(-2.0) * m) / denom;
    }
  }
  throw UnsupportedState("P-function oracle needs a coherent or thermal state");
}

template <ScalarType S>
S parity_wigner_origin(const NumberDistribution<S>& p) {
  if constexpr (std::is_same_v<S, Rational>) {
    if (p.analytic) return p.analytic->weighted_sum(0, Rational(-1));
  }
  S sum(0);
  for (unsigned n = 0; n <= p.cutoff; ++n) sum += n % 2 == 0 ? p.probs[n] : S(-p.probs[n]);
  if constexpr (std::is_same_v<S, Tracked>) sum.err += p.tail_bound;
  return sum;
}

template <ScalarType S>
NumberDistribution<S> nn_source_distribution(const StateSpec& spec, const RetrieveOptions& options,
                                             unsigned* extent_out) {
  NumberDistribution<S> base = number_distribution<S>(spec);
  const unsigned E = options.extent.value_or(default_extent(base, options.negligible_mass));
  if (extent_out) *extent_out = E;
  if (base.finite_support() || (base.analytic.has_value() && std::is_same_v<S, Rational>)) {
    return base;
  }
  auto certified = [&](const NumberDistribution<S>& d) {
    for (unsigned total = 0; total <= 2 * E; ++total) {
      const double spread = binomial_integer(total, total / 2).convert_to<double>();
      const double bound =
          spread * binomial_weighted_tail(d.cutoff, total, d.tail_anchor, d.tail_ratio);
      if (!(bound <= options.cell_tolerance * 1e-2)) return false;
    }
    return true;
  };
  constexpr unsigned kMaxCutoff = 6000;
  unsigned cutoff = std::max(base.cutoff, 2 * E + 20);
  DistributionOptions dopt;
  dopt.tail_ceiling = 1.0;
  for (;;) {
    dopt.cutoff = cutoff;
    NumberDistribution<S> d = number_distribution<S>(spec, dopt);
    if (certified(d) || cutoff >= kMaxCutoff) return d;
    cutoff = std::min(kMaxCutoff, cutoff * 3 / 2 + 10);
  }
}

}  // namespace qjoint::nn

#endif  // QJOINT_DETAIL_NUMBER_NUMBER_IMPL_HPP
