// Randomized property checks shared by the unit tests and the acceptance
// binary. Each returns how many cases ran and the first failure, if any.
#ifndef QJOINT_TESTS_PROPERTIES_HPP
#define QJOINT_TESTS_PROPERTIES_HPP

#include "qjoint/number_number.hpp"
#include "qjoint/phase_number.hpp"
#include "qjoint/qubit.hpp"

#include <random>
#include <string>

namespace qjoint::props {

struct Outcome {
  int cases = 0;
  int failures = 0;
  std::string first_failure;

  bool ok() const { return cases > 0 && failures == 0; }
  void fail(const std::string& what) {
    if (failures++ == 0) first_failure = what;
  }
};

enum class Scheme { qubit, number_number, phase_number };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::qubit: return "qubit";
    case Scheme::number_number: return "nn";
    case Scheme::phase_number: return "pn";
  }
  return "?";
}

// Random column-stochastic matrix with small rational entries.
inline Matrix<Rational> random_conditionals(std::mt19937_64& gen, Eigen::Index outcomes,
                                            Eigen::Index lambdas) {
  std::uniform_int_distribution<int> w(0, 6);
  Matrix<Rational> m(outcomes, lambdas);
  for (Eigen::Index l = 0; l < lambdas; ++l) {
    std::vector<int> col(static_cast<std::size_t>(outcomes));
    int sum = 0;
    for (auto& c : col) sum += (c = w(gen));
    if (sum == 0) col[0] = sum = 1;
    for (Eigen::Index o = 0; o < outcomes; ++o) m(o, l) = Rational(col[static_cast<std::size_t>(o)], sum);
  }
  return m;
}

struct Channel {
  Matrix<Rational> forward_x, forward_y;  // observed = forward * exact conditionals
  InversionKernel<Rational> kx, ky;
};

inline Matrix<Rational> qubit_channel(const Rational& eta) {
  Matrix<Rational> m(2, 2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) m(a, b) = (1 + eta * qubit::kOutcomes[a] * qubit::kOutcomes[b]) / 2;
  return m;
}

inline Channel channel_for(Scheme s) {
  Channel c;
  switch (s) {
    case Scheme::qubit: {
      // cos and sin of an angle, both rational
      const Rational eta_x(3, 5), eta_y(4, 5);
      c.forward_x = qubit_channel(eta_x);
      c.forward_y = qubit_channel(eta_y);
      c.kx = qubit::qubit_kernel<Rational>(eta_x);
      c.ky = qubit::qubit_kernel<Rational>(eta_y);
      break;
    }
    case Scheme::number_number: {
      const unsigned cut = 5;
      c.forward_x = c.forward_y = nn::nn_forward_matrix<Rational>(cut);
      c.kx = c.ky = nn::nn_marginal_kernel<Rational>(cut);
      break;
    }
    case Scheme::phase_number: {
      // Only N is inverted. The stored Poisson channel and the stored kernel
      // carry opposite exponent weights, so their product is exact.
      const unsigned cut = 5;
      const Rational nbar(3, 2);
      c.forward_x = Matrix<Rational>::Zero(cut + 1, cut + 1);
      for (unsigned n = 0; n <= cut; ++n) {
        Rational pw(1);
        for (unsigned N = n; N <= cut; ++N) {
          c.forward_x(N, n) = pw / Rational(factorial(N - n));
          pw *= nbar;
        }
      }
      c.kx = pn::pn_number_kernel<Rational>(nbar, cut).kernel;
      c.forward_y = Matrix<Rational>::Identity(4, 4);
      c.ky = InversionKernel<Rational>::identity(4);
      break;
    }
  }
  return c;
}

/// Random classical models pushed through the scheme's forward channel and
/// inverted: every cell must be non-negative and equal the exact joint.
inline Outcome classical_positivity(Scheme scheme, int models, std::uint64_t seed) {
  const Channel ch = channel_for(scheme);
  std::mt19937_64 gen(seed);
  Outcome out;
  for (int i = 0; i < models; ++i) {
    const Eigen::Index lambdas = 1 + i % 4;
    ClassicalModel<Rational> exact;
    exact.weights = random_conditionals(gen, lambdas, 1).col(0);
    exact.conditionals_x = random_conditionals(gen, ch.forward_x.cols(), lambdas);
    exact.conditionals_y = random_conditionals(gen, ch.forward_y.cols(), lambdas);
    ClassicalModel<Rational> observed = exact;
    observed.conditionals_x = ch.forward_x * exact.conditionals_x;
    observed.conditionals_y = ch.forward_y * exact.conditionals_y;

    const JointGrid<Rational> retrieved = invert_joint(ch.kx, ch.ky, classical_forward(observed));
    ++out.cases;
    if (retrieved.values != classical_forward(exact).values) {
      out.fail(to_string(scheme) + " model " + std::to_string(i) + ": retrieved joint differs from exact");
      continue;
    }
    for (Eigen::Index a = 0; a < retrieved.rows(); ++a) {
      for (Eigen::Index b = 0; b < retrieved.cols(); ++b) {
        if (retrieved.values(a, b) < 0) {
          out.fail(to_string(scheme) + " model " + std::to_string(i) + ": negative cell");
        }
      }
    }
  }
  return out;
}

/// Forward single-port marginal then the marginal kernel, for Fock n <= 12,
/// thermal and photon-added thermal (exact) and Poisson (certified bound).
inline Outcome marginal_round_trips() {
  Outcome out;
  auto exact_case = [&](const std::string& text, unsigned upto) {
    const auto p = number_distribution<Rational>(parse_state_spec(text));
    const auto back = nn::nn_invert_marginal(nn::nn_forward_marginal(p), upto);
    ++out.cases;
    for (unsigned n = 0; n <= upto; ++n) {
      if (back.values(n) != p.at(n) || back.truncation[n] != 0.0) {
        out.fail(text + " differs at n=" + std::to_string(n));
        return;
      }
    }
  };
  for (unsigned n = 0; n <= 12; ++n) exact_case("fock:" + std::to_string(n), n);
  for (const char* text : {"thermal:nbar=1", "thermal:nbar=1/3", "pats:k=1,nbar=1", "pats:k=3,nbar=2/5"})
    exact_case(text, 8);
  for (const char* text : {"coherent:nbar=1", "coherent:nbar=1/4"}) {
    const auto p = number_distribution<Tracked>(parse_state_spec(text));
    const auto back = nn::nn_invert_marginal(nn::nn_forward_marginal(p), 8);
    ++out.cases;
    for (unsigned n = 0; n <= 8; ++n) {
      const double diff = std::abs(back.values(n).value - p.at(n).value);
      if (diff > back.values(n).err + back.truncation[n] + p.at(n).err) {
        out.fail(std::string(text) + " outside its bound at n=" + std::to_string(n));
        break;
      }
    }
  }
  return out;
}

/// Rational distribution on 0..5 with p(0) > 0, as a custom spec.
inline std::string random_custom_spec(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> w(1, 9);
  std::vector<int> weights;
  int sum = 0;
  for (int n = 0; n < 6; ++n) {
    weights.push_back(n == 0 ? w(gen) : w(gen) - 1);
    sum += weights.back();
  }
  std::string text = "custom:";
  for (int n = 0; n < 6; ++n) text += (n ? "," : "") + std::to_string(weights[n]) + "/" + std::to_string(sum);
  return text;
}

/// The (1, m=0) retrieved cell against -nbar p(0) for random states.
inline Outcome pc_identity_check(int states, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> num(1, 12), den(1, 6);
  Outcome out;
  for (int i = 0; i < states; ++i) {
    const std::string text = random_custom_spec(gen);
    const auto p = number_distribution<Rational>(parse_state_spec(text));
    const Rational nbar(num(gen), den(gen));
    const auto obs = pn::pn_forward(p, pn::ReferenceBeam(nbar));
    const auto r = pn::pn_retrieve(pn::ragged_observed(obs), nbar);
    const Rational expect = pn::pc_identity(p, nbar);
    ++out.cases;
    if (r.exp_weight != 0 || r.stored(1, Rational(0)) != expect || !(expect < 0)) {
      out.fail(text + " with nbar=" + format_rational(nbar));
    }
  }
  return out;
}

}  // namespace qjoint::props

#endif  // QJOINT_TESTS_PROPERTIES_HPP
