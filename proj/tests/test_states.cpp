#include "qjoint/states.hpp"

#include <gtest/gtest.h>

using namespace qjoint;

namespace {

template <ScalarType S>
NumberDistribution<S> dist(const std::string& text, std::optional<unsigned> cutoff = {}) {
  DistributionOptions o;
  o.cutoff = cutoff;
  return number_distribution<S>(parse_state_spec(text), o);
}

}  // namespace

TEST(StateSpec, RoundTripText) {
  for (const char* text : {"fock:7", "vacuum", "coherent:nbar=1", "thermal:nbar=1/3",
                           "pats:k=1,nbar=1", "sqvac:r=0.3", "custom:0.5,0.5"}) {
    const StateSpec s = parse_state_spec(text);
    EXPECT_EQ(to_string(parse_state_spec(to_string(s))), to_string(s)) << text;
  }
}

TEST(StateSpec, Rejects) {
  EXPECT_THROW(parse_state_spec("bogus:1"), ParseError);
  EXPECT_THROW(parse_state_spec("thermal:nbar=-1"), ParseError);
  EXPECT_THROW(parse_state_spec("fock:1.5"), ParseError);
  EXPECT_THROW(parse_state_spec("custom:0.5,-0.5"), ParseError);
  EXPECT_THROW(parse_state_spec("pats:k=1"), ParseError);
}

TEST(StateSpec, DefaultModes) {
  EXPECT_EQ(default_mode(parse_state_spec("fock:3")), ScalarMode::rational);
  EXPECT_EQ(default_mode(parse_state_spec("thermal:nbar=1/2")), ScalarMode::rational);
  EXPECT_EQ(default_mode(parse_state_spec("coherent:nbar=1")), ScalarMode::tracked);
  EXPECT_EQ(default_mode(parse_state_spec("sqvac:r=0.3")), ScalarMode::tracked);
}

TEST(NumberDistribution, Fock) {
  const auto d = dist<Rational>("fock:7");
  for (unsigned n = 0; n <= d.cutoff; ++n) EXPECT_EQ(d.at(n), Rational(n == 7 ? 1 : 0));
  EXPECT_TRUE(d.finite_support());
  EXPECT_EQ(mean_photon_number(d), 7.0);
  EXPECT_EQ(mean_photon_number(dist<Rational>("vacuum")), 0.0);
}

TEST(NumberDistribution, PhotonAddedThermal) {
  const auto d = dist<Rational>("pats:k=1,nbar=1", 30);
  EXPECT_EQ(d.at(0), Rational(0));
  for (unsigned n = 1; n <= 30; ++n) {
    // n/4 (1/2)^{n-1}
    EXPECT_EQ(d.at(n), Rational(n, 4) / Rational(Integer(1) << (n - 1)));
  }
  EXPECT_EQ(d.at(2), Rational(1, 4));
  EXPECT_EQ(d.at(4), Rational(1, 8));
}

TEST(NumberDistribution, ThermalIsPatsWithZeroK) {
  const auto t = dist<Rational>("thermal:nbar=2/3", 25);
  const auto p = dist<Rational>("pats:k=0,nbar=2/3", 25);
  for (unsigned n = 0; n <= 25; ++n) EXPECT_EQ(t.at(n), p.at(n));
}

TEST(NumberDistribution, PatsZeroBelowK) {
  const auto d = dist<Rational>("pats:k=3,nbar=1/2", 20);
  for (unsigned n = 0; n < 3; ++n) EXPECT_EQ(d.at(n), Rational(0));
  EXPECT_GT(d.at(3), Rational(0));
}

TEST(NumberDistribution, SqueezedVacuum) {
  const auto d = dist<Tracked>("sqvac:r=0.3");
  for (unsigned n = 1; n <= d.cutoff; n += 2) EXPECT_EQ(d.at(n).value, 0.0);
  // sinh^2(0.3), mpmath
  EXPECT_NEAR(mean_photon_number(d), 0.092732609121133851876, 1e-13);
  EXPECT_LT(d.tail_bound, 1e-15);
}

TEST(NumberDistribution, CoherentMean) {
  const auto d = dist<Tracked>("coherent:nbar=1", 40);
  EXPECT_NEAR(mean_photon_number(d), 1.0, 1e-12);
}

TEST(NumberDistribution, NormalizedWithTail) {
  for (const char* text : {"coherent:nbar=2", "sqvac:r=0.5", "thermal:nbar=1"}) {
    const auto d = dist<Tracked>(text);
    double sum = 0.0;
    for (const auto& p : d.probs) {
      EXPECT_GE(p.value, 0.0);
      sum += p.value;
    }
    EXPECT_LE(sum, 1.0 + 1e-12) << text;
    EXPECT_GE(sum + d.tail_bound, 1.0 - 1e-12) << text;
    EXPECT_LT(d.tail_bound, 1e-15) << text;
  }
}

TEST(NumberDistribution, IrrationalStatesNeedFloatMode) {
  EXPECT_THROW(dist<Rational>("coherent:nbar=1"), UnsupportedState);
  EXPECT_THROW(dist<Rational>("sqvac:r=0.3"), UnsupportedState);
}

TEST(NumberDistribution, CutoffTooSmall) {
  EXPECT_THROW(dist<Tracked>("thermal:nbar=5", 3), CutoffTooSmall);
}

TEST(GeometricMixture, ThinnedMatchesBinomialSum) {
  const auto d = dist<Rational>("pats:k=2,nbar=1/2", 60);
  ASSERT_TRUE(d.analytic.has_value());
  const GeometricMixture thin = d.analytic->thinned();
  for (unsigned n = 0; n < 6; ++n) {
    Rational direct(0);
    for (unsigned k = n; k < 200; ++k) {
      direct += d.analytic->value(k) * binomial<Rational>(k, n) /
                Rational(Integer(1) << k);
    }
    EXPECT_NEAR((thin.value(n) - direct).convert_to<double>(), 0.0, 1e-40);
  }
}

TEST(BlochState, RejectsOutsideBall) {
  EXPECT_THROW(BlochState(1.0, 1.0, 0.0), std::invalid_argument);
  EXPECT_NO_THROW(BlochState(1.0, 0.0, 0.0));
}
