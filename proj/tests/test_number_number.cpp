#include "qjoint/number_number.hpp"

#include <gtest/gtest.h>

using namespace qjoint;
using namespace qjoint::nn;

namespace {

template <ScalarType S>
NumberDistribution<S> dist(const std::string& text, std::optional<unsigned> cutoff = {}) {
  DistributionOptions o;
  o.cutoff = cutoff;
  return number_distribution<S>(parse_state_spec(text), o);
}

template <ScalarType S>
NNRetrieved<S> retrieve(const std::string& text, std::optional<unsigned> extent = {}) {
  RetrieveOptions o;
  o.extent = extent;
  return nn_retrieve(nn_source_distribution<S>(parse_state_spec(text), o), o);
}

}  // namespace

TEST(NNForward, Vacuum) {
  const auto obs = nn_forward(dist<Rational>("vacuum"));
  EXPECT_EQ(obs.joint.values(0, 0), Rational(1));
  EXPECT_EQ(obs.joint.total(), Rational(1));
}

TEST(NNForward, FockOne) {
  const auto obs = nn_forward(dist<Rational>("fock:1"));
  EXPECT_EQ(obs.joint.values(0, 0), Rational(0));
  EXPECT_EQ(obs.joint.values(1, 0), Rational(1, 2));
  EXPECT_EQ(obs.joint.values(0, 1), Rational(1, 2));
}

TEST(NNForward, FockSevenAntidiagonal) {
  const auto obs = nn_forward(dist<Rational>("fock:7"));
  for (unsigned a = 0; a <= 7; ++a) {
    for (unsigned b = 0; a + b <= 7; ++b) {
      const Rational expect = a + b == 7 ? binomial<Rational>(7, a) / 128 : Rational(0);
      EXPECT_EQ(obs.joint.values(a, b), expect);
    }
  }
}

TEST(NNForward, SymmetricAndNormalized) {
  const auto obs = nn_forward(dist<Rational>("pats:k=2,nbar=1/3", 25));
  EXPECT_EQ(obs.joint.values, obs.joint.values.transpose());
  Rational mass(0);
  for (unsigned n = 0; n <= 25; ++n) mass += dist<Rational>("pats:k=2,nbar=1/3", 25).at(n);
  EXPECT_EQ(obs.joint.total(), mass);
}

TEST(NNMarginalKernel, Entries) {
  const auto k = nn_marginal_kernel<Rational>(8);
  for (unsigned j = 0; j <= 8; ++j) {
    EXPECT_EQ(k.entries(0, j), Rational(j % 2 ? -1 : 1));
    EXPECT_EQ(k.entries(j, j), Rational(Integer(1) << j));
    for (unsigned i = j + 1; i <= 8; ++i) EXPECT_EQ(k.entries(i, j), Rational(0));
  }
}

TEST(NNMarginalKernel, FockThreeRoundTrip) {
  const unsigned c = 5;
  const auto p = dist<Rational>("fock:3", c);
  Vector<Rational> pv(c + 1);
  for (unsigned n = 0; n <= c; ++n) pv(n) = p.at(n);
  const Vector<Rational> observed = nn_forward_matrix<Rational>(c) * pv;
  const Vector<Rational> back = invert_marginal(nn_marginal_kernel<Rational>(c), observed);
  EXPECT_EQ(back, pv);
}

TEST(NNRetrieve, FockOne) {
  const auto r = retrieve<Rational>("fock:1");
  EXPECT_EQ(r.joint.values(0, 0), Rational(-1));
  EXPECT_EQ(r.joint.values(1, 0), Rational(1));
  EXPECT_EQ(r.joint.values(0, 1), Rational(1));
  EXPECT_EQ(r.joint.values(1, 1), Rational(0));
  EXPECT_TRUE(r.all_converged);
}

TEST(NNRetrieve, FockSevenMinimum) {
  const auto r = retrieve<Rational>("fock:7");
  EXPECT_EQ(r.joint.values(2, 2), Rational(-210));
  EXPECT_EQ(r.extent, 7u);
  for (unsigned a = 0; a <= 7; ++a)
    for (unsigned b = 0; a + b <= 7; ++b)
      EXPECT_EQ(r.joint.values(a, b) > 0, (7 - a - b) % 2 == 0) << a << "," << b;
}

TEST(NNRetrieve, MatchesFockOracle) {
  for (unsigned n = 0; n <= 12; ++n) {
    const auto r = retrieve<Rational>("fock:" + std::to_string(n), n);
    const auto o = nn_retrieve_fock_oracle(n, n);
    EXPECT_EQ(r.joint.values, o.values) << n;
  }
  EXPECT_EQ(nn_retrieve_fock_oracle(0).values(0, 0), Rational(1));
  const auto o7 = nn_retrieve_fock_oracle(7);
  EXPECT_EQ(o7.values(2, 2), Rational(-210));
  EXPECT_EQ(o7.values(3, 4), Rational(35));
  EXPECT_EQ(o7.values(1, 2), Rational(105));
}

TEST(NNRetrieve, PhotonAddedThermal) {
  const auto r = retrieve<Rational>("pats:k=1,nbar=1", 10);
  EXPECT_EQ(r.joint.values(0, 0), Rational(-1, 9));
  int negative = 0;
  for (Eigen::Index a = 0; a < r.joint.rows(); ++a)
    for (Eigen::Index b = 0; b < r.joint.cols(); ++b) negative += r.joint.values(a, b) < 0;
  EXPECT_EQ(negative, 1);
  // mpmath series, 50 digits
  EXPECT_NEAR(to_double(r.joint.values(1, 0)), 0.037037037037037037037, 1e-15);
  EXPECT_NEAR(to_double(r.joint.values(2, 1)), 0.061728395061728395062, 1e-15);
  EXPECT_NEAR(to_double(r.joint.values(3, 3)), 0.033531473860691967688, 1e-15);
}

TEST(NNRetrieve, PatsMinimumFormula) {
  for (const char* nbar : {"1/2", "2", "3/7"}) {
    const Rational nb = parse_rational(nbar);
    const auto r = retrieve<Rational>(std::string("pats:k=1,nbar=") + nbar, 4);
    EXPECT_EQ(r.joint.values(0, 0), Rational(-1) / ((2 * nb + 1) * (2 * nb + 1))) << nbar;
  }
}

TEST(NNRetrieve, SqueezedVacuum) {
  const auto r = retrieve<Tracked>("sqvac:r=0.3", 4);
  // mpmath series, 50 digits
  const double expect[][3] = {{0, 1, -0.092732609121133851876},
                              {1, 1, 0.11853061950437284366},
                              {0, 2, 0.059265309752186421828},
                              {2, 2, 0.039232034458941460028},
                              {1, 3, 0.026154689639294306685}};
  for (const auto& e : expect) {
    const int a = static_cast<int>(e[0]), b = static_cast<int>(e[1]);
    EXPECT_NEAR(r.joint.values(a, b).value, e[2], 1e-9);
    EXPECT_LE(std::abs(r.joint.values(a, b).value - e[2]), r.joint.cell_error(a, b) + 1e-15);
  }
  EXPECT_EQ(r.joint.values(0, 1).value, r.joint.values(1, 0).value);
  EXPECT_TRUE(r.all_converged);
  EXPECT_LE(r.max_cell_error, 1e-9);
}

TEST(NNRetrieve, ExactSymmetry) {
  for (const char* text : {"pats:k=2,nbar=1/2", "thermal:nbar=1/4", "custom:0.1,0.2,0.3,0.4"}) {
    const auto r = retrieve<Rational>(text, 6);
    EXPECT_EQ(r.joint.values, r.joint.values.transpose()) << text;
  }
}

TEST(NNRetrieve, MarginalsRecoverSource) {
  const auto p = dist<Rational>("custom:0.1,0.2,0.3,0.4");
  RetrieveOptions o;
  const auto r = nn_retrieve(p, o);
  const auto [mx, my] = marginals(r.joint);
  for (unsigned n = 0; n <= 3; ++n) {
    EXPECT_EQ(mx(n), p.at(n));
    EXPECT_EQ(my(n), p.at(n));
  }
  EXPECT_EQ(r.joint.total(), Rational(1));
}

TEST(NNRetrieve, ThermalMatchesPFunction) {
  const StateSpec spec = parse_state_spec("thermal:nbar=1/2");
  const auto r = retrieve<Rational>("thermal:nbar=1/2", 6);
  for (unsigned a = 0; a <= 6; ++a) {
    for (unsigned b = 0; b <= 6; ++b) {
      EXPECT_EQ(r.joint.values(a, b), nn_pfunction_oracle<Rational>(spec, a, b));
      EXPECT_GE(r.joint.values(a, b), 0);
    }
  }
  // fractions: N!/(n1! n2!) nbar^N / (1+2 nbar)^(N+1)
  EXPECT_EQ(nn_pfunction_oracle<Rational>(spec, 0, 0), Rational(1, 2));
  EXPECT_EQ(nn_pfunction_oracle<Rational>(spec, 1, 2), Rational(3, 128));
  EXPECT_EQ(nn_pfunction_oracle<Rational>(spec, 3, 3), Rational(5, 2048));
}

TEST(NNRetrieve, CoherentMatchesPFunction) {
  const StateSpec spec = parse_state_spec("coherent:nbar=1");
  const auto r = retrieve<Tracked>("coherent:nbar=1", 8);
  EXPECT_TRUE(r.all_converged);
  for (unsigned a = 0; a <= 8; ++a)
    for (unsigned b = 0; b <= 8; ++b)
      EXPECT_NEAR(r.joint.values(a, b).value, nn_pfunction_oracle<Tracked>(spec, a, b).value, 1e-10);
  EXPECT_NEAR(r.joint.values(0, 0).value, 0.13533528323661269189, 1e-12);
  EXPECT_NEAR(r.joint.values(2, 3).value, 0.011277940269717724324, 1e-12);
}

TEST(NNPFunction, VacuumAndUnsupported) {
  EXPECT_EQ(nn_pfunction_oracle<Rational>(parse_state_spec("thermal:nbar=0"), 0, 0), Rational(1));
  EXPECT_THROW(nn_pfunction_oracle<Tracked>(parse_state_spec("fock:1"), 0, 0), UnsupportedState);
}

TEST(ParityWigner, Values) {
  EXPECT_EQ(parity_wigner_origin(dist<Rational>("fock:1")), Rational(-1));
  EXPECT_EQ(parity_wigner_origin(dist<Rational>("vacuum")), Rational(1));
  const Tracked t = parity_wigner_origin(dist<Tracked>("thermal:nbar=1"));
  EXPECT_NEAR(t.value, 1.0 / 3.0, 1e-14);
  // p(0,0) of the retrieved joint is the parity
  const auto r = retrieve<Rational>("pats:k=1,nbar=1", 2);
  EXPECT_NEAR(to_double(parity_wigner_origin(dist<Rational>("pats:k=1,nbar=1", 200))),
              to_double(r.joint.values(0, 0)), 1e-15);
}

TEST(NNScan, SqueezedVacuumThreshold) {
  const auto rows = nn_stability_scan("sqvac", {0.05, 0.1, 0.3}, ScalarMode::tracked, 1e-9);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_TRUE(rows[0].joint_reliable);
  EXPECT_TRUE(rows[1].joint_reliable);
  EXPECT_FALSE(rows[2].joint_reliable);
  for (const auto& row : rows) EXPECT_TRUE(row.marginal_reliable) << row.parameter;
}

TEST(NNScan, FockExact) {
  const auto rows = nn_stability_scan("fock", {7}, ScalarMode::rational, 1e-9);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_TRUE(rows[0].joint_reliable);
  EXPECT_EQ(rows[0].joint_max_error, 0.0);
  EXPECT_EQ(rows[0].marginal_max_residual, 0.0);
}

TEST(NNScan, Coherent) {
  const auto rows = nn_stability_scan("coherent", {1}, ScalarMode::tracked, 1e-9);
  EXPECT_TRUE(rows[0].joint_converged);
}
