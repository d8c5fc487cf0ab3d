#ifndef QJOINT_QUBIT_HPP
#define QJOINT_QUBIT_HPP

#include "qjoint/inversion.hpp"
#include "qjoint/states.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace qjoint::qubit {

// Outcome order used by every qubit grid and marginal.
inline const Labels kOutcomes{1, -1};

/// Ancilla overlap angle, <a+|a-> = sin(phi).
class QubitScheme {
 public:
  explicit QubitScheme(double phi = std::numbers::pi / 4);

  double phi() const { return phi_; }
  Tracked eta_x() const;  // cos(phi)
  Tracked eta_y() const;  // sin(phi)

 private:
  double phi_;
};

enum class Axis { x, y };

/// Explicit system (x) ancilla model, basis index 2*system + ancilla.
struct CoupledModel {
  Eigen::Vector2cd a_plus;
  Eigen::Vector2cd a_minus;
  Eigen::Vector2cd x_tilde_plus;  // ancilla readout projectors, orthonormal
  Eigen::Vector2cd x_tilde_minus;
  Eigen::Matrix4cd unitary;
};

CoupledModel build_coupled_model(const QubitScheme& scheme);

std::pair<Vector<Tracked>, Vector<Tracked>> exact_marginals(const BlochState& s);

/// Closed-form observed statistics (1 + x s_x cos phi + y s_y sin phi) / 4.
JointGrid<Tracked> observed_joint(const BlochState& s, const QubitScheme& scheme);

/// Same statistics obtained by evolving rho (x) |a><a| under U and projecting.
JointGrid<Tracked> simulate_coupled(const BlochState& s, const QubitScheme& scheme);

/// mu(z, z') = (1 + z z' / eta) / 2 on outcomes {+1, -1}.
template <ScalarType S>
InversionKernel<S> qubit_kernel(const S& eta) {
  if (std::abs(to_double(eta)) <= 1e-12 + error_bound(eta)) {
    throw SingularKernel("qubit kernel needs a non-zero efficiency eta");
  }
  InversionKernel<S> k;
  k.entries.resize(2, 2);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const S zz(static_cast<int>(kOutcomes[a] * kOutcomes[b]));
      k.entries(a, b) = (S(1) + zz / eta) / S(2);
    }
  }
  k.labels = kOutcomes;
  return k;
}

InversionKernel<Tracked> qubit_kernel(const QubitScheme& scheme, Axis axis);

/// The inverted observed statistics; equals (1 + x s_x + y s_y) / 4.
JointGrid<Tracked> retrieved_joint(const BlochState& s, const QubitScheme& scheme);

struct Classification {
  bool nonclassical = false;
  Tracked min_cell;  // (1 - |s_x| - |s_y|)/4 literal; (1 - sqrt2 |s|)/4 optimal
};

/// Negativity for the fixed sigma_x, sigma_y axes.
Classification classify_fixed_axes(const BlochState& s);

/// Negativity after rotating s into the x-y plane at 45 degrees to both axes.
Classification classify_optimal_axes(const BlochState& s);

struct VolumeEstimate {
  double fraction = 0.0;
  double standard_error = 0.0;
  std::uint64_t samples = 0;
};

/// Fraction of the Bloch ball with |s| > 1/sqrt2: 1 - 2^{-3/2}.
double nonclassical_volume_fraction();

/// Uniform-in-ball Monte Carlo estimate. Blocks are seeded independently so
/// the result depends only on (seed, samples, block_size).
VolumeEstimate nonclassical_volume_fraction_mc(std::uint64_t samples, std::uint64_t seed,
                                               std::uint64_t block_size = 1 << 16);

}  // namespace qjoint::qubit

#endif  // QJOINT_QUBIT_HPP
