#ifndef QJOINT_STATES_HPP
#define QJOINT_STATES_HPP

#include "qjoint/errors.hpp"
#include "qjoint/numerics.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace qjoint {

// ---------------------------------------------------------------------------
// State specifications. Numeric parameters are kept as exact rationals so the
// textual form round-trips and rational-parameter states stay exact.

struct Fock {
  unsigned n = 0;
};
struct Coherent {
  Rational nbar;
};
struct Thermal {
  Rational nbar;
};
struct PhotonAddedThermal {
  unsigned k = 0;
  Rational nbar;
};
struct SqueezedVacuum {
  Rational r;
};
struct Custom {
  std::vector<Rational> probs;
  std::string source;  // "@path" when loaded from a file, empty when inline
};

using StateSpec = std::variant<Fock, Coherent, Thermal, PhotonAddedThermal, SqueezedVacuum, Custom>;

/// Parses `fock:7`, `vacuum`, `coherent:nbar=1`, `thermal:nbar=1/3`,
/// `pats:k=1,nbar=1`, `sqvac:r=0.3`, `custom:0.5,0.5` or `custom:@file.csv`.
StateSpec parse_state_spec(const std::string& text);
std::string to_string(const StateSpec& spec);

/// True when every p(n) is rational for the given parameters.
bool has_rational_distribution(const StateSpec& spec);

/// Default arithmetic for a state: exact for rational-parameter states.
ScalarMode default_mode(const StateSpec& spec);

// ---------------------------------------------------------------------------

/// Exact closed form p(j) = sum_a coeffs[a] * C(j, a) * ratio^j.
///
/// Covers the thermal family (thermal, photon-added thermal) and is closed
/// under the 50/50 binomial thinning of a vacuum-port beam splitter.
struct GeometricMixture {
  Rational ratio;
  std::vector<Rational> coeffs;

  Rational value(unsigned j) const;
  /// sum_j C(j, m) x^j p(j); requires |x * ratio| < 1.
  Rational weighted_sum(unsigned m, const Rational& x) const;
  /// Distribution of one output port when the mode is split 50/50 with vacuum.
  GeometricMixture thinned() const;
};

/// Photon-number probabilities up to `cutoff` with a certified tail.
///
/// Above the cutoff, p(j) <= tail_anchor * tail_ratio^(j - cutoff); a zero
/// anchor means the support ends at the cutoff.
template <ScalarType S>
struct NumberDistribution {
  std::vector<S> probs;
  unsigned cutoff = 0;
  double tail_bound = 0.0;
  double tail_anchor = 0.0;
  double tail_ratio = 0.0;
  std::optional<double> mean;
  std::optional<GeometricMixture> analytic;

  const S& operator[](unsigned n) const { return probs[n]; }
  S at(unsigned n) const { return n <= cutoff ? probs[n] : S(0); }
  bool finite_support() const { return tail_anchor == 0.0 && tail_bound == 0.0; }
};

struct DistributionOptions {
  std::optional<unsigned> cutoff;  // automatic when empty
  double auto_tail = 1e-15;        // automatic cutoff: smallest with tail below this
  double tail_ceiling = 1e-3;      // CutoffTooSmall above this
};

template <ScalarType S>
NumberDistribution<S> number_distribution(const StateSpec& spec,
                                          const DistributionOptions& options = {});

extern template NumberDistribution<Rational> number_distribution(const StateSpec&,
                                                                 const DistributionOptions&);
extern template NumberDistribution<Tracked> number_distribution(const StateSpec&,
                                                                const DistributionOptions&);

NumberDistribution<Tracked> to_tracked(const NumberDistribution<Rational>& d);
inline NumberDistribution<Tracked> to_tracked(const NumberDistribution<Tracked>& d) { return d; }

/// Sum of n p(n) over the stored range (the tail is not included).
template <ScalarType S>
double mean_photon_number(const NumberDistribution<S>& d) {
  double total = 0.0;
  for (unsigned n = 0; n <= d.cutoff; ++n) total += n * to_double(d.probs[n]);
  return total;
}

// ---------------------------------------------------------------------------

/// Qubit state as its Bloch vector, |s| <= 1.
class BlochState {
 public:
  BlochState() = default;
  explicit BlochState(const Eigen::Vector3d& s);
  BlochState(double sx, double sy, double sz) : BlochState(Eigen::Vector3d(sx, sy, sz)) {}

  const Eigen::Vector3d& vector() const { return s_; }
  double x() const { return s_.x(); }
  double y() const { return s_.y(); }
  double z() const { return s_.z(); }
  double norm() const { return s_.norm(); }

 private:
  Eigen::Vector3d s_ = Eigen::Vector3d::Zero();
};

}  // namespace qjoint

#endif  // QJOINT_STATES_HPP
