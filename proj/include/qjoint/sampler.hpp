#ifndef QJOINT_SAMPLER_HPP
#define QJOINT_SAMPLER_HPP

#include "qjoint/inversion.hpp"
#include "qjoint/phase_number.hpp"
#include "qjoint/qubit.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

// Finite-statistics simulation: multinomial click records drawn from a
// forward model, inverted as empirical frequencies.
namespace qjoint::sampling {

/// Outcome pair: (n1, n2) or (x, y) for grids, (N, m) for ragged grids.
struct CellKey {
  long row = 0;
  Rational col;

  friend bool operator==(const CellKey&, const CellKey&) = default;
};

std::string to_string(const CellKey& key);

struct SampleRun {
  std::string scheme;
  std::vector<CellKey> cells;
  std::vector<std::uint64_t> counts;  // parallel to cells
  std::uint64_t overflow = 0;         // shots landing outside the stored cells
  double overflow_probability = 0.0;
  std::uint64_t total = 0;
  std::uint64_t seed = 0;

  std::vector<double> frequencies() const;
};

/// Multinomial sample; cells certified negative throw InvalidDistribution,
/// and missing mass becomes the overflow outcome.
template <ScalarType S>
SampleRun draw(const JointGrid<S>& forward, std::uint64_t shots, std::uint64_t seed,
               const std::string& scheme = "grid");

template <ScalarType S>
SampleRun draw(const pn::RaggedJoint<S>& forward, std::uint64_t shots, std::uint64_t seed,
               const std::string& scheme = "pn");

/// Same counts for the same probabilities, shots and seed.
std::vector<std::uint64_t> multinomial(const std::vector<double>& probs, std::uint64_t shots,
                                       std::uint64_t seed, std::uint64_t stream = 0);

/// Linear map from the frequency vector of a run to inverted cells.
struct Inverter {
  std::vector<CellKey> output_cells;
  std::function<std::vector<double>(const std::vector<double>&)> apply;
};

Inverter qubit_inverter(const qubit::QubitScheme& scheme);
/// Both ports inverted with the number-number marginal kernel.
Inverter nn_inverter(unsigned cutoff);
Inverter pn_inverter(unsigned cutoff, const Rational& nbar,
                     pn::MDefinition mdef = pn::MDefinition::normalized);

struct BootstrapOptions {
  unsigned resamples = 1000;
  double level = 0.99;
  std::uint64_t seed = 0;
};

struct EmpiricalInversion {
  std::vector<CellKey> cells;
  std::vector<double> values;
  std::vector<double> standard_errors;  // bootstrap, per cell
  std::size_t argmin = 0;
  double min_value = 0.0;
  // Percentile interval for the cell that is smallest in the point estimate.
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.0;
  unsigned resamples = 0;
};

EmpiricalInversion empirical_invert(const SampleRun& run, const Inverter& inverter,
                                    const BootstrapOptions& options = {});

}  // namespace qjoint::sampling

#endif  // QJOINT_SAMPLER_HPP
