#ifndef QJOINT_NUMBER_NUMBER_HPP
#define QJOINT_NUMBER_NUMBER_HPP

#include "qjoint/inversion.hpp"
#include "qjoint/states.hpp"

#include <optional>
#include <string>
#include <vector>

// Number-number scheme: the mode is split with vacuum on a 50/50 beam
// splitter and both output ports are photon-counted.
namespace qjoint::nn {

template <ScalarType S>
struct NNObserved {
  JointGrid<S> joint;
  unsigned source_cutoff = 0;
  double truncation_bound = 0.0;  // mass of the source beyond the cutoff
};

/// Per-antidiagonal series diagnostics; cell (n1, n2) = C(N, n1) * S_N.
struct SeriesDiagnostics {
  unsigned total = 0;  // N = n1 + n2
  std::size_t terms_used = 0;
  double truncation_bound = 0.0;
  double abs_term_sum = 0.0;  // sum_k C(N+k, N) |p(N+k)|
  bool converged = false;
  bool closed_form = false;
};

template <ScalarType S>
struct NNRetrieved {
  JointGrid<S> joint;  // extra_error holds the per-cell truncation bound
  std::vector<SeriesDiagnostics> diagnostics;
  unsigned extent = 0;
  bool all_converged = true;
  double max_cell_error = 0.0;
};

struct RetrieveOptions {
  double cell_tolerance = 1e-9;
  std::optional<unsigned> extent;  // grid is (extent+1) x (extent+1)
  double negligible_mass = 1e-12;  // automatic extent threshold
};

// ---------------------------------------------------------------------------

/// p~(n1, n2) = 2^{-(n1+n2)} C(n1+n2, n1) p(n1+n2) for n1 + n2 <= cutoff.
template <ScalarType S>
NNObserved<S> nn_forward(const NumberDistribution<S>& p);

/// Upper-triangular mu(n, k) = (-2)^n C(k, n) (-1)^k, k >= n.
template <ScalarType S>
InversionKernel<S> nn_marginal_kernel(unsigned cutoff);

/// Forward thinning matrix B(k, n) = 2^{-n} C(n, k), so p~ = B p.
template <ScalarType S>
Matrix<S> nn_forward_matrix(unsigned cutoff);

/// Single-port marginal p~(n) = sum_k 2^{-k} C(k, n) p(k), with a certified
/// tail envelope. Exact for finite support and for thermal-family states.
template <ScalarType S>
NumberDistribution<S> nn_forward_marginal(const NumberDistribution<S>& p);

template <ScalarType S>
struct MarginalInversion {
  Vector<S> values;
  std::vector<double> truncation;  // per-entry bound from the observed tail
};

/// Applies the marginal kernel to an observed single-port distribution.
template <ScalarType S>
MarginalInversion<S> nn_invert_marginal(const NumberDistribution<S>& observed, unsigned upto);

template <ScalarType S>
NNRetrieved<S> nn_retrieve(const NumberDistribution<S>& p, const RetrieveOptions& options = {});

/// Closed form for |n>: (-1)^(n-n1-n2) n! / (n1! n2! (n-n1-n2)!).
JointGrid<Rational> nn_retrieve_fock_oracle(unsigned n, std::optional<unsigned> extent = {});

/// p(n1, n2) from the non-negative P function of coherent or thermal states.
template <ScalarType S>
S nn_pfunction_oracle(const StateSpec& spec, unsigned n1, unsigned n2);

/// sum_n (-1)^n p(n) = (pi/2) W(0); Tracked results fold the tail into err.
template <ScalarType S>
S parity_wigner_origin(const NumberDistribution<S>& p);

unsigned default_extent(double tail_above, const std::vector<double>& probs, double negligible);

template <ScalarType S>
unsigned default_extent(const NumberDistribution<S>& p, double negligible = 1e-12) {
  std::vector<double> probs;
  probs.reserve(p.probs.size());
  for (const auto& v : p.probs) probs.push_back(to_double(v));
  return default_extent(p.tail_bound, probs, negligible);
}

/// Builds the distribution with a source cutoff large enough that every
/// retrieved cell's series tail is certifiably below the tolerance.
template <ScalarType S>
NumberDistribution<S> nn_source_distribution(const StateSpec& spec, const RetrieveOptions& options,
                                             unsigned* extent_out = nullptr);

// ---------------------------------------------------------------------------

struct ScanRow {
  double parameter = 0.0;
  std::string state;
  ScalarMode mode = ScalarMode::tracked;
  unsigned extent = 0;
  unsigned source_cutoff = 0;
  bool joint_converged = false;
  double joint_max_error = 0.0;
  bool joint_reliable = false;
  double joint_growth_rate = 0.0;  // per-photon growth of the absolute term mass
  double marginal_max_residual = 0.0;
  double marginal_max_error = 0.0;
  bool marginal_reliable = false;
  double marginal_growth_rate = 0.0;
};

/// Family is one of sqvac, coherent, thermal (parameter n-bar) or fock
/// (parameter n). Cells count as reliable when their certified error,
/// including rounding, is below `tolerance`.
std::vector<ScanRow> nn_stability_scan(const std::string& family,
                                       const std::vector<double>& parameters, ScalarMode mode,
                                       double tolerance = 1e-9);

StateSpec family_member(const std::string& family, double parameter);

}  // namespace qjoint::nn

#include "qjoint/detail/number_number_impl.hpp"

#endif  // QJOINT_NUMBER_NUMBER_HPP
