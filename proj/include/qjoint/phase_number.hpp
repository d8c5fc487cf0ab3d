#ifndef QJOINT_PHASE_NUMBER_HPP
#define QJOINT_PHASE_NUMBER_HPP

#include "qjoint/inversion.hpp"
#include "qjoint/states.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

// Phase-number scheme: the system is mixed with a coherent reference on a
// 50/50 beam splitter. Outputs are relabeled by the total N = n1 + n2 and a
// relative-phase proxy m, and only the N variable is inverted.
//
// Every value below that involves the reference carries an exact exponent
// weight w: the represented number is stored * e^w. This keeps rational
// mode exact, since the Poisson factor e^{-nbar} of the forward model and
// the e^{+nbar} of the inversion cancel in the weights.
namespace qjoint::pn {

enum class MDefinition { normalized, difference, n1 };

std::string to_string(MDefinition d);
MDefinition parse_m_definition(const std::string& text);

/// Coherent reference |beta>, described by nbar = |beta|^2.
struct ReferenceBeam {
  Rational nbar;

  explicit ReferenceBeam(Rational n = Rational(0));
};

/// m for the cell (n1, N - n1). Normalized: (n1-n2)/N, and 0 when N = 0.
Rational m_value(MDefinition d, unsigned total, unsigned n1);
/// Allowed m values for a given N, ascending.
std::vector<Rational> m_grid(MDefinition d, unsigned total);
/// Inverse of m_value; empty when m is not on the grid of N.
std::optional<unsigned> n1_of(MDefinition d, unsigned total, const Rational& m);

/// stored * e^w as a tracked double.
template <ScalarType S>
Tracked weighted_value(const S& stored, const Rational& w);

template <ScalarType S>
struct RaggedJoint {
  std::vector<std::map<Rational, S>> rows;  // rows[N][m]
  MDefinition mdef = MDefinition::normalized;
  Rational exp_weight{0};
  bool is_signed = false;

  unsigned max_total() const { return rows.empty() ? 0 : static_cast<unsigned>(rows.size() - 1); }
  std::size_t cell_count() const;
  /// Stored value, or zero when m is absent from row N.
  S stored(unsigned total, const Rational& m) const;
  Tracked value(unsigned total, const Rational& m) const {
    return weighted_value(stored(total, m), exp_weight);
  }
  Tracked total() const;
};

template <ScalarType S>
struct ScaledVector {
  Vector<S> values;
  Rational exp_weight{0};

  Tracked value(Eigen::Index i) const { return weighted_value(values(i), exp_weight); }
};

template <ScalarType S>
struct ScaledKernel {
  InversionKernel<S> kernel;
  Rational exp_weight{0};
};

template <ScalarType S>
struct PNObserved {
  JointGrid<S> joint;  // over (n1, n2), zero above N = cutoff
  Rational exp_weight{0};
  unsigned cutoff = 0;
  double mass_deficit = 0.0;  // output probability beyond the cutoff
};

struct ForwardOptions {
  std::optional<unsigned> cutoff;  // largest N kept; automatic when empty
  double tolerance = 1e-12;        // allowed mass deficit
};

/// Output statistics for a number-diagonal system state and the reference.
/// The phase of beta cannot enter for diagonal states, so beta is taken real.
template <ScalarType S>
PNObserved<S> pn_forward(const NumberDistribution<S>& p, const ReferenceBeam& ref,
                         const ForwardOptions& options = {});

/// Mass above N = cutoff for the given system distribution and reference.
double pn_mass_deficit(const std::vector<double>& p, double p_tail, const Rational& nbar,
                       unsigned cutoff);

/// Relabels (n1, n2) as (N, m). Rows run up to `max_total`, by default the
/// largest N touching the grid; cells outside the grid count as zero.
template <ScalarType S>
RaggedJoint<S> to_ragged(const JointGrid<S>& joint, MDefinition mdef = MDefinition::normalized,
                         const Rational& exp_weight = Rational(0),
                         std::optional<unsigned> max_total = {});

/// The forward statistics as a ragged grid, keeping only complete rows N <= cutoff.
template <ScalarType S>
RaggedJoint<S> ragged_observed(const PNObserved<S>& observed,
                               MDefinition mdef = MDefinition::normalized) {
  return to_ragged(observed.joint, mdef, observed.exp_weight, observed.cutoff);
}

/// Back to the (n1, n2) grid; throws DimensionMismatch when a key has no n1.
template <ScalarType S>
JointGrid<S> from_ragged(const RaggedJoint<S>& r);

/// p~(N) = sum_m p~(N, m).
template <ScalarType S>
ScaledVector<S> pn_total_marginal(const RaggedJoint<S>& r);

/// mu(n, N) = e^{nbar} (-nbar)^(n-N) / (n-N)! for N <= n.
template <ScalarType S>
ScaledKernel<S> pn_number_kernel(const Rational& nbar, unsigned cutoff);

/// p(n, m) = e^{nbar} sum_{N<=n} (-nbar)^(n-N)/(n-N)! p~(N, m). Row n carries
/// the union of the m grids of rows N <= n, with explicit zeros.
template <ScalarType S>
RaggedJoint<S> pn_retrieve(const RaggedJoint<S>& observed, const Rational& nbar);

/// -nbar p(0): the retrieved (N=1, m=0) cell under the normalized difference.
template <ScalarType S>
S pc_identity(const NumberDistribution<S>& p, const Rational& nbar);

struct VacuumVerdict {
  bool nonclassical = false;
  std::string note;
};

template <ScalarType S>
VacuumVerdict vacuum_verdict(const NumberDistribution<S>& p, const Rational& nbar);

struct RaggedMinimum {
  unsigned total = 0;
  Rational m;
  Tracked value;
  double negative_mass = 0.0;  // sum of certified negative cells
  bool nonclassical = false;
};

template <ScalarType S>
RaggedMinimum ragged_minimum(const RaggedJoint<S>& r);

#define QJOINT_PN_EXTERN(S)                                                                      \
  extern template Tracked weighted_value(const S&, const Rational&);                             \
  extern template struct RaggedJoint<S>;                                                         \
  extern template PNObserved<S> pn_forward(const NumberDistribution<S>&, const ReferenceBeam&,   \
                                           const ForwardOptions&);                               \
  extern template RaggedJoint<S> to_ragged(const JointGrid<S>&, MDefinition, const Rational&,   \
                                           std::optional<unsigned>);                             \
  extern template JointGrid<S> from_ragged(const RaggedJoint<S>&);                               \
  extern template ScaledVector<S> pn_total_marginal(const RaggedJoint<S>&);                      \
  extern template ScaledKernel<S> pn_number_kernel(const Rational&, unsigned);                   \
  extern template RaggedJoint<S> pn_retrieve(const RaggedJoint<S>&, const Rational&);            \
  extern template S pc_identity(const NumberDistribution<S>&, const Rational&);                  \
  extern template VacuumVerdict vacuum_verdict(const NumberDistribution<S>&, const Rational&);   \
  extern template RaggedMinimum ragged_minimum(const RaggedJoint<S>&);
QJOINT_PN_EXTERN(Rational)
QJOINT_PN_EXTERN(Tracked)
#undef QJOINT_PN_EXTERN

}  // namespace qjoint::pn

#endif  // QJOINT_PHASE_NUMBER_HPP
