#include "qjoint/number_number.hpp"

#include <charconv>
#include <cmath>

namespace qjoint::nn {

unsigned default_extent(double tail_above, const std::vector<double>& probs, double negligible) {
  const unsigned cutoff = static_cast<unsigned>(probs.size()) - 1;
  if (tail_above == 0.0) {
    for (unsigned n = cutoff; n > 0; --n) {
      if (probs[n] != 0.0) return n;
    }
    return 0;
  }
  // Smallest n whose mass above n (stored entries plus certified tail) is negligible.
  std::vector<double> above(probs.size());
  double running = tail_above;
  for (unsigned n = cutoff + 1; n-- > 0;) {
    above[n] = running;
    running += std::abs(probs[n]);
  }
  for (unsigned n = 0; n <= cutoff; ++n) {
    if (above[n] < negligible) return n;
  }
  return cutoff;
}

JointGrid<Rational> nn_retrieve_fock_oracle(unsigned n, std::optional<unsigned> extent) {
  const unsigned E = extent.value_or(n);
  JointGrid<Rational> g;
  g.values = Matrix<Rational>::Zero(E + 1, E + 1);
  g.row_labels = range_labels(E + 1);
  g.col_labels = range_labels(E + 1);
  g.is_signed = true;
  for (unsigned n1 = 0; n1 <= std::min(n, E); ++n1) {
    for (unsigned n2 = 0; n1 + n2 <= n && n2 <= E; ++n2) {
      const unsigned rest = n - n1 - n2;
      const Rational magnitude(multinomial_integer(n1, n2, rest));
      g.values(n1, n2) = rest % 2 == 0 ? magnitude : Rational(-magnitude);
    }
  }
  return g;
}

namespace {

Rational shortest_decimal(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return parse_rational(std::string(buf, end));
}

double growth_rate(const std::vector<double>& mass) {
  if (mass.size() < 3) return 0.0;
  const std::size_t last = mass.size() - 1;
  const std::size_t mid = last / 2;
  if (!(mass[mid] > 0.0) || !(mass[last] > 0.0)) return 0.0;
  return std::pow(mass[last] / mass[mid], 1.0 / static_cast<double>(last - mid));
}

template <ScalarType S>
ScanRow scan_one(const StateSpec& spec, double parameter, double tolerance) {
  ScanRow row;
  row.parameter = parameter;
  row.state = to_string(spec);
  row.mode = scalar_traits<S>::mode;

  RetrieveOptions options;
  options.cell_tolerance = tolerance;
  unsigned extent = 0;
  const NumberDistribution<S> p = nn_source_distribution<S>(spec, options, &extent);
  options.extent = extent;
  row.extent = extent;
  row.source_cutoff = p.cutoff;

  const NNRetrieved<S> joint = nn_retrieve(p, options);
  row.joint_converged = joint.all_converged;
  row.joint_max_error = joint.max_cell_error;
  row.joint_reliable = joint.all_converged && joint.max_cell_error <= tolerance;
  std::vector<double> joint_mass;
  for (const auto& d : joint.diagnostics) {
    if (d.total > extent) break;
    joint_mass.push_back(std::ldexp(d.abs_term_sum, static_cast<int>(d.total)));
  }
  row.joint_growth_rate = growth_rate(joint_mass);

  const NumberDistribution<S> observed = nn_forward_marginal(p);
  const MarginalInversion<S> inverted = nn_invert_marginal(observed, extent);
  std::vector<double> marginal_mass;
  for (unsigned n = 0; n <= extent; ++n) {
    const double residual = std::abs(to_double(inverted.values(n)) - to_double(p.at(n)));
    row.marginal_max_residual = std::max(row.marginal_max_residual, residual);
    row.marginal_max_error =
        std::max(row.marginal_max_error, error_bound(inverted.values(n)) + inverted.truncation[n]);
    double mass = 0.0;
    for (unsigned k = n; k <= observed.cutoff; ++k) {
      mass += binomial_integer(k, n).convert_to<double>() * std::abs(to_double(observed.probs[k]));
    }
    marginal_mass.push_back(std::ldexp(mass, static_cast<int>(n)));
  }
  row.marginal_growth_rate = growth_rate(marginal_mass);
  row.marginal_reliable =
      row.marginal_max_residual <= tolerance && row.marginal_max_error <= tolerance;
  return row;
}

}  // namespace

StateSpec family_member(const std::string& family, double parameter) {
  if (!(parameter >= 0.0)) throw std::invalid_argument("scan parameters must be non-negative");
  if (family == "sqvac") return SqueezedVacuum{shortest_decimal(std::asinh(std::sqrt(parameter)))};
  if (family == "coherent") return Coherent{shortest_decimal(parameter)};
  if (family == "thermal") return Thermal{shortest_decimal(parameter)};
  if (family == "fock") return Fock{static_cast<unsigned>(std::lround(parameter))};
  throw std::invalid_argument("unknown scan family '" + family + "'");
}

std::vector<ScanRow> nn_stability_scan(const std::string& family,
                                       const std::vector<double>& parameters, ScalarMode mode,
                                       double tolerance) {
  std::vector<ScanRow> rows;
  for (double parameter : parameters) {
    const StateSpec spec = family_member(family, parameter);
    if (mode == ScalarMode::rational) {
      if (!has_rational_distribution(spec)) {
        throw UnsupportedState("rational scan needs rational probabilities: " + to_string(spec));
      }
      rows.push_back(scan_one<Rational>(spec, parameter, tolerance));
    } else {
      rows.push_back(scan_one<Tracked>(spec, parameter, tolerance));
    }
  }
  return rows;
}

}  // namespace qjoint::nn
