#include "qjoint/sampler.hpp"

#include "qjoint/number_number.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>

namespace qjoint::sampling {

std::string to_string(const CellKey& key) {
  return "(" + std::to_string(key.row) + ", " + format_rational(key.col) + ")";
}

std::vector<double> SampleRun::frequencies() const {
  std::vector<double> f(counts.size());
  const double n = static_cast<double>(total);
  for (std::size_t i = 0; i < counts.size(); ++i) f[i] = static_cast<double>(counts[i]) / n;
  return f;
}

std::vector<std::uint64_t> multinomial(const std::vector<double>& probs, std::uint64_t shots,
                                       std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 rng(seq);
  std::vector<std::uint64_t> counts(probs.size(), 0);
  // Conditional binomials: cell i gets Bin(remaining, p_i / mass left).
  double left = 0.0;
  for (double p : probs) left += p;
  std::uint64_t remaining = shots;
  for (std::size_t i = 0; i < probs.size() && remaining > 0; ++i) {
    if (probs[i] <= 0.0) continue;
    if (i + 1 == probs.size() || probs[i] >= left) {
      counts[i] = remaining;
      remaining = 0;
      break;
    }
    std::binomial_distribution<std::uint64_t> b(remaining, std::clamp(probs[i] / left, 0.0, 1.0));
    counts[i] = b(rng);
    remaining -= counts[i];
    left -= probs[i];
  }
  return counts;
}

namespace {

SampleRun draw_cells(std::vector<CellKey> cells, std::vector<Tracked> values, std::uint64_t shots,
                     std::uint64_t seed, const std::string& scheme) {
  std::vector<double> probs;
  probs.reserve(values.size() + 1);
  double mass = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Tracked& v = values[i];
    if (v.value < -v.err) {
      throw InvalidDistribution("negative cell " + to_string(cells[i]) +
                                " cannot be sampled: " + std::to_string(v.value));
    }
    probs.push_back(std::max(v.value, 0.0));
    mass += probs.back();
  }
  if (mass > 1.0 + 1e-9) {
    throw InvalidDistribution("forward model mass " + std::to_string(mass) + " exceeds 1");
  }
  const double overflow = std::max(0.0, 1.0 - mass);
  probs.push_back(overflow);

  SampleRun run;
  run.scheme = scheme;
  run.cells = std::move(cells);
  run.counts = multinomial(probs, shots, seed);
  run.overflow = run.counts.back();
  run.counts.pop_back();
  run.overflow_probability = overflow;
  run.total = shots;
  run.seed = seed;
  return run;
}

}  // namespace

template <ScalarType S>
SampleRun draw(const JointGrid<S>& forward, std::uint64_t shots, std::uint64_t seed,
               const std::string& scheme) {
  std::vector<CellKey> cells;
  std::vector<Tracked> values;
  for (Eigen::Index i = 0; i < forward.rows(); ++i) {
    for (Eigen::Index j = 0; j < forward.cols(); ++j) {
      cells.push_back({forward.row_labels[i], Rational(forward.col_labels[j])});
      values.emplace_back(to_double(forward.values(i, j)), forward.cell_error(i, j));
    }
  }
  return draw_cells(std::move(cells), std::move(values), shots, seed, scheme);
}

template <ScalarType S>
SampleRun draw(const pn::RaggedJoint<S>& forward, std::uint64_t shots, std::uint64_t seed,
               const std::string& scheme) {
  std::vector<CellKey> cells;
  std::vector<Tracked> values;
  for (unsigned total = 0; total < forward.rows.size(); ++total) {
    for (const auto& [m, v] : forward.rows[total]) {
      cells.push_back({static_cast<long>(total), m});
      values.push_back(pn::weighted_value(v, forward.exp_weight));
    }
  }
  return draw_cells(std::move(cells), std::move(values), shots, seed, scheme);
}

template SampleRun draw(const JointGrid<Rational>&, std::uint64_t, std::uint64_t, const std::string&);
template SampleRun draw(const JointGrid<Tracked>&, std::uint64_t, std::uint64_t, const std::string&);
template SampleRun draw(const pn::RaggedJoint<Rational>&, std::uint64_t, std::uint64_t,
                        const std::string&);
template SampleRun draw(const pn::RaggedJoint<Tracked>&, std::uint64_t, std::uint64_t,
                        const std::string&);

// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd to_matrix(const InversionKernel<Tracked>& k) {
  Eigen::MatrixXd m(k.rows(), k.entries.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = k.entries(i, j).value;
  return m;
}

Inverter grid_inverter(const Eigen::MatrixXd& kx, const Eigen::MatrixXd& ky, const Labels& rows,
                       const Labels& cols) {
  Inverter inv;
  for (long r : rows)
    for (long c : cols) inv.output_cells.push_back({r, Rational(c)});
  const auto nr = static_cast<Eigen::Index>(rows.size());
  const auto nc = static_cast<Eigen::Index>(cols.size());
  inv.apply = [kx, ky, nr, nc](const std::vector<double>& f) {
    const Eigen::MatrixXd observed =
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            f.data(), nr, nc);
    const Eigen::MatrixXd out = kx * observed * ky.transpose();
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(nr * nc));
    for (Eigen::Index i = 0; i < nr; ++i)
      for (Eigen::Index j = 0; j < nc; ++j) flat.push_back(out(i, j));
    return flat;
  };
  return inv;
}

}  // namespace

Inverter qubit_inverter(const qubit::QubitScheme& scheme) {
  return grid_inverter(to_matrix(qubit::qubit_kernel(scheme, qubit::Axis::x)),
                       to_matrix(qubit::qubit_kernel(scheme, qubit::Axis::y)), qubit::kOutcomes,
                       qubit::kOutcomes);
}

Inverter nn_inverter(unsigned cutoff) {
  const Eigen::MatrixXd k = to_matrix(nn::nn_marginal_kernel<Tracked>(cutoff));
  return grid_inverter(k, k, range_labels(cutoff + 1), range_labels(cutoff + 1));
}

Inverter pn_inverter(unsigned cutoff, const Rational& nbar, pn::MDefinition mdef) {
  // Input cells follow the ragged row order; output rows carry union grids.
  std::vector<CellKey> input;
  for (unsigned total = 0; total <= cutoff; ++total) {
    for (const auto& m : pn::m_grid(mdef, total)) input.push_back({static_cast<long>(total), m});
  }
  pn::RaggedJoint<Tracked> shape;
  shape.mdef = mdef;
  shape.rows.resize(cutoff + 1);
  for (const auto& key : input) shape.rows[static_cast<std::size_t>(key.row)][key.col] = Tracked(0);
  const pn::RaggedJoint<Tracked> out_shape = pn::pn_retrieve(shape, nbar);

  Inverter inv;
  for (unsigned n = 0; n <= cutoff; ++n)
    for (const auto& [m, v] : out_shape.rows[n]) inv.output_cells.push_back({static_cast<long>(n), m});
  inv.apply = [input, mdef, nbar, cutoff](const std::vector<double>& f) {
    pn::RaggedJoint<Tracked> r;
    r.mdef = mdef;
    r.rows.resize(cutoff + 1);
    for (std::size_t i = 0; i < input.size(); ++i) {
      r.rows[static_cast<std::size_t>(input[i].row)][input[i].col] = Tracked(f[i]);
    }
    const pn::RaggedJoint<Tracked> ret = pn::pn_retrieve(r, nbar);
    std::vector<double> flat;
    for (unsigned n = 0; n <= cutoff; ++n)
      for (const auto& [m, v] : ret.rows[n]) flat.push_back(pn::weighted_value(v, ret.exp_weight).value);
    return flat;
  };
  return inv;
}

EmpiricalInversion empirical_invert(const SampleRun& run, const Inverter& inverter,
                                    const BootstrapOptions& options) {
  if (run.total == 0) throw std::invalid_argument("empty sample run");
  EmpiricalInversion out;
  out.cells = inverter.output_cells;
  out.values = inverter.apply(run.frequencies());
  out.level = options.level;
  out.resamples = options.resamples;
  out.argmin = static_cast<std::size_t>(
      std::min_element(out.values.begin(), out.values.end()) - out.values.begin());
  out.min_value = out.values[out.argmin];
  out.standard_errors.assign(out.values.size(), 0.0);
  if (options.resamples == 0) {
    out.ci_low = out.ci_high = out.min_value;
    return out;
  }

  // Resampling shots with replacement is a multinomial draw from the
  // empirical frequencies, overflow included.
  std::vector<double> probs = run.frequencies();
  probs.push_back(static_cast<double>(run.overflow) / static_cast<double>(run.total));
  std::vector<std::vector<double>> replicas(options.resamples);
  std::atomic<unsigned> next{0};
  auto worker = [&] {
    for (unsigned b = next++; b < options.resamples; b = next++) {
      std::vector<std::uint64_t> counts = multinomial(probs, run.total, options.seed, b + 1);
      counts.pop_back();
      std::vector<double> f(counts.size());
      for (std::size_t i = 0; i < counts.size(); ++i)
        f[i] = static_cast<double>(counts[i]) / static_cast<double>(run.total);
      replicas[b] = inverter.apply(f);
    }
  };
  const unsigned threads =
      std::max(1U, std::min(std::thread::hardware_concurrency(), options.resamples));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<double> tracked_cell;
  tracked_cell.reserve(options.resamples);
  for (const auto& r : replicas) tracked_cell.push_back(r[out.argmin]);
  std::sort(tracked_cell.begin(), tracked_cell.end());
  const double alpha = (1.0 - options.level) / 2.0;
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(tracked_cell.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, tracked_cell.size() - 1);
    return tracked_cell[lo] + (pos - static_cast<double>(lo)) * (tracked_cell[hi] - tracked_cell[lo]);
  };
  out.ci_low = quantile(alpha);
  out.ci_high = quantile(1.0 - alpha);

  for (std::size_t c = 0; c < out.values.size(); ++c) {
    double mean = 0.0;
    for (const auto& r : replicas) mean += r[c];
    mean /= static_cast<double>(replicas.size());
    double var = 0.0;
    for (const auto& r : replicas) var += (r[c] - mean) * (r[c] - mean);
    out.standard_errors[c] =
        replicas.size() > 1 ? std::sqrt(var / static_cast<double>(replicas.size() - 1)) : 0.0;
  }
  return out;
}

}  // namespace qjoint::sampling
