#include "qjoint/qubit.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <atomic>
#include <complex>
#include <random>
#include <thread>
#include <vector>

namespace qjoint::qubit {

namespace {

using cd = std::complex<double>;

Tracked trig(double v) { return {v, 2.0 * kUnitRoundoff * std::abs(v)}; }

JointGrid<Tracked> empty_grid() {
  JointGrid<Tracked> g;
  g.values.resize(2, 2);
  g.row_labels = kOutcomes;
  g.col_labels = kOutcomes;
  return g;
}

}  // namespace

QubitScheme::QubitScheme(double phi) : phi_(phi) {
  if (!std::isfinite(phi) || phi < 0.0 || phi > std::numbers::pi / 2 + 1e-15) {
    throw std::invalid_argument("phi must lie in [0, pi/2]");
  }
}

Tracked QubitScheme::eta_x() const { return trig(std::cos(phi_)); }
Tracked QubitScheme::eta_y() const { return trig(std::sin(phi_)); }

CoupledModel build_coupled_model(const QubitScheme& scheme) {
  const double c = std::cos(scheme.phi() / 2);
  const double s = std::sin(scheme.phi() / 2);
  CoupledModel m;
  m.x_tilde_plus << 1.0, 0.0;
  m.x_tilde_minus << 0.0, 1.0;
  m.a_plus << c, s;
  m.a_minus << s, c;

  // |a> = |a+>, V+ = 1 and V- swaps the readout basis, so V-|a> = |a->.
  Eigen::Matrix2cd v_plus = Eigen::Matrix2cd::Identity();
  Eigen::Matrix2cd v_minus;
  v_minus << 0.0, 1.0, 1.0, 0.0;

  const double h = 1.0 / std::sqrt(2.0);
  Eigen::Vector2cd x_plus(h, h);
  Eigen::Vector2cd x_minus(h, -h);
  const Eigen::Matrix2cd p_plus = x_plus * x_plus.adjoint();
  const Eigen::Matrix2cd p_minus = x_minus * x_minus.adjoint();
  m.unitary = Eigen::kroneckerProduct(p_plus, v_plus) + Eigen::kroneckerProduct(p_minus, v_minus);

  const double defect = (m.unitary.adjoint() * m.unitary - Eigen::Matrix4cd::Identity()).norm();
  if (defect > 1e-12) throw UnitarityViolation("coupling unitary fails U^dagger U = 1");
  return m;
}

std::pair<Vector<Tracked>, Vector<Tracked>> exact_marginals(const BlochState& s) {
  Vector<Tracked> px(2), py(2);
  for (int i = 0; i < 2; ++i) {
    const Tracked z(static_cast<double>(kOutcomes[i]));
    px(i) = (Tracked(1) + z * Tracked(s.x())) / Tracked(2);
    py(i) = (Tracked(1) + z * Tracked(s.y())) / Tracked(2);
  }
  return {px, py};
}

JointGrid<Tracked> observed_joint(const BlochState& s, const QubitScheme& scheme) {
  JointGrid<Tracked> g = empty_grid();
  const Tracked cx = Tracked(s.x()) * scheme.eta_x();
  const Tracked cy = Tracked(s.y()) * scheme.eta_y();
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      g.values(a, b) = (Tracked(1) + Tracked(static_cast<double>(kOutcomes[a])) * cx +
                        Tracked(static_cast<double>(kOutcomes[b])) * cy) /
                       Tracked(4);
    }
  }
  return g;
}

JointGrid<Tracked> simulate_coupled(const BlochState& s, const QubitScheme& scheme) {
  const CoupledModel model = build_coupled_model(scheme);
  const cd i(0.0, 1.0);
  Eigen::Matrix2cd rho;
  rho << 1.0 + s.z(), s.x() - i * s.y(), s.x() + i * s.y(), 1.0 - s.z();
  rho /= 2.0;
  const Eigen::Matrix2cd ancilla = model.a_plus * model.a_plus.adjoint();
  const Eigen::Matrix4cd initial = Eigen::kroneckerProduct(rho, ancilla);
  const Eigen::Matrix4cd evolved = model.unitary * initial * model.unitary.adjoint();

  const double h = 1.0 / std::sqrt(2.0);
  const Eigen::Vector2cd y_plus(h, i * h);
  const Eigen::Vector2cd y_minus(h, -i * h);

  JointGrid<Tracked> g = empty_grid();
  for (int a = 0; a < 2; ++a) {
    const Eigen::Vector2cd& xt = a == 0 ? model.x_tilde_plus : model.x_tilde_minus;
    for (int b = 0; b < 2; ++b) {
      const Eigen::Vector2cd& yv = b == 0 ? y_plus : y_minus;
      const Eigen::Vector4cd joint = Eigen::kroneckerProduct(yv, xt);
      const double p = (joint.adjoint() * evolved * joint)(0, 0).real();
      // A handful of 4x4 complex products; 64 ulps of unit scale is ample.
      g.values(a, b) = Tracked(p, 64.0 * kUnitRoundoff);
    }
  }
  return g;
}

InversionKernel<Tracked> qubit_kernel(const QubitScheme& scheme, Axis axis) {
  return qubit_kernel<Tracked>(axis == Axis::x ? scheme.eta_x() : scheme.eta_y());
}

JointGrid<Tracked> retrieved_joint(const BlochState& s, const QubitScheme& scheme) {
  return invert_joint(qubit_kernel(scheme, Axis::x), qubit_kernel(scheme, Axis::y),
                      observed_joint(s, scheme));
}

Classification classify_fixed_axes(const BlochState& s) {
  Classification c;
  c.min_cell = (Tracked(1) - Tracked(std::abs(s.x())) - Tracked(std::abs(s.y()))) / Tracked(4);
  c.nonclassical = c.min_cell.value < -c.min_cell.err;
  return c;
}

Classification classify_optimal_axes(const BlochState& s) {
  Classification c;
  const Tracked norm = sqrt(Tracked(s.x()) * Tracked(s.x()) + Tracked(s.y()) * Tracked(s.y()) +
                            Tracked(s.z()) * Tracked(s.z()));
  c.min_cell = (Tracked(1) - sqrt(Tracked(2)) * norm) / Tracked(4);
  c.nonclassical = c.min_cell.value < -c.min_cell.err;
  return c;
}

double nonclassical_volume_fraction() { return 1.0 - std::pow(2.0, -1.5); }

VolumeEstimate nonclassical_volume_fraction_mc(std::uint64_t samples, std::uint64_t seed,
                                               std::uint64_t block_size) {
  if (samples == 0) throw std::invalid_argument("Monte Carlo volume needs at least one sample");
  if (block_size == 0) block_size = 1;
  const std::uint64_t blocks = (samples + block_size - 1) / block_size;
  std::vector<std::uint64_t> hits(blocks, 0);
  std::atomic<std::uint64_t> next{0};

  auto worker = [&] {
    for (std::uint64_t b = next++; b < blocks; b = next++) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
      std::mt19937_64 rng(seq);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      const std::uint64_t count = std::min(block_size, samples - b * block_size);
      std::uint64_t local = 0;
      for (std::uint64_t n = 0; n < count;) {
        const double x = u(rng), y = u(rng), z = u(rng);
        const double r2 = x * x + y * y + z * z;
        if (r2 > 1.0) continue;
        ++n;
        if (r2 > 0.5) ++local;
      }
      hits[b] = local;
    }
  };
  const unsigned threads = std::max(1U, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                           static_cast<unsigned>(blocks)));
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();

  std::uint64_t total = 0;
  for (auto h : hits) total += h;
  VolumeEstimate est;
  est.samples = samples;
  est.fraction = static_cast<double>(total) / static_cast<double>(samples);
  est.standard_error =
      std::sqrt(est.fraction * (1.0 - est.fraction) / static_cast<double>(samples));
  return est;
}

}  // namespace qjoint::qubit
