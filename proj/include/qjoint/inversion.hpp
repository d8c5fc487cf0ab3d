#ifndef QJOINT_INVERSION_HPP
#define QJOINT_INVERSION_HPP

#include "qjoint/errors.hpp"
#include "qjoint/numerics.hpp"

#include <Eigen/Core>

#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace qjoint {

template <class S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Labels = std::vector<long>;

inline Labels range_labels(long count, long first = 0) {
  Labels out(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = first + i;
  return out;
}

/// Two-outcome distribution p(x, y); rows index x, columns index y.
///
/// `extra_error`, when non-empty, holds a per-cell certified bound on top of
/// the scalar's own error (series truncation, cutoff effects).
template <ScalarType S>
struct JointGrid {
  Matrix<S> values;
  Labels row_labels;
  Labels col_labels;
  bool is_signed = false;
  Eigen::MatrixXd extra_error;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  double cell_error(Eigen::Index i, Eigen::Index j) const {
    double e = error_bound(values(i, j));
    if (extra_error.size() != 0) e += extra_error(i, j);
    return e;
  }

  S total() const {
    S sum(0);
    for (Eigen::Index i = 0; i < rows(); ++i)
      for (Eigen::Index j = 0; j < cols(); ++j) sum += values(i, j);
    return sum;
  }
};

/// Matrix mu(z, z') mapping observed to exact marginal statistics.
template <ScalarType S>
struct InversionKernel {
  Matrix<S> entries;
  Labels labels;  // outcome labels of the inverted (row) side

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }

  static InversionKernel identity(Eigen::Index n, Labels labels = {}) {
    InversionKernel k;
    k.entries = Matrix<S>::Identity(n, n);
    k.labels = labels.empty() ? range_labels(n) : std::move(labels);
    return k;
  }
};

/// Classical measurement model: P(lambda) and the conditionals of the
/// observed variables, stored with outcomes on rows and lambda on columns.
template <ScalarType S>
struct ClassicalModel {
  Vector<S> weights;
  Matrix<S> conditionals_x;
  Matrix<S> conditionals_y;
  Labels x_labels;
  Labels y_labels;
};

struct NegativityReport {
  double min_value = 0.0;
  std::pair<long, long> argmin{0, 0};
  double error_at_argmin = 0.0;
  // Sum over cells whose value is below minus their certified error.
  double negative_mass = 0.0;
  bool is_nonclassical = false;
};

template <ScalarType S>
std::pair<Vector<S>, Vector<S>> marginals(const JointGrid<S>& j) {
  return {j.values.rowwise().sum(), j.values.colwise().sum().transpose()};
}

template <ScalarType S>
Vector<S> invert_marginal(const InversionKernel<S>& k, const Vector<S>& observed) {
  if (k.cols() != observed.size()) {
    throw DimensionMismatch("kernel has " + std::to_string(k.cols()) +
                            " columns but the marginal has " + std::to_string(observed.size()) +
                            " entries");
  }
  return k.entries * observed;
}

/// mu_x * p~ * mu_y^T, applying the row kernel first.
template <ScalarType S>
JointGrid<S> invert_joint(const InversionKernel<S>& kx, const InversionKernel<S>& ky,
                          const JointGrid<S>& observed) {
  if (kx.cols() != observed.rows() || ky.cols() != observed.cols()) {
    throw DimensionMismatch("kernel shapes (" + std::to_string(kx.rows()) + "x" +
                            std::to_string(kx.cols()) + ", " + std::to_string(ky.rows()) + "x" +
                            std::to_string(ky.cols()) + ") do not fit a " +
                            std::to_string(observed.rows()) + "x" +
                            std::to_string(observed.cols()) + " grid");
  }
  JointGrid<S> out;
  const Matrix<S> rows_done = kx.entries * observed.values;
  out.values = rows_done * ky.entries.transpose();
  out.row_labels = kx.labels.size() == static_cast<std::size_t>(kx.rows())
                       ? kx.labels
                       : range_labels(kx.rows());
  out.col_labels = ky.labels.size() == static_cast<std::size_t>(ky.rows())
                       ? ky.labels
                       : range_labels(ky.rows());
  out.is_signed = true;
  return out;
}

template <ScalarType S>
JointGrid<S> classical_forward(const ClassicalModel<S>& model) {
  const auto lambdas = model.weights.size();
  if (model.conditionals_x.cols() != lambdas || model.conditionals_y.cols() != lambdas) {
    throw DimensionMismatch("conditionals must have one column per ontic state");
  }
  JointGrid<S> out;
  out.values = model.conditionals_x * model.weights.asDiagonal() * model.conditionals_y.transpose();
  out.row_labels = model.x_labels.empty() ? range_labels(model.conditionals_x.rows()) : model.x_labels;
  out.col_labels = model.y_labels.empty() ? range_labels(model.conditionals_y.rows()) : model.y_labels;
  out.is_signed = false;
  return out;
}

template <ScalarType S>
NegativityReport negativity(const JointGrid<S>& j) {
  NegativityReport r;
  r.min_value = std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < j.rows(); ++a) {
    for (Eigen::Index b = 0; b < j.cols(); ++b) {
      const double v = to_double(j.values(a, b));
      const double e = j.cell_error(a, b);
      if (v < r.min_value) {
        r.min_value = v;
        r.argmin = {j.row_labels[static_cast<std::size_t>(a)],
                    j.col_labels[static_cast<std::size_t>(b)]};
        r.error_at_argmin = e;
      }
      if (v < -e) r.negative_mass += v;
    }
  }
  if (j.values.size() == 0) r.min_value = 0.0;
  r.is_nonclassical = r.negative_mass < 0.0;
  return r;
}

/// Entry-wise conversion between scalar modes (exact -> tracked rounding).
template <ScalarType To, ScalarType From>
Matrix<To> convert_matrix(const Matrix<From>& m) {
  Matrix<To> out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if constexpr (std::is_same_v<To, From>) {
        out(i, j) = m(i, j);
      } else {
        out(i, j) = from_rational<To>(m(i, j));
      }
    }
  }
  return out;
}

}  // namespace qjoint

#endif  // QJOINT_INVERSION_HPP
