#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "chtf/errors.hpp"

namespace chtf {

using Index = Eigen::Index;

// Mode 0 is the measurement mode; modes >= 1 are causal-factor modes.
constexpr Index kMeasurementMode = 0;

/// Dense order-M array with mode-0-fastest canonical layout, so that the
/// flat storage is exactly vec(): sweeping all modes with smaller mode
/// indexes varying more rapidly.  Order-0 tensors are rejected; extents of
/// 1 are legal.  Values are immutable in spirit: every operation below
/// returns a fresh tensor, so instances are safe to share across threads.
class DenseTensor {
public:
  DenseTensor() = default; // empty placeholder; not a valid order-0 tensor

  explicit DenseTensor(std::vector<Index> dims);
  DenseTensor(std::vector<Index> dims, std::vector<double> data);

  Index order() const { return static_cast<Index>(dims_.size()); }
  Index dim(Index m) const { return dims_[static_cast<size_t>(m)]; }
  const std::vector<Index>& dims() const { return dims_; }
  Index size() const { return static_cast<Index>(data_.size()); }
  bool empty() const { return dims_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  /// Flat offset of a multi-index; stride of mode c is prod(dims[0..c)).
  Index offset(std::span<const Index> idx) const;

  double at(std::span<const Index> idx) const { return data_[static_cast<size_t>(offset(idx))]; }
  double& at(std::span<const Index> idx) { return data_[static_cast<size_t>(offset(idx))]; }
  double operator()(std::initializer_list<Index> idx) const {
    return at(std::span<const Index>(idx.begin(), idx.size()));
  }
  double& operator()(std::initializer_list<Index> idx) {
    return at(std::span<const Index>(idx.begin(), idx.size()));
  }
  double flat(Index i) const { return data_[static_cast<size_t>(i)]; }
  double& flat(Index i) { return data_[static_cast<size_t>(i)]; }

  DenseTensor& operator+=(const DenseTensor& rhs);
  DenseTensor& operator-=(const DenseTensor& rhs);
  DenseTensor& operator*=(double s);

  bool operator==(const DenseTensor& rhs) const = default;

private:
  std::vector<Index> dims_;
  std::vector<double> data_;
};

DenseTensor operator+(DenseTensor a, const DenseTensor& b);
DenseTensor operator-(DenseTensor a, const DenseTensor& b);
DenseTensor operator*(DenseTensor a, double s);

/// Mode-m matrixizing: I_m rows, prod of the other extents columns, the
/// columns arranged by sweeping the other modes with smaller mode indexes
/// varying more rapidly.  Not cyclical.
Eigen::MatrixXd matrixize(const DenseTensor& t, Index mode);

/// Inverse of matrixize; round trips bit-exactly.
DenseTensor unmatrixize(const Eigen::MatrixXd& m, Index mode, std::vector<Index> dims);

/// Mode-m product t x_m b; in matrixized form, matrixize(result, m) = b * matrixize(t, m).
DenseTensor mode_product(const DenseTensor& t, Index mode, const Eigen::MatrixXd& b);

/// Chain of mode products t x_m ops[m] for every m with ops[m] non-empty,
/// skipping skip_mode (pass -1 to apply all).  Applied in increasing mode
/// order; distinct-mode products commute.
DenseTensor multi_mode_product(const DenseTensor& t,
                               std::span<const Eigen::MatrixXd> ops,
                               Index skip_mode = -1);

/// Same chain with every matrix transposed (the usual projection step).
DenseTensor multi_mode_product_t(const DenseTensor& t,
                                 std::span<const Eigen::MatrixXd> ops,
                                 Index skip_mode = -1);

/// vec(t): the canonical flat layout.  Satisfies
/// vec(t x_0 B_0 ... x_C B_C) = (B_C kron ... kron B_0) vec(t).
Eigen::VectorXd vectorize(const DenseTensor& t);

/// Wraps a flat vector as a tensor with the given dims.
DenseTensor tensor_from_vec(const Eigen::VectorXd& v, std::vector<Index> dims);

/// [A kron B]_{ik,jl} = a_{ij} b_{kl}.
Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Block-matrix Khatri-Rao product: [(A_1 kron B_1) ... (A_L kron B_L)].
/// Per-block column counts may differ across blocks but must match between
/// the two operands.
Eigen::MatrixXd khatri_rao_block(std::span<const Eigen::MatrixXd> blocks_a,
                                 std::span<const Eigen::MatrixXd> blocks_b);

/// Outer product v_0 o v_1 o ... : entry (i_0,...,i_C) = prod_c v_c[i_c].
DenseTensor outer(std::span<const Eigen::VectorXd> vectors);

double frobenius_norm(const DenseTensor& t);
double dot(const DenseTensor& a, const DenseTensor& b);

/// Copy of the leading dims-block (entries with i_c < dims[c] for all c).
DenseTensor leading_block(const DenseTensor& t, std::span<const Index> dims);

} // namespace chtf
