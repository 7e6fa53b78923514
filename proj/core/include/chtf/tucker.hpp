#pragma once

#include <optional>
#include <span>
#include <vector>

#include "chtf/linalg.hpp"
#include "chtf/tensor.hpp"

namespace chtf {

/// Per-iteration objective values of an alternating-least-squares run.
/// Non-increasing within tiny slack; values[0] is the initialization loss.
struct LossTrace {
  std::vector<double> values;
  bool converged = false;
  Index iterations = 0;
};

/// Core tensor plus one column-orthonormal mode matrix per mode.  Cores
/// are kept canonical: per-mode slab norms are the mode singular values,
/// non-increasing, and distinct slabs of the same mode are mutually
/// orthogonal.  Every factor column carries the deterministic sign
/// convention (first entry over 1e-12 is nonnegative).
struct TuckerModel {
  DenseTensor core;                                  // R_0 x ... x R_C
  std::vector<Eigen::MatrixXd> mode_matrices;        // U_m: I_m x R_m
  std::vector<Eigen::VectorXd> mode_singular_values; // slab norms per mode
  std::optional<Eigen::VectorXd> mean;               // subtracted mode-0 mean

  Index order() const { return core.order(); }
  Index rank(Index m) const { return core.dim(m); }
  std::vector<Index> ranks() const { return core.dims(); }
};

/// Exact multilinear decomposition: every mode matrix is the left
/// orthonormal factor of the mode-m matrixizing; the core is the full
/// projection.  Reconstruction matches the input to ~1e-10 relative.
TuckerModel m_mode_svd(const DenseTensor& d);

/// Keeps the leading ranks[m] columns per mode and the matching core
/// block, then restores the canonical core form (a pure gauge change, the
/// reconstruction is untouched).
TuckerModel truncate(const TuckerModel& model, std::span<const Index> ranks);

struct AlsOptions {
  Index max_iters = 50;
  std::optional<double> tol; // default: 1e-6 * |d|^2
};

/// Locally optimal rank-(ranks) approximation by alternating least
/// squares from a truncated M-mode SVD start.  The trace carries
/// e_n = |d - reconstruction|^2 per sweep and stops once
/// e_{n-1} - e_n <= tol.
TuckerModel tucker_als(const DenseTensor& d, std::span<const Index> ranks,
                       const AlsOptions& opts = {}, LossTrace* trace = nullptr);

DenseTensor reconstruct(const TuckerModel& model);

/// Extended core T = Z x_0 U_0 (measurement basis restored on mode 0).
DenseTensor extended_core(const TuckerModel& model);

/// Best rank-1 approximation factors: unit vectors per mode and a
/// nonnegative scale.  degenerate marks the zero-input fallback.
struct Rank1Factors {
  std::vector<Eigen::VectorXd> unit_vectors;
  double scale = 0.0;
  bool converged = false;
  bool degenerate = false;
};

Rank1Factors rank_one_approx(const DenseTensor& t, Index max_iters = 200, double tol = 1e-14);

DenseTensor rank_one_reconstruct(const Rank1Factors& f);

/// Mean-centered truncated-SVD baseline over a column-per-observation
/// matrix.
struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;           // I_0 x rank, orthonormal columns
  Eigen::VectorXd singular_values; // of the centered data
};

PcaModel pca_baseline(const Eigen::MatrixXd& observations, Index rank);
Eigen::MatrixXd pca_coefficients(const PcaModel& model, const Eigen::MatrixXd& observations);

/// Norms of the mode-m core slabs (the mode singular values).
Eigen::VectorXd core_slab_norms(const DenseTensor& core, Index mode);

} // namespace chtf
