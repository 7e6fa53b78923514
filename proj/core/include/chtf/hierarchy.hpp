#pragma once

#include <optional>
#include <span>
#include <vector>

#include "chtf/filter_bank.hpp"
#include "chtf/tensor.hpp"
#include "chtf/tucker.hpp"

namespace chtf {

/// One whole-or-part factor set: core Z_s and column-orthonormal mode
/// matrices U_{c,s}.  Inactive segments are inert placeholders (all-zero
/// data segment, or a mode truncated to rank 0) kept so segment indexing
/// stays stable.
struct Segment {
  bool active = false;
  DenseTensor core;                                  // Z_s
  std::vector<Eigen::MatrixXd> mode_matrices;        // U_{c,s}: I_c x R_{c,s}
  std::vector<Eigen::VectorXd> mode_singular_values; // per-mode spectra

  std::vector<Index> ranks() const;
};

/// Per-segment factorizations plus the bank that cut the segments.  The
/// block-diagonal hierarchical core is never materialized; all block
/// algebra runs segment-wise.  Reconstruction is
/// sum_s Z_s x_0 U_{0,s} x_1 ... x_C U_{C,s} (plus the mean when set).
struct HierarchicalModel {
  std::vector<Segment> segments;
  SegmentFilterBank bank;
  std::vector<Index> data_dims;
  std::optional<Eigen::VectorXd> mean;
  LossTrace trace;                   // convergence record of the producing run
  bool rank_deficient_solve = false; // a pseudo-inverse hit its cutoff

  Index segment_count() const { return static_cast<Index>(segments.size()); }
};

/// Per-segment exact M-mode SVDs of D_s = D x_0 H_s.  Numerically zero
/// singular values are trimmed so segment factors never carry junk
/// directions outside their support; an all-zero segment becomes an
/// inactive placeholder.
HierarchicalModel chtf_init(const DenseTensor& d, const SegmentFilterBank& bank);

/// Global dimensionality reduction: per mode, the singular values of all
/// segments are merged, sorted descending (ties: lower segment index,
/// then lower column index) and the columns behind the lowest values are
/// deleted with their core slabs.  total_ranks[c] == 0 keeps the mode
/// untouched.  Per-segment ranks may become unequal; a segment truncated
/// to rank 0 on any mode goes inactive.
HierarchicalModel chtf_truncate(const HierarchicalModel& model,
                                std::span<const Index> total_ranks);

/// Compositional factorization by block alternating least squares.  Each
/// sweep cycles the modes: the composite matrix U_cx is refreshed from
/// the matricized block-diagonal form D_[c] pinv(W_c^T), each U_{c,s}
/// block is re-orthonormalized to its leading left singular vectors, and
/// the non-zero core entries are re-solved through the segment-restricted
/// Kronecker system.  The trace holds e_n = 1/2 |D - rec|^2 per sweep and
/// the run stops once e_{n-1} - e_n <= tol (default 1e-6 |D|^2).
HierarchicalModel chtf_als(const DenseTensor& d, const SegmentFilterBank& bank,
                           std::span<const Index> total_ranks, const AlsOptions& opts = {});

/// Non-overlapping parts special case: the factorization decouples into
/// the concatenation of per-segment M-mode SVDs, which is already a fixed
/// point of chtf_als for disjoint banks.
HierarchicalModel chtf_independent(const DenseTensor& d, const SegmentFilterBank& bank);

/// Completely overlapping parts special case with one shared causal rank
/// tuple: per-segment causal factors from truncated per-segment SVDs, the
/// per-segment extended cores solved jointly through the stacked
/// Khatri-Rao pseudo-inverse (minimal-norm split when segments collide).
HierarchicalModel chtf_overlapping(const DenseTensor& d, const SegmentFilterBank& bank,
                                   std::span<const Index> shared_causal_ranks);

/// The stacked extended-core solve of the overlapping case with
/// caller-provided per-segment causal factors (one orthonormal matrix per
/// causal mode 1..C per segment).
HierarchicalModel chtf_overlapping_solve(
    const DenseTensor& d, const SegmentFilterBank& bank,
    const std::vector<std::vector<Eigen::MatrixXd>>& causal_factors);

DenseTensor chtf_reconstruct(const HierarchicalModel& model);

/// 1/2 |d - reconstruction|^2.  Orthonormality is enforced structurally;
/// its residual is reported by chtf_constraint_violation instead of being
/// folded into the loss.
double chtf_loss(const DenseTensor& d, const HierarchicalModel& model);

double chtf_constraint_violation(const HierarchicalModel& model);

/// Analytic gradient of chtf_loss w.r.t. the composite mode-c matrix with
/// the core held fixed: -D_[c] W_c + U_cx W_c^T W_c.
Eigen::MatrixXd chtf_mode_gradient(const DenseTensor& d, const HierarchicalModel& model,
                                   Index mode);

/// [U_{c,1} ... U_{c,S}] over active segments.
Eigen::MatrixXd composite_mode_matrix(const HierarchicalModel& model, Index mode);

/// Per-segment extended core T_s = Z_s x_0 U_{0,s}; empty for inactive
/// segments.
DenseTensor segment_extended_core(const Segment& seg);

} // namespace chtf
