#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chtf/hierarchy.hpp"
#include "chtf/tensor.hpp"
#include "chtf/tucker.hpp"

namespace chtf {

/// Complete factorial ensemble of vectorized observations: mode 0 holds
/// measurements, causal modes are ordered (person, view, illumination,
/// [expression]) with one label per index.
struct LabeledEnsemble {
  DenseTensor tensor;
  std::vector<std::vector<std::string>> factor_labels; // one list per causal mode
};

void validate_ensemble(const LabeledEnsemble& ensemble);

constexpr Index kPersonMode = 1;

struct TrainOptions {
  bool center = false;
  // per-mode total ranks for truncation; empty keeps numerical full rank,
  // a 0 entry keeps that mode untouched
  std::vector<Index> ranks;
};

struct Projection;

/// Precomputed pseudo-inverse of a core basis' measurement matrixizing.
struct Projector {
  Eigen::MatrixXd pinv_t0;        // (prod causal ranks) x I_0
  std::vector<Index> causal_dims; // response tensor extents
};

/// Whole-observation factorization plus the extended core used for
/// projection.  Numerically-zero mode ranks are always trimmed so the
/// basis carries no junk directions.
struct GlobalModel {
  TuckerModel model;
  DenseTensor core_basis; // T = Z x_0 U_0
  Projector projector;
};

GlobalModel train_global(const LabeledEnsemble& ensemble, const TrainOptions& opts = {});

/// Part-based training: dispatches on the bank class.  Disjoint
/// segmentation banks use the decoupled per-segment route (the fixed
/// point of the block ALS), full-support banks the joint extended-core
/// solve, anything else the generic block ALS.
struct CompositionalOptions {
  bool center = false;
  std::vector<Index> total_ranks;          // for segmentation banks (0 = keep)
  std::vector<Index> shared_causal_ranks;  // for overlapping banks (empty = full)
  AlsOptions als;
};

struct CompositionalModel {
  HierarchicalModel model;
  std::vector<DenseTensor> core_bases; // per segment T_s; empty when inactive
  std::vector<Projector> projectors;   // per segment; empty when inactive
  std::vector<double> weights;         // nonnegative, sum 1 over active segments
};

CompositionalModel train_compositional(const LabeledEnsemble& ensemble,
                                       const SegmentFilterBank& bank,
                                       const CompositionalOptions& opts = {});

/// Rebuilds the projection state (per-segment core bases and the
/// variance-share weights) for an already-factorized model, e.g. one
/// loaded from an archive.
CompositionalModel attach_projection(HierarchicalModel model);

/// One unlabeled observation projected into the causal-factor spaces via
/// the pseudo-inverse of the core basis and a rank-1 decomposition of the
/// response tensor.
struct Projection {
  std::vector<Eigen::VectorXd> factors; // unit vectors, one per causal mode
  double scale = 0.0;
  bool zero_response = false;
  bool converged = false;
};

Projector make_projector(const DenseTensor& core_basis);
Projection multilinear_project(const Projector& projector, const Eigen::VectorXd& observation);

/// Per-segment person coefficient vectors plus the composite used for
/// verification.
struct Signature {
  std::vector<Eigen::VectorXd> person; // r_{P,s}; empty when the segment failed
  std::vector<double> weights;
  std::vector<bool> valid;

  Eigen::VectorXd composite() const;
};

Signature make_signature(const CompositionalModel& model, const Eigen::VectorXd& observation);
Signature make_signature(const GlobalModel& model, const Eigen::VectorXd& observation);

/// Sign-folded cosine similarity combined over segments:
/// sum_s w_s |cos(r_{P,s}^a, r_{P,s}^b)|, weights renormalized over the
/// segments valid in both signatures.
double signature_similarity(const Signature& a, const Signature& b);

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

struct VerificationResult {
  std::vector<double> scores;
  std::vector<bool> decisions;  // at the calibrated threshold
  double threshold = 0.0;       // chosen on the calibration half
  double accuracy = 0.0;        // on the evaluation half
  double auc = 0.0;
  std::vector<RocPoint> roc;    // fpr ascending, tpr non-decreasing
};

/// Pairwise verification: scores every pair, calibrates the decision
/// threshold on the even-indexed pairs, reports accuracy on the odd ones
/// and an ROC over the full sweep.  Pass explicit thresholds to override
/// the sweep grid.
VerificationResult verify_pairs(const std::vector<Signature>& a,
                                const std::vector<Signature>& b,
                                const std::vector<bool>& same,
                                std::span<const double> thresholds = {});

} // namespace chtf
