#include "chtf/recognition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chtf/linalg.hpp"

namespace chtf {

namespace {

Eigen::VectorXd measurement_mean(const DenseTensor& d) {
  const Index i0 = d.dim(0);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(i0);
  for (Index p = 0; p < d.size(); ++p) mu[p % i0] += d.flat(p);
  mu /= static_cast<double>(d.size() / i0);
  return mu;
}

DenseTensor center_measurements(const DenseTensor& d, const Eigen::VectorXd& mu) {
  DenseTensor out = d;
  for (Index p = 0; p < out.size(); ++p) out.flat(p) -= mu[p % mu.size()];
  return out;
}

// Between-person variance of the rows of the segment's person factor;
// the "weighted" in weighted nearest neighbor.
double person_row_variance(const Eigen::MatrixXd& u_person) {
  if (u_person.rows() == 0) return 0.0;
  Eigen::RowVectorXd mean = u_person.colwise().mean();
  return (u_person.rowwise() - mean).squaredNorm() / static_cast<double>(u_person.rows());
}

double folded_cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::abs(a.dot(b)) / (na * nb);
}

} // namespace

void validate_ensemble(const LabeledEnsemble& ensemble) {
  if (ensemble.tensor.empty() || ensemble.tensor.order() < 2)
    throw ShapeError("ensemble needs a measurement mode and at least one causal mode");
  if (static_cast<Index>(ensemble.factor_labels.size()) != ensemble.tensor.order() - 1)
    throw ShapeError("ensemble needs one label list per causal mode");
  for (Index c = 1; c < ensemble.tensor.order(); ++c)
    if (static_cast<Index>(ensemble.factor_labels[static_cast<size_t>(c - 1)].size()) !=
        ensemble.tensor.dim(c))
      throw ShapeError("label list length does not match mode extent");
}

GlobalModel train_global(const LabeledEnsemble& ensemble, const TrainOptions& opts) {
  validate_ensemble(ensemble);
  DenseTensor data = ensemble.tensor;
  std::optional<Eigen::VectorXd> mean;
  if (opts.center) {
    mean = measurement_mean(data);
    data = center_measurements(data, *mean);
  }

  TuckerModel model = m_mode_svd(data);

  // trim numerically-zero mode ranks, then any requested truncation
  std::vector<Index> ranks = model.ranks();
  for (Index m = 0; m < model.order(); ++m) {
    const Eigen::VectorXd& sv = model.mode_singular_values[static_cast<size_t>(m)];
    const double cutoff =
        sv.size() ? pinv_cutoff(data.dim(m), data.size() / data.dim(m), sv[0]) : 0.0;
    Index r = 0;
    while (r < sv.size() && sv[r] > cutoff) ++r;
    ranks[static_cast<size_t>(m)] = std::max<Index>(1, r);
  }
  if (!opts.ranks.empty()) {
    if (opts.ranks.size() != ranks.size())
      throw ShapeError("train_global: rank list arity mismatch");
    for (size_t m = 0; m < ranks.size(); ++m)
      if (opts.ranks[m] > 0) ranks[m] = std::min(ranks[m], opts.ranks[m]);
  }
  model = truncate(model, ranks);
  model.mean = mean;

  GlobalModel out;
  out.core_basis = extended_core(model);
  out.projector = make_projector(out.core_basis);
  out.model = std::move(model);
  return out;
}

CompositionalModel train_compositional(const LabeledEnsemble& ensemble,
                                       const SegmentFilterBank& bank,
                                       const CompositionalOptions& opts) {
  validate_ensemble(ensemble);
  DenseTensor data = ensemble.tensor;
  std::optional<Eigen::VectorXd> mean;
  if (opts.center) {
    mean = measurement_mean(data);
    data = center_measurements(data, *mean);
  }

  CompositionalModel out;
  if (bank.disjoint_segmentation()) {
    out.model = chtf_independent(data, bank);
    if (!opts.total_ranks.empty()) out.model = chtf_truncate(out.model, opts.total_ranks);
  } else if (bank.full_support()) {
    std::vector<Index> shared = opts.shared_causal_ranks;
    if (shared.empty()) {
      shared.resize(static_cast<size_t>(data.order() - 1));
      for (Index c = 1; c < data.order(); ++c)
        shared[static_cast<size_t>(c - 1)] = std::min(data.dim(c), data.size() / data.dim(c));
    }
    out.model = chtf_overlapping(data, bank, shared);
  } else {
    std::vector<Index> ranks = opts.total_ranks;
    if (ranks.empty()) ranks.assign(static_cast<size_t>(data.order()), 0);
    out.model = chtf_als(data, bank, ranks, opts.als);
  }
  out.model.mean = mean;
  return attach_projection(std::move(out.model));
}

CompositionalModel attach_projection(HierarchicalModel model) {
  CompositionalModel out;
  out.model = std::move(model);
  out.core_bases.resize(out.model.segments.size());
  out.projectors.resize(out.model.segments.size());
  std::vector<double> variances(out.model.segments.size(), 0.0);
  double total = 0.0;
  for (size_t s = 0; s < out.model.segments.size(); ++s) {
    const Segment& seg = out.model.segments[s];
    if (!seg.active) continue;
    out.core_bases[s] = segment_extended_core(seg);
    out.projectors[s] = make_projector(out.core_bases[s]);
    variances[s] = person_row_variance(seg.mode_matrices[kPersonMode]);
    total += variances[s];
  }
  out.weights.resize(variances.size(), 0.0);
  for (size_t s = 0; s < variances.size(); ++s)
    out.weights[s] = total > 0 ? variances[s] / total : 0.0;
  return out;
}

Projector make_projector(const DenseTensor& core_basis) {
  if (core_basis.empty() || core_basis.order() < 2)
    throw ShapeError("make_projector: core basis must have causal modes");
  Projector p;
  p.causal_dims.assign(core_basis.dims().begin() + 1, core_basis.dims().end());
  p.pinv_t0 = pinv(matrixize(core_basis, 0));
  return p;
}

Projection multilinear_project(const Projector& projector, const Eigen::VectorXd& observation) {
  if (observation.size() != projector.pinv_t0.cols())
    throw ShapeError("multilinear_project: observation length mismatch");
  Projection out;
  Eigen::VectorXd response = projector.pinv_t0 * observation;

  const double scale_floor =
      1e-12 * projector.pinv_t0.norm() * std::max(observation.norm(), 1e-300);
  if (response.norm() <= scale_floor) {
    out.zero_response = true;
    out.factors.reserve(projector.causal_dims.size());
    for (Index dim : projector.causal_dims) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
      e[0] = 1.0;
      out.factors.push_back(std::move(e));
    }
    return out;
  }

  DenseTensor r = tensor_from_vec(response, projector.causal_dims);
  if (r.order() == 1) { // single causal mode: the response is the factor
    out.factors.push_back(response / response.norm());
    out.scale = response.norm();
    out.converged = true;
    return out;
  }
  Rank1Factors cp = rank_one_approx(r);
  out.factors = std::move(cp.unit_vectors);
  out.scale = cp.scale;
  out.converged = cp.converged; // on failure the best iterate is returned
  return out;
}

Eigen::VectorXd Signature::composite() const {
  Index n = 0;
  for (const auto& r : person) n += r.size();
  Eigen::VectorXd out(n);
  Index at = 0;
  for (const auto& r : person) {
    out.segment(at, r.size()) = r;
    at += r.size();
  }
  return out;
}

Signature make_signature(const CompositionalModel& model, const Eigen::VectorXd& observation) {
  const HierarchicalModel& h = model.model;
  if (observation.size() != h.bank.measurement_dim)
    throw ShapeError("make_signature: observation length mismatch");
  Eigen::VectorXd obs = observation;
  if (h.mean) obs -= *h.mean;

  Signature sig;
  sig.person.resize(h.segments.size());
  sig.valid.assign(h.segments.size(), false);
  sig.weights = model.weights;

  bool any = false;
  for (size_t s = 0; s < h.segments.size(); ++s) {
    const Segment& seg = h.segments[s];
    if (!seg.active) continue;
    Eigen::VectorXd filtered = apply_filter(h.bank, static_cast<Index>(s), obs);
    Projection proj = multilinear_project(model.projectors[s], filtered);
    if (proj.zero_response) continue; // failed segment keeps zero weight
    sig.person[s] = proj.factors[static_cast<size_t>(kPersonMode - 1)];
    sig.valid[s] = true;
    any = true;
  }
  if (!any) throw NumericError("make_signature: every segment failed");
  return sig;
}

Signature make_signature(const GlobalModel& model, const Eigen::VectorXd& observation) {
  Eigen::VectorXd obs = observation;
  if (model.model.mean) obs -= *model.model.mean;
  Projection proj = multilinear_project(model.projector, obs);
  if (proj.zero_response) throw NumericError("make_signature: zero response");
  Signature sig;
  sig.person = {proj.factors[static_cast<size_t>(kPersonMode - 1)]};
  sig.weights = {1.0};
  sig.valid = {true};
  return sig;
}

double signature_similarity(const Signature& a, const Signature& b) {
  if (a.person.size() != b.person.size())
    throw ShapeError("signature_similarity: segment count mismatch");
  double score = 0.0, weight = 0.0;
  for (size_t s = 0; s < a.person.size(); ++s) {
    if (!a.valid[s] || !b.valid[s]) continue;
    const double w = a.weights[s];
    score += w * folded_cosine(a.person[s], b.person[s]);
    weight += w;
  }
  return weight > 0 ? score / weight : 0.0;
}

VerificationResult verify_pairs(const std::vector<Signature>& a,
                                const std::vector<Signature>& b,
                                const std::vector<bool>& same,
                                std::span<const double> thresholds) {
  if (a.size() != b.size() || a.size() != same.size())
    throw ShapeError("verify_pairs: paired list length mismatch");
  if (a.empty()) throw ShapeError("verify_pairs: no pairs");

  VerificationResult out;
  out.scores.resize(a.size());
  for (size_t i = 0; i < a.size(); ++i) out.scores[i] = signature_similarity(a[i], b[i]);

  // threshold sweep grid: caller-provided or midpoints of observed scores
  std::vector<double> grid(thresholds.begin(), thresholds.end());
  if (grid.empty()) {
    std::vector<double> sorted = out.scores;
    std::sort(sorted.begin(), sorted.end());
    grid.push_back(sorted.front() - 1e-9);
    for (size_t i = 0; i + 1 < sorted.size(); ++i) grid.push_back(0.5 * (sorted[i] + sorted[i + 1]));
    grid.push_back(sorted.back() + 1e-9);
  }
  std::sort(grid.begin(), grid.end());

  // ROC over the full pair list, swept from high to low threshold so fpr
  // ascends and tpr never decreases
  Index positives = 0, negatives = 0;
  for (bool s : same) (s ? positives : negatives)++;
  out.roc.reserve(grid.size());
  for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
    const double th = *it;
    Index tp = 0, fp = 0;
    for (size_t i = 0; i < out.scores.size(); ++i) {
      if (out.scores[i] >= th) (same[i] ? tp : fp)++;
    }
    out.roc.push_back({th, negatives ? static_cast<double>(fp) / negatives : 0.0,
                       positives ? static_cast<double>(tp) / positives : 1.0});
  }
  double auc = 0.0;
  for (size_t i = 0; i + 1 < out.roc.size(); ++i)
    auc += 0.5 * (out.roc[i + 1].fpr - out.roc[i].fpr) * (out.roc[i + 1].tpr + out.roc[i].tpr);
  // extend to the (0,0)-(1,1) frame
  if (!out.roc.empty()) {
    auc += 0.5 * out.roc.front().fpr * out.roc.front().tpr;
    auc += 0.5 * (1.0 - out.roc.back().fpr) * (1.0 + out.roc.back().tpr);
  }
  out.auc = std::clamp(auc, 0.0, 1.0);

  // stratified split: within each class, pairs alternate between the
  // calibration and evaluation halves
  std::vector<char> calib(out.scores.size());
  {
    Index seen_pos = 0, seen_neg = 0;
    for (size_t i = 0; i < same.size(); ++i) {
      Index& seen = same[i] ? seen_pos : seen_neg;
      calib[i] = (seen++ % 2 == 0) ? 1 : 0;
    }
  }
  auto accuracy_on = [&](double th, char half) {
    Index good = 0, count = 0;
    for (size_t i = 0; i < out.scores.size(); ++i) {
      if (calib[i] != half) continue;
      ++count;
      if ((out.scores[i] >= th) == same[i]) ++good;
    }
    return count ? static_cast<double>(good) / count : 0.0;
  };
  double best_th = grid.front(), best_acc = -1.0;
  for (double th : grid) {
    const double acc = accuracy_on(th, 1);
    if (acc > best_acc) {
      best_acc = acc;
      best_th = th;
    }
  }
  out.threshold = best_th;
  out.accuracy = accuracy_on(best_th, 0);
  out.decisions.resize(out.scores.size());
  for (size_t i = 0; i < out.scores.size(); ++i) out.decisions[i] = out.scores[i] >= best_th;
  return out;
}

} // namespace chtf
