#include "chtf/tucker.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace chtf {

namespace {

void require_ranks(const std::vector<Index>& have, std::span<const Index> want) {
  if (static_cast<Index>(want.size()) != static_cast<Index>(have.size()))
    throw ShapeError("rank list arity mismatch");
  for (size_t m = 0; m < have.size(); ++m)
    if (want[m] < 1 || want[m] > have[m])
      throw ShapeError("rank out of range on mode " + std::to_string(m));
}

// Negates core slabs to match sign flips applied to factor columns.
void flip_core_slab(DenseTensor& core, Index mode, Index slab) {
  Index inner = 1;
  for (Index c = 0; c < mode; ++c) inner *= core.dim(c);
  const Index rows = core.dim(mode);
  const Index outer = core.size() / (inner * rows);
  for (Index o = 0; o < outer; ++o) {
    double* base = core.data() + o * inner * rows + slab * inner;
    for (Index k = 0; k < inner; ++k) base[k] = -base[k];
  }
}

void apply_sign_convention(TuckerModel& model) {
  for (Index m = 0; m < model.order(); ++m) {
    Eigen::MatrixXd& u = model.mode_matrices[static_cast<size_t>(m)];
    Eigen::VectorXd signs = fix_column_signs(u);
    for (Index j = 0; j < signs.size(); ++j)
      if (signs[j] < 0) flip_core_slab(model.core, m, j);
  }
}

// Gauge pass: exact M-mode SVD of the (small) core, rotations absorbed
// into the mode matrices.  Restores slab-norm ordering and slab
// orthogonality after truncation or ALS without changing the
// reconstruction.
void canonicalize(TuckerModel& model) {
  const Index order = model.order();
  std::vector<Eigen::MatrixXd> rot(static_cast<size_t>(order));
  for (Index m = 0; m < order; ++m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(matrixize(model.core, m), Eigen::ComputeFullU);
    rot[static_cast<size_t>(m)] = svd.matrixU(); // square R_m x R_m
  }
  model.core = multi_mode_product_t(model.core, rot);
  for (Index m = 0; m < order; ++m)
    model.mode_matrices[static_cast<size_t>(m)] *= rot[static_cast<size_t>(m)];
  apply_sign_convention(model);
  model.mode_singular_values.resize(static_cast<size_t>(order));
  for (Index m = 0; m < order; ++m)
    model.mode_singular_values[static_cast<size_t>(m)] = core_slab_norms(model.core, m);
}

Eigen::MatrixXd leading_left_singular(const Eigen::MatrixXd& x, Index count) {
  Svd sv = left_singular(x);
  if (sv.u.cols() < count)
    throw NumericError("SVD returned fewer vectors than requested");
  Eigen::MatrixXd u = sv.u.leftCols(count);
  fix_column_signs(u);
  return u;
}

} // namespace

Eigen::VectorXd core_slab_norms(const DenseTensor& core, Index mode) {
  Eigen::MatrixXd m = matrixize(core, mode);
  return m.rowwise().norm();
}

TuckerModel m_mode_svd(const DenseTensor& d) {
  if (d.empty()) throw ShapeError("m_mode_svd: empty tensor");
  const Index order = d.order();
  TuckerModel model;
  model.mode_matrices.resize(static_cast<size_t>(order));
  for (Index m = 0; m < order; ++m) {
    Svd sv = left_singular(matrixize(d, m));
    const Index thin = std::min(d.dim(m), d.size() / d.dim(m));
    model.mode_matrices[static_cast<size_t>(m)] = sv.u.leftCols(thin);
  }
  model.core = multi_mode_product_t(d, model.mode_matrices);
  canonicalize(model);
  return model;
}

TuckerModel truncate(const TuckerModel& model, std::span<const Index> ranks) {
  require_ranks(model.ranks(), ranks);
  TuckerModel out;
  out.mean = model.mean;
  out.mode_matrices.resize(model.mode_matrices.size());
  for (size_t m = 0; m < model.mode_matrices.size(); ++m)
    out.mode_matrices[m] = model.mode_matrices[m].leftCols(ranks[m]);
  out.core = leading_block(model.core, ranks);
  canonicalize(out);
  return out;
}

DenseTensor reconstruct(const TuckerModel& model) {
  DenseTensor rec = multi_mode_product(model.core, model.mode_matrices);
  if (model.mean) {
    const Eigen::VectorXd& mu = *model.mean;
    for (Index i = 0; i < rec.size(); ++i) rec.flat(i) += mu[i % mu.size()];
  }
  return rec;
}

DenseTensor extended_core(const TuckerModel& model) {
  return mode_product(model.core, 0, model.mode_matrices[0]);
}

TuckerModel tucker_als(const DenseTensor& d, std::span<const Index> ranks,
                       const AlsOptions& opts, LossTrace* trace) {
  if (d.empty()) throw ShapeError("tucker_als: empty tensor");
  const Index order = d.order();
  std::vector<Index> full(static_cast<size_t>(order));
  for (Index m = 0; m < order; ++m)
    full[static_cast<size_t>(m)] = std::min(d.dim(m), d.size() / d.dim(m));
  require_ranks(full, ranks);
  if (opts.max_iters < 1) throw ShapeError("tucker_als: max_iters must be >= 1");

  const double norm_d2 = dot(d, d);
  const double tol = opts.tol.value_or(1e-6 * norm_d2);
  if (tol <= 0 && norm_d2 > 0) throw ShapeError("tucker_als: tol must be positive");

  // truncated M-mode SVD start
  std::vector<Eigen::MatrixXd> us(static_cast<size_t>(order));
  for (Index m = 0; m < order; ++m)
    us[static_cast<size_t>(m)] = leading_left_singular(matrixize(d, m), ranks[m]);

  auto loss_of = [&](const DenseTensor& core) {
    return std::max(0.0, norm_d2 - dot(core, core));
  };

  LossTrace local;
  LossTrace& tr = trace ? *trace : local;
  tr = LossTrace{};
  DenseTensor core = multi_mode_product_t(d, us);
  tr.values.push_back(loss_of(core));

  for (Index n = 1; n <= opts.max_iters; ++n) {
    DenseTensor projected;
    for (Index m = 0; m < order; ++m) {
      projected = multi_mode_product_t(d, us, m);
      us[static_cast<size_t>(m)] = leading_left_singular(matrixize(projected, m), ranks[m]);
    }
    core = mode_product(projected, order - 1, us.back().transpose());
    const double e = loss_of(core);
    if (!std::isfinite(e)) throw NumericError("tucker_als: non-finite loss");
    tr.values.push_back(e);
    tr.iterations = n;
    if (tr.values[static_cast<size_t>(n - 1)] - e <= tol) {
      tr.converged = true;
      break;
    }
  }

  TuckerModel model;
  model.core = std::move(core);
  model.mode_matrices = std::move(us);
  canonicalize(model);
  return model;
}

Rank1Factors rank_one_approx(const DenseTensor& t, Index max_iters, double tol) {
  if (t.order() < 2) throw ShapeError("rank_one_approx: order must be >= 2");
  const Index order = t.order();
  Rank1Factors out;
  out.unit_vectors.resize(static_cast<size_t>(order));

  if (frobenius_norm(t) == 0.0) {
    for (Index m = 0; m < order; ++m) {
      out.unit_vectors[static_cast<size_t>(m)] = Eigen::VectorXd::Zero(t.dim(m));
      out.unit_vectors[static_cast<size_t>(m)][0] = 1.0;
    }
    out.degenerate = true;
    out.converged = true;
    return out;
  }

  // deterministic start: leading left singular vector of each matrixizing
  for (Index m = 0; m < order; ++m)
    out.unit_vectors[static_cast<size_t>(m)] = leading_left_singular(matrixize(t, m), 1).col(0);

  auto contract_except = [&](Index skip) {
    DenseTensor r = t;
    for (Index m = 0; m < order; ++m) {
      if (m == skip) continue;
      r = mode_product(r, m, out.unit_vectors[static_cast<size_t>(m)].transpose());
    }
    return Eigen::Map<const Eigen::VectorXd>(r.data(), r.size()).eval();
  };

  double lambda_prev = 0.0;
  bool stalled = false;
  for (Index n = 0; n < max_iters && !stalled; ++n) {
    double lambda = 0.0;
    for (Index m = 0; m < order; ++m) {
      Eigen::VectorXd w = contract_except(m);
      lambda = w.norm();
      if (lambda == 0.0) { // exact cancellation, keep previous direction
        stalled = true;
        break;
      }
      out.unit_vectors[static_cast<size_t>(m)] = w / lambda;
    }
    out.scale = lambda;
    if (!stalled && std::abs(lambda - lambda_prev) <= tol * std::max(1.0, lambda)) {
      out.converged = true;
      break;
    }
    lambda_prev = lambda;
  }

  // deterministic signs: fix modes 1.. and let mode 0 absorb the flips so
  // the reconstruction and the nonnegative scale are untouched
  for (Index m = 1; m < order; ++m) {
    Eigen::VectorXd& v = out.unit_vectors[static_cast<size_t>(m)];
    for (Index i = 0; i < v.size(); ++i) {
      if (std::abs(v[i]) > 1e-12) {
        if (v[i] < 0) {
          v = -v;
          out.unit_vectors[0] = -out.unit_vectors[0];
        }
        break;
      }
    }
  }
  return out;
}

DenseTensor rank_one_reconstruct(const Rank1Factors& f) {
  DenseTensor t = outer(f.unit_vectors);
  t *= f.scale;
  return t;
}

PcaModel pca_baseline(const Eigen::MatrixXd& observations, Index rank) {
  if (rank < 1 || rank > std::min(observations.rows(), observations.cols()))
    throw ShapeError("pca_baseline: rank out of range");
  PcaModel model;
  model.mean = observations.rowwise().mean();
  Eigen::MatrixXd centered = observations.colwise() - model.mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  Eigen::MatrixXd u = svd.matrixU().leftCols(rank);
  fix_column_signs(u);
  model.basis = std::move(u);
  model.singular_values = svd.singularValues();
  return model;
}

Eigen::MatrixXd pca_coefficients(const PcaModel& model, const Eigen::MatrixXd& observations) {
  if (observations.rows() != model.mean.size())
    throw ShapeError("pca_coefficients: observation length mismatch");
  return model.basis.transpose() * (observations.colwise() - model.mean);
}

} // namespace chtf
