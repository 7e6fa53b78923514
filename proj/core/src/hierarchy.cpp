#include "chtf/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "chtf/linalg.hpp"

namespace chtf {

namespace {

// Descending-mode-index Kronecker chain of Gram blocks
// (U_{C,s}^T U_{C,t}) kron ... kron (U_{0,s}^T U_{0,t}), optionally
// skipping one mode.
Eigen::MatrixXd gram_chain(const Segment& s, const Segment& t, Index skip_mode) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Ones(1, 1);
  for (Index c = static_cast<Index>(s.mode_matrices.size()) - 1; c >= 0; --c) {
    if (c == skip_mode) continue;
    g = kronecker(g, (s.mode_matrices[static_cast<size_t>(c)].transpose() *
                      t.mode_matrices[static_cast<size_t>(c)])
                         .eval());
  }
  return g;
}

struct BlockGramSolve {
  Eigen::MatrixXd solution;   // N x nrhs, blocks stacked by active segment
  double inner = 0.0;         // sum_j b_j . x_j
  bool rank_deficient = false;
};

// Minimum-norm least-squares solve of [K_1 ... K_S] X ~ RHS through the
// normal equations, where K_s is the descending Kronecker chain of the
// segment's mode matrices (mode skip_mode left out).  b must already be
// the stacked K_s^T RHS blocks; lhs_rows is the row count of the stacked
// Kronecker system, which sets the pseudo-inverse cutoff.
BlockGramSolve solve_block_gram(const std::vector<const Segment*>& segs, Index skip_mode,
                                const Eigen::MatrixXd& b, Index lhs_rows) {
  const Index n = b.rows();
  auto block_size = [&](const Segment& s) {
    Index prod = 1;
    for (Index c = 0; c < static_cast<Index>(s.mode_matrices.size()); ++c)
      if (c != skip_mode) prod *= s.mode_matrices[static_cast<size_t>(c)].cols();
    return prod;
  };
  Eigen::MatrixXd gram(n, n);
  Index row_at = 0;
  for (const Segment* s : segs) {
    Index col_at = 0;
    for (const Segment* t : segs) {
      Eigen::MatrixXd g = gram_chain(*s, *t, skip_mode);
      gram.block(row_at, col_at, g.rows(), g.cols()) = g;
      col_at += g.cols();
    }
    row_at += block_size(*s);
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  if (es.info() != Eigen::Success)
    throw NumericError("block Gram eigendecomposition failed");
  const Eigen::VectorXd& lambda = es.eigenvalues(); // ascending
  // normal-equations route: the Gram spectrum itself carries the rounding
  // noise, so the cutoff acts on lambda, not on sqrt(lambda)
  const double cutoff =
      static_cast<double>(std::max(lhs_rows, n)) * std::max(0.0, lambda[n - 1]) * 0x1.0p-52;

  BlockGramSolve out;
  Eigen::MatrixXd proj = es.eigenvectors().transpose() * b;
  Index kept = 0;
  for (Index i = 0; i < n; ++i) {
    if (lambda[i] > cutoff) {
      proj.row(i) /= lambda[i];
      ++kept;
    } else {
      proj.row(i).setZero();
    }
  }
  out.rank_deficient = kept < n;
  out.solution = es.eigenvectors() * proj;
  out.inner = (b.array() * out.solution.array()).sum();
  return out;
}

std::vector<const Segment*> active_segments(const HierarchicalModel& model) {
  std::vector<const Segment*> out;
  for (const Segment& s : model.segments)
    if (s.active) out.push_back(&s);
  return out;
}

// W_c^T of the matricized block-diagonal form: per active segment the
// block matrixize(Z_s x_{n != c} U_{n,s}, c), stacked.
Eigen::MatrixXd assemble_wt(const HierarchicalModel& model, Index mode) {
  std::vector<Eigen::MatrixXd> blocks;
  Index rows = 0, cols = 0;
  for (const Segment& s : model.segments) {
    if (!s.active) continue;
    DenseTensor p = multi_mode_product(s.core, s.mode_matrices, mode);
    blocks.push_back(matrixize(p, mode));
    rows += blocks.back().rows();
    cols = blocks.back().cols();
  }
  Eigen::MatrixXd wt(rows, cols);
  Index at = 0;
  for (const Eigen::MatrixXd& b : blocks) {
    wt.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  return wt;
}

// Projection core b-blocks for the restricted Kronecker solve:
// vec(d x_0 U_{0,s}^T ... x_C U_{C,s}^T) per active segment.
Eigen::VectorXd stacked_core_rhs(const DenseTensor& d, const std::vector<const Segment*>& segs) {
  Index n = 0;
  for (const Segment* s : segs) n += s->core.size();
  Eigen::VectorXd b(n);
  Index at = 0;
  for (const Segment* s : segs) {
    DenseTensor proj = multi_mode_product_t(d, s->mode_matrices);
    b.segment(at, proj.size()) = vectorize(proj);
    at += proj.size();
  }
  return b;
}

void require_bank_matches(const DenseTensor& d, const SegmentFilterBank& bank) {
  if (d.empty()) throw ShapeError("empty tensor");
  if (d.dim(0) != bank.measurement_dim)
    throw ShapeError("bank measurement dimension does not match tensor");
}

} // namespace

std::vector<Index> Segment::ranks() const {
  std::vector<Index> r;
  r.reserve(mode_matrices.size());
  for (const auto& u : mode_matrices) r.push_back(u.cols());
  return r;
}

HierarchicalModel chtf_init(const DenseTensor& d, const SegmentFilterBank& bank) {
  require_bank_matches(d, bank);
  HierarchicalModel model;
  model.bank = bank;
  model.data_dims = d.dims();
  const Index order = d.order();

  for (Index s = 0; s < bank.size(); ++s) {
    DenseTensor ds = segment_tensor(d, bank, s);
    Segment seg;
    if (frobenius_norm(ds) == 0.0) { // degenerate segment: inert placeholder
      model.segments.push_back(std::move(seg));
      continue;
    }
    seg.active = true;
    seg.mode_matrices.resize(static_cast<size_t>(order));
    seg.mode_singular_values.resize(static_cast<size_t>(order));
    for (Index c = 0; c < order; ++c) {
      Svd sv = left_singular(matrixize(ds, c));
      const Index thin = std::min(ds.dim(c), ds.size() / ds.dim(c));
      // trim numerically-zero directions so factors stay inside the
      // segment's support
      const double cutoff = pinv_cutoff(ds.dim(c), ds.size() / ds.dim(c), sv.sigma[0]);
      Index rank = 0;
      while (rank < thin && sv.sigma[rank] > cutoff) ++rank;
      if (rank == 0) {
        seg.active = false;
        break;
      }
      Eigen::MatrixXd u = sv.u.leftCols(rank);
      fix_column_signs(u);
      seg.mode_matrices[static_cast<size_t>(c)] = std::move(u);
      seg.mode_singular_values[static_cast<size_t>(c)] = sv.sigma.head(rank);
    }
    if (seg.active) seg.core = multi_mode_product_t(ds, seg.mode_matrices);
    model.segments.push_back(std::move(seg));
  }
  return model;
}

HierarchicalModel chtf_truncate(const HierarchicalModel& model,
                                std::span<const Index> total_ranks) {
  if (model.data_dims.empty()) throw ShapeError("chtf_truncate: empty model");
  const Index order = static_cast<Index>(model.data_dims.size());
  if (static_cast<Index>(total_ranks.size()) != order)
    throw ShapeError("chtf_truncate: rank list arity mismatch");

  HierarchicalModel out = model;
  for (Index c = 0; c < order; ++c) {
    const Index want = total_ranks[static_cast<size_t>(c)];
    if (want == 0) continue; // sentinel: keep the mode untouched
    // merged spectrum, descending; ties by lower segment then lower column
    struct Entry {
      double sigma;
      Index seg, col;
    };
    std::vector<Entry> entries;
    for (Index s = 0; s < out.segment_count(); ++s) {
      const Segment& seg = out.segments[static_cast<size_t>(s)];
      if (!seg.active) continue;
      const Eigen::VectorXd& sv = seg.mode_singular_values[static_cast<size_t>(c)];
      for (Index j = 0; j < sv.size(); ++j) entries.push_back({sv[j], s, j});
    }
    if (want < 1 || want > static_cast<Index>(entries.size()))
      throw ShapeError("chtf_truncate: rank out of range on mode " + std::to_string(c));
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      if (a.sigma != b.sigma) return a.sigma > b.sigma;
      if (a.seg != b.seg) return a.seg < b.seg;
      return a.col < b.col;
    });
    std::vector<Index> keep(static_cast<size_t>(out.segment_count()), 0);
    for (Index k = 0; k < want; ++k) {
      const Entry& e = entries[static_cast<size_t>(k)];
      // within a segment the spectrum is descending, so the kept set is a
      // prefix
      keep[static_cast<size_t>(e.seg)] = std::max(keep[static_cast<size_t>(e.seg)], e.col + 1);
    }
    for (Index s = 0; s < out.segment_count(); ++s) {
      Segment& seg = out.segments[static_cast<size_t>(s)];
      if (!seg.active) continue;
      const Index r = keep[static_cast<size_t>(s)];
      if (r == seg.core.dim(c)) continue;
      if (r == 0) {
        seg = Segment{}; // truncated away entirely; stays as placeholder
        continue;
      }
      seg.mode_matrices[static_cast<size_t>(c)] =
          seg.mode_matrices[static_cast<size_t>(c)].leftCols(r).eval();
      seg.mode_singular_values[static_cast<size_t>(c)] =
          seg.mode_singular_values[static_cast<size_t>(c)].head(r).eval();
      std::vector<Index> block = seg.core.dims();
      block[static_cast<size_t>(c)] = r;
      seg.core = leading_block(seg.core, block);
    }
  }
  return out;
}

HierarchicalModel chtf_independent(const DenseTensor& d, const SegmentFilterBank& bank) {
  if (!bank.disjoint_segmentation())
    throw ShapeError("chtf_independent: bank not disjoint");
  return chtf_init(d, bank);
}

HierarchicalModel chtf_als(const DenseTensor& d, const SegmentFilterBank& bank,
                           std::span<const Index> total_ranks, const AlsOptions& opts) {
  require_bank_matches(d, bank);
  if (opts.max_iters < 1) throw ShapeError("chtf_als: max_iters must be >= 1");
  const double norm_d2 = dot(d, d);
  const double tol = opts.tol.value_or(1e-6 * norm_d2);
  if (tol <= 0 && norm_d2 > 0) throw ShapeError("chtf_als: tol must be positive");

  HierarchicalModel model = chtf_truncate(chtf_init(d, bank), total_ranks);
  const Index order = d.order();

  model.trace = LossTrace{};
  model.trace.values.push_back(chtf_loss(d, model));

  std::vector<const Segment*> segs = active_segments(model);
  if (segs.empty()) { // nothing to optimize (zero data)
    model.trace.converged = true;
    return model;
  }

  for (Index n = 1; n <= opts.max_iters; ++n) {
    double sweep_inner = 0.0;
    for (Index c = 0; c < order; ++c) {
      // (1)-(2) composite mode matrix from the block matricized form
      Eigen::MatrixXd wt = assemble_wt(model, c);
      Eigen::MatrixXd ucx =
          pinv_solve(wt.transpose(), matrixize(d, c).transpose()).transpose();

      // (3) per-segment re-orthonormalization
      Index at = 0;
      for (Segment& seg : model.segments) {
        if (!seg.active) continue;
        const Index r = seg.core.dim(c);
        Eigen::MatrixXd block = ucx.middleCols(at, r);
        Svd sv = left_singular(block);
        Eigen::MatrixXd u = sv.u.leftCols(r);
        fix_column_signs(u);
        seg.mode_matrices[static_cast<size_t>(c)] = std::move(u);
        at += r;
      }

      // (4) non-zero core entries through the restricted Kronecker system
      segs = active_segments(model);
      Eigen::VectorXd b = stacked_core_rhs(d, segs);
      BlockGramSolve solve = solve_block_gram(segs, -1, b, d.size());
      model.rank_deficient_solve = model.rank_deficient_solve || solve.rank_deficient;
      Index off = 0;
      for (Segment& seg : model.segments) {
        if (!seg.active) continue;
        const Index sz = seg.core.size();
        seg.core = tensor_from_vec(solve.solution.col(0).segment(off, sz), seg.core.dims());
        off += sz;
      }
      sweep_inner = solve.inner;
    }

    const double e = 0.5 * std::max(0.0, norm_d2 - sweep_inner);
    if (!std::isfinite(e))
      throw NumericError("chtf_als: non-finite loss at iteration " + std::to_string(n));
    model.trace.values.push_back(e);
    model.trace.iterations = n;
    if (model.trace.values[static_cast<size_t>(n - 1)] - e <= tol) {
      model.trace.converged = true;
      break;
    }
  }
  return model;
}

HierarchicalModel chtf_overlapping(const DenseTensor& d, const SegmentFilterBank& bank,
                                   std::span<const Index> shared_causal_ranks) {
  require_bank_matches(d, bank);
  const Index order = d.order();
  if (static_cast<Index>(shared_causal_ranks.size()) != order - 1)
    throw ShapeError("chtf_overlapping: needs one shared rank per causal mode");
  for (Index c = 1; c < order; ++c) {
    const Index r = shared_causal_ranks[static_cast<size_t>(c - 1)];
    if (r < 1 || r > std::min(d.dim(c), d.size() / d.dim(c)))
      throw ShapeError("chtf_overlapping: rank out of range on mode " + std::to_string(c));
  }

  // per-segment truncated causal factors from the filtered data
  std::vector<std::vector<Eigen::MatrixXd>> factors;
  for (Index s = 0; s < bank.size(); ++s) {
    DenseTensor ds = segment_tensor(d, bank, s);
    std::vector<Eigen::MatrixXd> fs;
    if (frobenius_norm(ds) > 0.0) {
      for (Index c = 1; c < order; ++c) {
        Svd sv = left_singular(matrixize(ds, c));
        const Index r = shared_causal_ranks[static_cast<size_t>(c - 1)];
        Eigen::MatrixXd u = sv.u.leftCols(r);
        fix_column_signs(u);
        fs.push_back(std::move(u));
      }
    }
    factors.push_back(std::move(fs));
  }
  return chtf_overlapping_solve(d, bank, factors);
}

HierarchicalModel chtf_overlapping_solve(
    const DenseTensor& d, const SegmentFilterBank& bank,
    const std::vector<std::vector<Eigen::MatrixXd>>& causal_factors) {
  require_bank_matches(d, bank);
  if (!bank.full_support())
    throw ShapeError("chtf_overlapping: bank filters must be full-support");
  const Index order = d.order();
  if (static_cast<Index>(causal_factors.size()) != bank.size())
    throw ShapeError("chtf_overlapping: one factor list per segment required");

  HierarchicalModel model;
  model.bank = bank;
  model.data_dims = d.dims();

  for (Index s = 0; s < bank.size(); ++s) {
    const auto& fs = causal_factors[static_cast<size_t>(s)];
    Segment seg;
    if (!fs.empty()) {
      if (static_cast<Index>(fs.size()) != order - 1)
        throw ShapeError("chtf_overlapping: one factor per causal mode required");
      seg.active = true;
      seg.mode_matrices.resize(static_cast<size_t>(order));
      seg.mode_singular_values.resize(static_cast<size_t>(order));
      for (Index c = 1; c < order; ++c) {
        const Eigen::MatrixXd& u = fs[static_cast<size_t>(c - 1)];
        if (u.rows() != d.dim(c)) throw ShapeError("chtf_overlapping: factor extent mismatch");
        seg.mode_matrices[static_cast<size_t>(c)] = u;
        seg.mode_singular_values[static_cast<size_t>(c)] = Eigen::VectorXd::Zero(u.cols());
      }
    }
    model.segments.push_back(std::move(seg));
  }

  std::vector<const Segment*> segs = active_segments(model);
  if (segs.empty()) {
    model.trace.values.push_back(chtf_loss(d, model));
    model.trace.converged = true;
    return model;
  }

  // joint extended cores: stacked Khatri-Rao least squares over the
  // causal modes, minimal-norm when segments collide
  Index n = 0;
  for (const Segment* s : segs) {
    Index prod = 1;
    for (Index c = 1; c < order; ++c) prod *= s->mode_matrices[static_cast<size_t>(c)].cols();
    n += prod;
  }
  Eigen::MatrixXd b(n, d.dim(0));
  Index at = 0;
  for (const Segment* s : segs) {
    DenseTensor proj = d;
    for (Index c = 1; c < order; ++c)
      proj = mode_product(proj, c, s->mode_matrices[static_cast<size_t>(c)].transpose());
    Eigen::MatrixXd block = matrixize(proj, 0).transpose(); // (prod R) x I_0
    b.middleRows(at, block.rows()) = block;
    at += block.rows();
  }
  BlockGramSolve solve = solve_block_gram(segs, 0, b, d.size() / d.dim(0));
  model.rank_deficient_solve = solve.rank_deficient;

  at = 0;
  for (Segment& seg : model.segments) {
    if (!seg.active) continue;
    std::vector<Index> tdims(static_cast<size_t>(order));
    tdims[0] = d.dim(0);
    Index prod = 1;
    for (Index c = 1; c < order; ++c) {
      tdims[static_cast<size_t>(c)] = seg.mode_matrices[static_cast<size_t>(c)].cols();
      prod *= tdims[static_cast<size_t>(c)];
    }
    Eigen::MatrixXd t0 = solve.solution.middleRows(at, prod).transpose(); // I_0 x prod
    at += prod;
    DenseTensor t = unmatrixize(t0, 0, tdims);

    // factor the extended core back into an orthonormal mode-0 basis
    Svd sv = left_singular(t0);
    const Index thin = std::min<Index>(t0.rows(), t0.cols());
    const double cutoff =
        sv.sigma.size() ? pinv_cutoff(t0.rows(), t0.cols(), sv.sigma[0]) : 0.0;
    Index rank = 0;
    while (rank < thin && sv.sigma[rank] > cutoff) ++rank;
    if (rank == 0) {
      seg = Segment{};
      continue;
    }
    Eigen::MatrixXd u0 = sv.u.leftCols(rank);
    fix_column_signs(u0);
    seg.mode_matrices[0] = u0;
    seg.core = mode_product(t, 0, u0.transpose());
    for (Index c = 0; c < order; ++c)
      seg.mode_singular_values[static_cast<size_t>(c)] = core_slab_norms(seg.core, c);
  }

  model.trace.values.push_back(chtf_loss(d, model));
  model.trace.converged = true;
  return model;
}

DenseTensor chtf_reconstruct(const HierarchicalModel& model) {
  DenseTensor rec(model.data_dims);
  for (const Segment& seg : model.segments) {
    if (!seg.active) continue;
    rec += multi_mode_product(seg.core, seg.mode_matrices);
  }
  if (model.mean) {
    const Eigen::VectorXd& mu = *model.mean;
    for (Index i = 0; i < rec.size(); ++i) rec.flat(i) += mu[i % mu.size()];
  }
  return rec;
}

double chtf_loss(const DenseTensor& d, const HierarchicalModel& model) {
  DenseTensor r = d;
  r -= chtf_reconstruct(model);
  const double norm = frobenius_norm(r);
  return 0.5 * norm * norm;
}

double chtf_constraint_violation(const HierarchicalModel& model) {
  double worst = 0.0;
  for (const Segment& seg : model.segments) {
    if (!seg.active) continue;
    for (const Eigen::MatrixXd& u : seg.mode_matrices)
      worst = std::max(worst, orthonormality_defect(u));
  }
  return worst;
}

Eigen::MatrixXd chtf_mode_gradient(const DenseTensor& d, const HierarchicalModel& model,
                                   Index mode) {
  if (mode < 0 || mode >= static_cast<Index>(model.data_dims.size()))
    throw ShapeError("chtf_mode_gradient: mode out of range");
  Eigen::MatrixXd wt = assemble_wt(model, mode);
  Eigen::MatrixXd ucx = composite_mode_matrix(model, mode);
  return -matrixize(d, mode) * wt.transpose() + ucx * (wt * wt.transpose());
}

Eigen::MatrixXd composite_mode_matrix(const HierarchicalModel& model, Index mode) {
  Index rows = 0, cols = 0;
  for (const Segment& seg : model.segments) {
    if (!seg.active) continue;
    rows = seg.mode_matrices[static_cast<size_t>(mode)].rows();
    cols += seg.mode_matrices[static_cast<size_t>(mode)].cols();
  }
  Eigen::MatrixXd out(rows, cols);
  Index at = 0;
  for (const Segment& seg : model.segments) {
    if (!seg.active) continue;
    const Eigen::MatrixXd& u = seg.mode_matrices[static_cast<size_t>(mode)];
    out.middleCols(at, u.cols()) = u;
    at += u.cols();
  }
  return out;
}

DenseTensor segment_extended_core(const Segment& seg) {
  if (!seg.active) return DenseTensor{};
  return mode_product(seg.core, 0, seg.mode_matrices[0]);
}

} // namespace chtf
