#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "chtf/hierarchy.hpp"
#include "chtf/linalg.hpp"
#include "chtf/rng.hpp"

using namespace chtf;

namespace {

DenseTensor random_tensor(std::vector<Index> dims, std::uint64_t seed) {
  Rng rng(seed);
  DenseTensor t(std::move(dims));
  for (Index i = 0; i < t.size(); ++i) t.flat(i) = rng.gaussian();
  return t;
}

std::vector<Index> range(Index lo, Index hi) {
  std::vector<Index> r;
  for (Index i = lo; i < hi; ++i) r.push_back(i);
  return r;
}

double rel_recon_error(const HierarchicalModel& m, const DenseTensor& d) {
  DenseTensor r = d;
  r -= chtf_reconstruct(m);
  return frobenius_norm(r) / std::max(1e-300, frobenius_norm(d));
}

void check_trace_monotone(const LossTrace& trace) {
  for (size_t i = 0; i + 1 < trace.values.size(); ++i)
    CHECK(trace.values[i + 1] <= trace.values[i] + 1e-9);
}

} // namespace

TEST_CASE("chtf_init with the identity bank equals m_mode_svd") {
  DenseTensor d = random_tensor({5, 4, 3}, 201);
  HierarchicalModel h = chtf_init(d, make_identity_bank(5));
  TuckerModel t = m_mode_svd(d);
  REQUIRE(h.segments.size() == 1);
  REQUIRE(h.segments[0].active);
  for (Index c = 0; c < 3; ++c) {
    const Eigen::MatrixXd& uh = h.segments[0].mode_matrices[static_cast<size_t>(c)];
    const Eigen::MatrixXd& ut = t.mode_matrices[static_cast<size_t>(c)];
    REQUIRE(uh.cols() == ut.cols());
    for (Index j = 0; j < uh.cols(); ++j)
      CHECK(std::abs(uh.col(j).dot(ut.col(j))) > 1.0 - 1e-9);
  }
  CHECK(rel_recon_error(h, d) < 1e-10);
}

TEST_CASE("chtf_init: disjoint segments factor independently") {
  DenseTensor d = random_tensor({6, 3, 3}, 202);
  SegmentFilterBank bank = make_segmentation_bank(6, {range(0, 3), range(3, 6)});
  HierarchicalModel h = chtf_init(d, bank);
  for (Index s = 0; s < 2; ++s) {
    DenseTensor ds = segment_tensor(d, bank, s);
    TuckerModel ts = m_mode_svd(ds);
    DenseTensor rec = multi_mode_product(h.segments[static_cast<size_t>(s)].core,
                                         h.segments[static_cast<size_t>(s)].mode_matrices);
    DenseTensor diff = rec;
    diff -= reconstruct(ts);
    CHECK(frobenius_norm(diff) < 1e-9 * frobenius_norm(ds));
    // factors stay inside the segment's support
    const Eigen::MatrixXd& u0 = h.segments[static_cast<size_t>(s)].mode_matrices[0];
    for (Index i = 0; i < 6; ++i) {
      const bool inside = (s == 0) ? (i < 3) : (i >= 3);
      if (!inside) CHECK(u0.row(i).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  CHECK(rel_recon_error(h, d) < 1e-10);
}

TEST_CASE("chtf_init marks an all-zero segment inactive") {
  DenseTensor d = random_tensor({6, 3, 2}, 203);
  for (Index p = 0; p < d.size(); ++p)
    if (p % 6 >= 3) d.flat(p) = 0.0; // zero the second half of every fiber
  SegmentFilterBank bank = make_segmentation_bank(6, {range(0, 3), range(3, 6)});
  HierarchicalModel h = chtf_init(d, bank);
  CHECK(h.segments[0].active);
  CHECK(!h.segments[1].active);
  CHECK(rel_recon_error(h, d) < 1e-10);
}

TEST_CASE("chtf_truncate: full ranks keep the model") {
  DenseTensor d = random_tensor({4, 3, 3}, 204);
  SegmentFilterBank bank = make_segmentation_bank(4, {range(0, 2), range(2, 4)});
  HierarchicalModel h = chtf_init(d, bank);
  std::vector<Index> keep = {0, 0, 0};
  HierarchicalModel t = chtf_truncate(h, keep);
  CHECK(rel_recon_error(t, d) < 1e-10);
}

TEST_CASE("chtf_truncate follows the merged-spectrum oracle") {
  DenseTensor d = random_tensor({6, 4, 4}, 205);
  SegmentFilterBank bank = make_segmentation_bank(6, {range(0, 3), range(3, 6)});
  HierarchicalModel h = chtf_init(d, bank);

  const Index mode = 1;
  // independent oracle: merge, sort descending, count survivors per segment
  std::vector<std::pair<double, Index>> merged;
  for (Index s = 0; s < 2; ++s) {
    const Eigen::VectorXd& sv =
        h.segments[static_cast<size_t>(s)].mode_singular_values[static_cast<size_t>(mode)];
    for (Index j = 0; j < sv.size(); ++j) merged.push_back({sv[j], s});
  }
  std::sort(merged.begin(), merged.end(),
            [](auto& a, auto& b) { return a.first > b.first; });
  const Index want = 5;
  std::vector<Index> expect(2, 0);
  for (Index k = 0; k < want; ++k) expect[static_cast<size_t>(merged[static_cast<size_t>(k)].second)]++;

  std::vector<Index> ranks = {0, want, 0};
  HierarchicalModel t = chtf_truncate(h, ranks);
  for (Index s = 0; s < 2; ++s)
    CHECK(t.segments[static_cast<size_t>(s)].core.dim(mode) == expect[static_cast<size_t>(s)]);

  CHECK_THROWS_AS(chtf_truncate(h, std::vector<Index>{0, 99, 0}), ShapeError);
}

TEST_CASE("chtf_truncate can empty a dominated segment") {
  // segment 1 carries ~100x the energy, so rank-for-rank it wins each slot
  DenseTensor d = random_tensor({6, 3, 3}, 206);
  for (Index p = 0; p < d.size(); ++p)
    if (p % 6 < 3) d.flat(p) *= 100.0;
  SegmentFilterBank bank = make_segmentation_bank(6, {range(0, 3), range(3, 6)});
  HierarchicalModel h = chtf_init(d, bank);
  const Index r0 = h.segments[0].core.dim(1);
  std::vector<Index> ranks = {0, r0, 0};
  HierarchicalModel t = chtf_truncate(h, ranks);
  CHECK(t.segments[0].active);
  CHECK(!t.segments[1].active);
}

TEST_CASE("chtf_als with the identity bank matches tucker_als at convergence") {
  for (std::uint64_t seed : {301u, 302u, 303u}) {
    DenseTensor d = random_tensor({5, 5, 5}, seed);
    AlsOptions opts;
    opts.max_iters = 300;
    opts.tol = 1e-13 * dot(d, d);

    LossTrace tucker_trace;
    tucker_als(d, std::vector<Index>{2, 2, 2}, opts, &tucker_trace);

    std::vector<Index> ranks = {2, 2, 2};
    HierarchicalModel h = chtf_als(d, make_identity_bank(5), ranks, opts);
    check_trace_monotone(h.trace);

    // both sit at the same stationary loss; tucker records |D-rec|^2,
    // the hierarchy 1/2 |D-rec|^2
    const double e_tucker = 0.5 * tucker_trace.values.back();
    const double e_chtf = h.trace.values.back();
    CHECK(std::abs(e_tucker - e_chtf) <= 1e-9 * dot(d, d));
  }
}

TEST_CASE("chtf_als on a disjoint partition converges at initialization") {
  DenseTensor d = random_tensor({6, 3, 3}, 304);
  SegmentFilterBank bank = make_segmentation_bank(6, {range(0, 3), range(3, 6)});
  std::vector<Index> full = {0, 0, 0};
  HierarchicalModel h = chtf_als(d, bank, full);
  CHECK(h.trace.converged);
  CHECK(h.trace.values.front() < 1e-18 * dot(d, d)); // full ranks: exact from the start
  CHECK(rel_recon_error(h, d) < 1e-8);

  HierarchicalModel ind = chtf_independent(d, bank);
  DenseTensor diff = chtf_reconstruct(h);
  diff -= chtf_reconstruct(ind);
  CHECK(frobenius_norm(diff) < 1e-8 * frobenius_norm(d));
}

TEST_CASE("chtf_als recovers planted per-segment subspaces") {
  // two disjoint parts, each an independent rank-(2,2,2) model
  Rng rng(305);
  const Index half = 4;
  DenseTensor d({2 * half, 5, 5});
  std::vector<std::vector<Eigen::MatrixXd>> planted(2);
  for (Index s = 0; s < 2; ++s) {
    DenseTensor core = random_tensor({2, 2, 2}, 400 + static_cast<std::uint64_t>(s));
    Eigen::MatrixXd u0 = Eigen::MatrixXd::Zero(2 * half, 2);
    u0.block(s * half, 0, half, 2) = rng.orthonormal(half, 2);
    std::vector<Eigen::MatrixXd> us = {u0, rng.orthonormal(5, 2), rng.orthonormal(5, 2)};
    planted[static_cast<size_t>(s)] = us;
    d += multi_mode_product(core, us);
  }
  SegmentFilterBank bank =
      make_segmentation_bank(2 * half, {range(0, half), range(half, 2 * half)});

  std::vector<Index> ranks = {4, 4, 4}; // 2 per segment once the spectrum splits evenly
  AlsOptions opts;
  opts.max_iters = 100;
  HierarchicalModel h = chtf_als(d, bank, ranks, opts);
  check_trace_monotone(h.trace);
  CHECK(rel_recon_error(h, d) < 1e-8);
  for (Index s = 0; s < 2; ++s) {
    const Segment& seg = h.segments[static_cast<size_t>(s)];
    REQUIRE(seg.active);
    for (Index c = 0; c < 3; ++c) {
      REQUIRE(seg.mode_matrices[static_cast<size_t>(c)].cols() == 2);
      Eigen::VectorXd angles = principal_angles(
          seg.mode_matrices[static_cast<size_t>(c)], planted[static_cast<size_t>(s)][static_cast<size_t>(c)]);
      CHECK(angles.maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("independent-parts equivalence on seeded instances") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    DenseTensor d = random_tensor({8, 4, 3, 2}, 500 + seed);
    SegmentFilterBank bank = make_segmentation_bank(8, {range(0, 4), range(4, 8)});
    HierarchicalModel ind = chtf_independent(d, bank);
    std::vector<Index> full(4, 0);
    HierarchicalModel als = chtf_als(d, bank, full);

    DenseTensor diff = chtf_reconstruct(als);
    diff -= chtf_reconstruct(ind);
    CHECK(frobenius_norm(diff) < 1e-8 * frobenius_norm(d));
    for (size_t s = 0; s < 2; ++s)
      for (size_t c = 0; c < 4; ++c) {
        Eigen::VectorXd angles = principal_angles(als.segments[s].mode_matrices[c],
                                                  ind.segments[s].mode_matrices[c]);
        CHECK(angles.maxCoeff() < 1e-6);
      }
  }
  DenseTensor d = random_tensor({6, 3, 3}, 510);
  SegmentFilterBank overlapping = make_segmentation_bank(6, {range(0, 4), range(2, 6)});
  CHECK_THROWS_AS(chtf_independent(d, overlapping), ShapeError);
}

TEST_CASE("chtf_als handles a general overlapping segmentation bank") {
  DenseTensor d = random_tensor({6, 4, 3}, 520);
  SegmentFilterBank bank = make_segmentation_bank(6, {range(0, 4), range(2, 6)});
  std::vector<Index> ranks = {0, 4, 4};
  AlsOptions opts;
  opts.max_iters = 40;
  HierarchicalModel h = chtf_als(d, bank, ranks, opts);
  check_trace_monotone(h.trace);
  CHECK(h.trace.values.back() <= h.trace.values.front() + 1e-12);
  CHECK(chtf_constraint_violation(h) < 1e-8);
}

TEST_CASE("analytic mode-matrix gradient matches central finite differences") {
  for (std::uint64_t seed : {601u, 602u, 603u, 604u, 605u}) {
    DenseTensor d = random_tensor({6, 3, 3}, seed);
    SegmentFilterBank bank = make_segmentation_bank(6, {range(0, 4), range(2, 6)});
    std::vector<Index> ranks = {0, 3, 3};
    AlsOptions opts;
    opts.max_iters = 3;
    HierarchicalModel h = chtf_als(d, bank, ranks, opts);

    for (Index c = 0; c < 3; ++c) {
      Eigen::MatrixXd grad = chtf_mode_gradient(d, h, c);
      // central differences of chtf_loss over the composite entries
      const double step = 1e-5;
      Eigen::MatrixXd fd = Eigen::MatrixXd::Zero(grad.rows(), grad.cols());
      Index at = 0;
      for (size_t s = 0; s < h.segments.size(); ++s) {
        if (!h.segments[s].active) continue;
        Eigen::MatrixXd& u = h.segments[s].mode_matrices[static_cast<size_t>(c)];
        for (Index j = 0; j < u.cols(); ++j)
          for (Index i = 0; i < u.rows(); ++i) {
            const double keep = u(i, j);
            u(i, j) = keep + step;
            const double up = chtf_loss(d, h);
            u(i, j) = keep - step;
            const double down = chtf_loss(d, h);
            u(i, j) = keep;
            fd(i, at + j) = (up - down) / (2 * step);
          }
        at += u.cols();
      }
      CHECK((grad - fd).norm() < 1e-5 * std::max(1.0, fd.norm()));
    }
  }
}

TEST_CASE("chtf_overlapping: a single segment reduces to the global extended core") {
  DenseTensor d = random_tensor({6, 4, 3}, 701);
  SegmentFilterBank bank = make_identity_bank(6);
  std::vector<Index> shared = {2, 2};
  HierarchicalModel h = chtf_overlapping(d, bank, shared);
  REQUIRE(h.segments[0].active);

  TuckerModel global = m_mode_svd(d);
  TuckerModel trunc = truncate(global, std::vector<Index>{global.rank(0), 2, 2});
  DenseTensor diff = chtf_reconstruct(h);
  diff -= reconstruct(trunc);
  CHECK(frobenius_norm(diff) < 1e-8 * frobenius_norm(d));
}

TEST_CASE("chtf_overlapping splits identical segments by minimal norm") {
  DenseTensor d = random_tensor({5, 3, 3}, 702);
  // two identical full-support selectors: the stacked system is rank
  // deficient and the minimal-norm split halves the extended core
  SegmentFilterBank bank = make_segmentation_bank(5, {range(0, 5), range(0, 5)});
  std::vector<Index> shared = {3, 3};
  HierarchicalModel h = chtf_overlapping(d, bank, shared);
  CHECK(h.rank_deficient_solve);

  TuckerModel global = truncate(m_mode_svd(d), std::vector<Index>{5, 3, 3});
  DenseTensor diff = chtf_reconstruct(h);
  diff -= reconstruct(global);
  CHECK(frobenius_norm(diff) < 1e-8 * frobenius_norm(d));

  DenseTensor t0 = segment_extended_core(h.segments[0]);
  DenseTensor t1 = segment_extended_core(h.segments[1]);
  DenseTensor tdiff = t0;
  tdiff -= t1;
  CHECK(frobenius_norm(tdiff) < 1e-8 * frobenius_norm(t0));
}

TEST_CASE("chtf_overlapping recovers planted cores under orthogonal causal factors") {
  Rng rng(703);
  const Index i0 = 6, iv = 6, il = 4;
  // segment factors span orthogonal causal subspaces, so the joint solve
  // must put each extended core back where it was planted
  Eigen::MatrixXd v = rng.orthonormal(iv, 4), l = rng.orthonormal(il, 4);
  std::vector<DenseTensor> t_true;
  std::vector<std::vector<Eigen::MatrixXd>> factors;
  DenseTensor d({i0, iv, il});
  for (Index s = 0; s < 2; ++s) {
    DenseTensor t = random_tensor({i0, 2, 2}, 800 + static_cast<std::uint64_t>(s));
    std::vector<Eigen::MatrixXd> us = {v.middleCols(2 * s, 2), l.middleCols(2 * s, 2)};
    DenseTensor part = t;
    part = mode_product(part, 1, us[0]);
    part = mode_product(part, 2, us[1]);
    d += part;
    t_true.push_back(t);
    factors.push_back(us);
  }
  SegmentFilterBank bank = make_segmentation_bank(i0, {range(0, i0), range(0, i0)});
  HierarchicalModel h = chtf_overlapping_solve(d, bank, factors);
  CHECK(rel_recon_error(h, d) < 1e-8);
  for (Index s = 0; s < 2; ++s) {
    DenseTensor got = segment_extended_core(h.segments[static_cast<size_t>(s)]);
    DenseTensor diff = got;
    diff -= t_true[static_cast<size_t>(s)];
    CHECK(frobenius_norm(diff) <
          1e-8 * frobenius_norm(t_true[static_cast<size_t>(s)]));
  }
}

TEST_CASE("chtf_reconstruct and chtf_loss are consistent with the trace") {
  DenseTensor d = random_tensor({6, 4, 4}, 720);
  SegmentFilterBank bank = make_segmentation_bank(6, {range(0, 3), range(3, 6)});
  std::vector<Index> ranks = {0, 5, 5};
  HierarchicalModel h = chtf_als(d, bank, ranks);
  CHECK(std::abs(chtf_loss(d, h) - h.trace.values.back()) < 1e-9 * std::max(1.0, dot(d, d)));

  HierarchicalModel zero;
  zero.bank = bank;
  zero.data_dims = d.dims();
  zero.segments.resize(2);
  CHECK(chtf_loss(d, zero) == doctest::Approx(0.5 * dot(d, d)).epsilon(1e-12));
  CHECK(frobenius_norm(chtf_reconstruct(zero)) == 0.0);
}

TEST_CASE("S=1 reduction: perfect model has zero loss") {
  DenseTensor d = random_tensor({4, 3, 3}, 721);
  HierarchicalModel h = chtf_init(d, make_identity_bank(4));
  CHECK(chtf_loss(d, h) < 1e-18 * dot(d, d));
}
