#include <doctest.h>

#include <cmath>

#include "chtf/linalg.hpp"
#include "chtf/rng.hpp"
#include "chtf/tucker.hpp"

using namespace chtf;

namespace {

DenseTensor random_tensor(std::vector<Index> dims, std::uint64_t seed) {
  Rng rng(seed);
  DenseTensor t(std::move(dims));
  for (Index i = 0; i < t.size(); ++i) t.flat(i) = rng.gaussian();
  return t;
}

double rel_recon_error(const TuckerModel& m, const DenseTensor& d) {
  DenseTensor r = d;
  r -= reconstruct(m);
  return frobenius_norm(r) / std::max(1e-300, frobenius_norm(d));
}

// invariant suite every factorization must satisfy
void check_tucker_invariants(const TuckerModel& m, double ortho_tol = 1e-10,
                             double all_ortho_tol = 1e-8) {
  const double core_energy = dot(m.core, m.core);
  for (Index mode = 0; mode < m.order(); ++mode) {
    CHECK(orthonormality_defect(m.mode_matrices[static_cast<size_t>(mode)]) < ortho_tol);
    Eigen::VectorXd norms = core_slab_norms(m.core, mode);
    for (Index a = 0; a + 1 < norms.size(); ++a) CHECK(norms[a] >= norms[a + 1] - 1e-12);
    CHECK((norms - m.mode_singular_values[static_cast<size_t>(mode)]).cwiseAbs().maxCoeff() <
          1e-10 * (norms[0] + 1));
    Eigen::MatrixXd slabs = matrixize(m.core, mode);
    Eigen::MatrixXd gram = slabs * slabs.transpose();
    for (Index a = 0; a < gram.rows(); ++a)
      for (Index b = 0; b < a; ++b)
        CHECK(std::abs(gram(a, b)) <= all_ortho_tol * std::max(core_energy, 1e-300));
  }
}

// planted low-multilinear-rank tensor with a known core energy split
DenseTensor planted(std::vector<Index> dims, std::vector<Index> ranks, std::uint64_t seed) {
  Rng rng(seed);
  DenseTensor core(ranks);
  for (Index i = 0; i < core.size(); ++i) core.flat(i) = rng.gaussian();
  DenseTensor out = core;
  for (size_t m = 0; m < dims.size(); ++m)
    out = mode_product(out, static_cast<Index>(m), rng.orthonormal(dims[m], ranks[m]));
  return out;
}

} // namespace

TEST_CASE("m_mode_svd: diagonal order-2 tensor") {
  DenseTensor d({3, 3});
  d({0, 0}) = 3;
  d({1, 1}) = 2;
  d({2, 2}) = 1;
  TuckerModel m = m_mode_svd(d);
  check_tucker_invariants(m);
  // factors are the identity up to sign, core the diagonal
  for (Index mode = 0; mode < 2; ++mode)
    CHECK((m.mode_matrices[static_cast<size_t>(mode)].cwiseAbs() -
           Eigen::MatrixXd::Identity(3, 3))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  CHECK(m.core({0, 0}) == doctest::Approx(3).epsilon(1e-12));
  CHECK(rel_recon_error(m, d) < 1e-12);
}

TEST_CASE("m_mode_svd factors match an independent per-mode SVD oracle") {
  DenseTensor d = random_tensor({3, 4, 5}, 101);
  TuckerModel m = m_mode_svd(d);
  check_tucker_invariants(m);
  for (Index mode = 0; mode < 3; ++mode) {
    Eigen::MatrixXd x = matrixize(d, mode);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU);
    const Eigen::MatrixXd& u = m.mode_matrices[static_cast<size_t>(mode)];
    REQUIRE(u.cols() == svd.matrixU().cols());
    for (Index j = 0; j < u.cols(); ++j) {
      const double cosine = std::abs(u.col(j).dot(svd.matrixU().col(j)));
      CHECK(cosine > 1.0 - 1e-9);
    }
    // singular values agree as well
    CHECK((m.mode_singular_values[static_cast<size_t>(mode)] - svd.singularValues()).norm() <
          1e-9 * svd.singularValues().norm());
  }
}

TEST_CASE("m_mode_svd of the zero tensor") {
  DenseTensor d({2, 3, 2});
  TuckerModel m = m_mode_svd(d);
  CHECK(frobenius_norm(m.core) == 0.0);
  for (Index mode = 0; mode < 3; ++mode)
    CHECK(orthonormality_defect(m.mode_matrices[static_cast<size_t>(mode)]) < 1e-12);
  CHECK(frobenius_norm(reconstruct(m)) == 0.0);
}

TEST_CASE("full-rank exactness on random tensors") {
  for (std::uint64_t seed : {7u, 8u, 9u}) {
    DenseTensor d = random_tensor({6, 5, 4, 3}, seed);
    TuckerModel m = m_mode_svd(d);
    CHECK(rel_recon_error(m, d) < 1e-10);
    check_tucker_invariants(m);
  }
}

TEST_CASE("truncate: full ranks keep the model, rank-1 input is exact") {
  DenseTensor d = random_tensor({4, 3, 3}, 110);
  TuckerModel m = m_mode_svd(d);
  TuckerModel full = truncate(m, m.ranks());
  CHECK(rel_recon_error(full, d) < 1e-10);

  DenseTensor r1 = planted({5, 4, 3}, {1, 1, 1}, 111);
  TuckerModel mr = truncate(m_mode_svd(r1), std::vector<Index>{1, 1, 1});
  CHECK(rel_recon_error(mr, r1) < 1e-10);
  check_tucker_invariants(mr);
}

TEST_CASE("truncate: error equals the energy of the discarded core entries") {
  DenseTensor d = random_tensor({4, 4, 4}, 112);
  TuckerModel m = m_mode_svd(d);
  std::vector<Index> ranks = {2, 2, 2};
  TuckerModel t = truncate(m, ranks);
  check_tucker_invariants(t);

  double discarded = 0.0;
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j)
      for (Index k = 0; k < 4; ++k)
        if (i >= 2 || j >= 2 || k >= 2) discarded += m.core({i, j, k}) * m.core({i, j, k});
  DenseTensor resid = d;
  resid -= reconstruct(t);
  CHECK(frobenius_norm(resid) ==
        doctest::Approx(std::sqrt(discarded)).epsilon(1e-10));

  CHECK_THROWS_AS(truncate(m, std::vector<Index>{5, 2, 2}), ShapeError);
  CHECK_THROWS_AS(truncate(m, std::vector<Index>{0, 2, 2}), ShapeError);
}

TEST_CASE("tucker_als recovers exact-multilinear-rank tensors") {
  DenseTensor d = planted({6, 6, 6}, {2, 2, 2}, 120);
  LossTrace trace;
  TuckerModel m = tucker_als(d, std::vector<Index>{2, 2, 2}, {}, &trace);
  CHECK(rel_recon_error(m, d) < 1e-9);
  check_tucker_invariants(m);
  CHECK(trace.converged);
}

TEST_CASE("tucker_als at full ranks reproduces m_mode_svd") {
  DenseTensor d = random_tensor({4, 3, 5}, 121);
  std::vector<Index> full = {4, 3, 5};
  for (size_t m = 0; m < full.size(); ++m)
    full[m] = std::min<Index>(full[m], d.size() / full[m]);
  TuckerModel als = tucker_als(d, full);
  CHECK(rel_recon_error(als, d) < 1e-9);
}

TEST_CASE("tucker_als improves on its truncated-SVD initialization") {
  DenseTensor d = random_tensor({5, 5, 5}, 122);
  AlsOptions opts;
  opts.max_iters = 50;
  opts.tol = 1e-15;
  LossTrace trace;
  tucker_als(d, std::vector<Index>{2, 2, 2}, opts, &trace);
  REQUIRE(trace.values.size() > 1);
  CHECK(trace.values.back() <= trace.values.front() + 1e-12);
  for (size_t i = 0; i + 1 < trace.values.size(); ++i)
    CHECK(trace.values[i + 1] <= trace.values[i] + 1e-9); // monotone within slack
}

TEST_CASE("rank_one_approx recovers an exact rank-1 tensor") {
  Rng rng(130);
  std::vector<Eigen::VectorXd> vs = {rng.gaussian_vector(5).normalized(),
                                     rng.gaussian_vector(4).normalized(),
                                     rng.gaussian_vector(3).normalized()};
  DenseTensor t = outer(vs);
  t *= 2.5;
  Rank1Factors f = rank_one_approx(t);
  CHECK(f.scale == doctest::Approx(2.5).epsilon(1e-9));
  for (size_t m = 0; m < 3; ++m)
    CHECK(std::abs(f.unit_vectors[m].dot(vs[m])) > 1.0 - 1e-9);
  DenseTensor resid = t;
  resid -= rank_one_reconstruct(f);
  CHECK(frobenius_norm(resid) < 1e-9 * frobenius_norm(t));
}

TEST_CASE("rank_one_approx on a matrix matches the dominant singular triplet") {
  DenseTensor t = random_tensor({6, 4}, 131);
  Rank1Factors f = rank_one_approx(t);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(matrixize(t, 0), Eigen::ComputeThinU | Eigen::ComputeThinV);
  CHECK(f.scale == doctest::Approx(svd.singularValues()[0]).epsilon(1e-9));
  CHECK(std::abs(f.unit_vectors[0].dot(svd.matrixU().col(0))) > 1.0 - 1e-9);
  CHECK(std::abs(f.unit_vectors[1].dot(svd.matrixV().col(0))) > 1.0 - 1e-9);
}

TEST_CASE("rank_one_approx residual bound on a separated rank-2 tensor") {
  Rng rng(132);
  std::vector<Eigen::VectorXd> a = {rng.gaussian_vector(6).normalized(),
                                    rng.gaussian_vector(5).normalized(),
                                    rng.gaussian_vector(4).normalized()};
  std::vector<Eigen::VectorXd> b = {rng.gaussian_vector(6).normalized(),
                                    rng.gaussian_vector(5).normalized(),
                                    rng.gaussian_vector(4).normalized()};
  DenseTensor t = outer(a);
  t *= 10.0;
  DenseTensor second = outer(b);
  second *= 0.5;
  t += second;
  Rank1Factors f = rank_one_approx(t);
  DenseTensor resid = t;
  resid -= rank_one_reconstruct(f);
  CHECK(frobenius_norm(resid) <= 0.5 + 1e-6);
}

TEST_CASE("rank_one_approx flags the zero tensor") {
  Rank1Factors f = rank_one_approx(DenseTensor({3, 3, 3}));
  CHECK(f.degenerate);
  CHECK(f.scale == 0.0);
  for (const auto& v : f.unit_vectors) CHECK(v.norm() == 1.0);
  CHECK_THROWS_AS(rank_one_approx(DenseTensor({5})), ShapeError);
}

TEST_CASE("reconstruct matches an explicit mode-product chain") {
  DenseTensor d = random_tensor({4, 3, 3}, 140);
  TuckerModel m = truncate(m_mode_svd(d), std::vector<Index>{2, 2, 2});
  DenseTensor direct = m.core;
  for (Index mode = 0; mode < 3; ++mode)
    direct = mode_product(direct, mode, m.mode_matrices[static_cast<size_t>(mode)]);
  DenseTensor diff = direct;
  diff -= reconstruct(m);
  CHECK(frobenius_norm(diff) == 0.0);
}

TEST_CASE("pca_baseline") {
  Rng rng(150);
  SUBCASE("full rank reconstructs exactly") {
    Eigen::MatrixXd obs = rng.gaussian_matrix(6, 10);
    PcaModel m = pca_baseline(obs, 6);
    Eigen::MatrixXd coef = pca_coefficients(m, obs);
    Eigen::MatrixXd rec = (m.basis * coef).colwise() + m.mean;
    CHECK((rec - obs).norm() < 1e-10 * obs.norm());
  }
  SUBCASE("2-D affine data has zero rank-2 residual") {
    Eigen::MatrixXd dirs = rng.gaussian_matrix(8, 2);
    Eigen::VectorXd offset = rng.gaussian_vector(8);
    Eigen::MatrixXd obs(8, 20);
    for (Index j = 0; j < 20; ++j) obs.col(j) = offset + dirs * rng.gaussian_vector(2);
    PcaModel m = pca_baseline(obs, 2);
    Eigen::MatrixXd coef = pca_coefficients(m, obs);
    Eigen::MatrixXd rec = (m.basis * coef).colwise() + m.mean;
    CHECK((rec - obs).norm() < 1e-10 * obs.norm());
  }
  SUBCASE("residual equals the discarded singular-value energy") {
    Eigen::MatrixXd obs = rng.gaussian_matrix(10, 30);
    PcaModel m = pca_baseline(obs, 3);
    Eigen::MatrixXd coef = pca_coefficients(m, obs);
    Eigen::MatrixXd rec = (m.basis * coef).colwise() + m.mean;
    double discarded = 0.0;
    for (Index i = 3; i < m.singular_values.size(); ++i)
      discarded += m.singular_values[i] * m.singular_values[i];
    CHECK((rec - obs).squaredNorm() == doctest::Approx(discarded).epsilon(1e-10));
  }
  SUBCASE("rank out of range") {
    Eigen::MatrixXd obs = rng.gaussian_matrix(4, 5);
    CHECK_THROWS_AS(pca_baseline(obs, 5), ShapeError);
    CHECK_THROWS_AS(pca_baseline(obs, 0), ShapeError);
  }
}

TEST_CASE("sign convention makes factorizations deterministic") {
  DenseTensor d = random_tensor({4, 4, 3}, 160);
  TuckerModel a = m_mode_svd(d), b = m_mode_svd(d);
  CHECK(a.core == b.core);
  for (size_t m = 0; m < 3; ++m) CHECK(a.mode_matrices[m] == b.mode_matrices[m]);
  for (Index mode = 0; mode < 3; ++mode)
    for (Index j = 0; j < a.mode_matrices[static_cast<size_t>(mode)].cols(); ++j) {
      const auto& col = a.mode_matrices[static_cast<size_t>(mode)].col(j);
      for (Index i = 0; i < col.size(); ++i) {
        if (std::abs(col[i]) > 1e-12) {
          CHECK(col[i] > 0.0);
          break;
        }
      }
    }
}

TEST_CASE("tall-skinny and direct left-singular paths agree") {
  Rng rng(170);
  // 4x300 forces the gram path; compare against the direct SVD
  Eigen::MatrixXd x = rng.gaussian_matrix(4, 300);
  Svd fast = left_singular(x);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU);
  CHECK((fast.sigma - svd.singularValues()).norm() < 1e-8 * svd.singularValues().norm());
  for (Index j = 0; j < 4; ++j)
    CHECK(std::abs(fast.u.col(j).dot(svd.matrixU().col(j))) > 1.0 - 1e-8);
}

TEST_CASE("extended core restores the measurement basis on mode 0") {
  DenseTensor d = random_tensor({5, 3, 2}, 180);
  TuckerModel m = m_mode_svd(d);
  DenseTensor t = extended_core(m);
  CHECK(t.dim(0) == 5);
  // reconstruction through the extended core skips the mode-0 product
  DenseTensor rec = t;
  for (Index mode = 1; mode < 3; ++mode)
    rec = mode_product(rec, mode, m.mode_matrices[static_cast<size_t>(mode)]);
  DenseTensor diff = rec;
  diff -= d;
  CHECK(frobenius_norm(diff) < 1e-10 * frobenius_norm(d));
}
