#include <doctest.h>

#include <cmath>

#include "chtf/filter_bank.hpp"
#include "chtf/rng.hpp"

using namespace chtf;

namespace {

DenseTensor random_tensor(std::vector<Index> dims, std::uint64_t seed) {
  Rng rng(seed);
  DenseTensor t(std::move(dims));
  for (Index i = 0; i < t.size(); ++i) t.flat(i) = rng.gaussian();
  return t;
}

std::vector<Index> range(Index lo, Index hi) { // [lo, hi)
  std::vector<Index> r;
  for (Index i = lo; i < hi; ++i) r.push_back(i);
  return r;
}

} // namespace

TEST_CASE("segmentation bank: two halves partition the identity") {
  SegmentFilterBank bank = make_segmentation_bank(8, {range(0, 4), range(4, 8)});
  CHECK(bank.partition_flag);
  CHECK(bank.disjoint_segmentation());
  Eigen::MatrixXd sum = filter_matrix(bank, 0) + filter_matrix(bank, 1);
  CHECK(sum == Eigen::MatrixXd::Identity(8, 8));
}

TEST_CASE("segmentation bank: overlapping regions clear the partition flag") {
  SegmentFilterBank bank = make_segmentation_bank(8, {range(0, 6), range(4, 8)});
  CHECK(!bank.partition_flag);
  CHECK(!bank.disjoint_segmentation());
}

TEST_CASE("segmentation bank: apply-and-sum reproduces any vector exactly") {
  SegmentFilterBank bank = make_segmentation_bank(9, {range(0, 2), range(2, 7), range(7, 9)});
  REQUIRE(bank.partition_flag);
  Rng rng(61);
  Eigen::VectorXd v = rng.gaussian_vector(9);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(9);
  for (Index s = 0; s < bank.size(); ++s) sum += apply_filter(bank, s, v);
  CHECK(sum == v); // bit exact for 0/1 selectors
}

TEST_CASE("segmentation bank rejects bad regions") {
  CHECK_THROWS_AS(make_segmentation_bank(4, {{0, 4}}), ShapeError);
  CHECK_THROWS_AS(make_segmentation_bank(4, {{0, 0}}), ShapeError);
  CHECK_THROWS_AS(make_segmentation_bank(4, {}), ShapeError);
}

TEST_CASE("segment_tensor: identity bank returns the tensor, partitions sum back") {
  DenseTensor d = random_tensor({6, 3, 2}, 62);
  SegmentFilterBank identity = make_identity_bank(6);
  CHECK(segment_tensor(d, identity, 0) == d);

  SegmentFilterBank bank = make_segmentation_bank(6, {range(0, 2), range(2, 6)});
  DenseTensor sum = segment_tensor(d, bank, 0);
  sum += segment_tensor(d, bank, 1);
  CHECK(sum == d);
}

TEST_CASE("segment_tensor matches the dense mode-product route") {
  DenseTensor d = random_tensor({5, 4}, 63);
  SegmentFilterBank bank = make_segmentation_bank(5, {{0, 2, 4}, {1, 3}});
  for (Index s = 0; s < 2; ++s) {
    DenseTensor fast = segment_tensor(d, bank, s);
    DenseTensor slow = mode_product(d, 0, filter_matrix(bank, s));
    DenseTensor diff = fast;
    diff -= slow;
    CHECK(frobenius_norm(diff) == 0.0);
  }
}

TEST_CASE("grid bank splits an image into disjoint parts") {
  SegmentFilterBank bank = make_grid_bank(4, 4, 2, 2);
  CHECK(bank.size() == 4);
  CHECK(bank.partition_flag);
  CHECK(bank.disjoint_segmentation());
  // part 0 holds the top-left quadrant in row-major pixel order
  CHECK(bank.regions[0] == std::vector<Index>{0, 1, 4, 5});
}

TEST_CASE("pyramid bank: single gaussian level is the identity") {
  SegmentFilterBank bank = make_pyramid_bank(4, 4, 1, PyramidMode::gaussian);
  CHECK(bank.size() == 1);
  CHECK(filter_matrix(bank, 0) == Eigen::MatrixXd::Identity(16, 16));
  CHECK(bank.partition_flag);
}

TEST_CASE("laplacian bank plus final low-pass collapses back to the input") {
  SegmentFilterBank bank = make_pyramid_bank(8, 8, 3, PyramidMode::laplacian);
  CHECK(bank.size() == 3);
  Rng rng(64);
  Eigen::VectorXd img = rng.gaussian_vector(64);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(64);
  for (Index s = 0; s < bank.size(); ++s) sum += apply_filter(bank, s, img);
  CHECK((sum - img).norm() < 1e-10 * img.norm());
}

TEST_CASE("constant image: laplacian levels vanish, gaussian levels stay constant") {
  Eigen::VectorXd img = Eigen::VectorXd::Constant(36, 3.25);
  SegmentFilterBank lap = make_pyramid_bank(6, 6, 3, PyramidMode::laplacian);
  for (Index s = 0; s + 1 < lap.size(); ++s)
    CHECK(apply_filter(lap, s, img).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((apply_filter(lap, lap.size() - 1, img) - img).cwiseAbs().maxCoeff() < 1e-10);

  SegmentFilterBank gauss = make_pyramid_bank(6, 6, 3, PyramidMode::gaussian);
  for (Index s = 0; s < gauss.size(); ++s)
    CHECK((apply_filter(gauss, s, img) - img).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pyramid bank rejects bad parameters") {
  CHECK_THROWS_AS(make_pyramid_bank(0, 4, 2, PyramidMode::gaussian), ShapeError);
  CHECK_THROWS_AS(make_pyramid_bank(4, 4, 0, PyramidMode::gaussian), ShapeError);
}

TEST_CASE("odd extents reduce without losing the constant") {
  SegmentFilterBank bank = make_pyramid_bank(5, 3, 3, PyramidMode::gaussian);
  Eigen::VectorXd img = Eigen::VectorXd::Constant(15, -1.5);
  for (Index s = 0; s < bank.size(); ++s)
    CHECK((apply_filter(bank, s, img) - img).cwiseAbs().maxCoeff() < 1e-10);
}
