#include <benchmark/benchmark.h>

#include "chtf/rng.hpp"
#include "chtf/tensor.hpp"

namespace {

chtf::DenseTensor random_tensor(std::vector<chtf::Index> dims, std::uint64_t seed) {
  chtf::Rng rng(seed);
  chtf::DenseTensor t(std::move(dims));
  for (chtf::Index i = 0; i < t.size(); ++i) t.flat(i) = rng.gaussian();
  return t;
}

void BM_matrixize(benchmark::State& state) {
  const chtf::Index mode = state.range(0);
  chtf::DenseTensor t = random_tensor({64, 20, 12, 12}, 7);
  for (auto _ : state) benchmark::DoNotOptimize(chtf::matrixize(t, mode));
}
BENCHMARK(BM_matrixize)->Arg(0)->Arg(1)->Arg(3);

void BM_mode_product(benchmark::State& state) {
  chtf::DenseTensor t = random_tensor({64, 20, 12, 12}, 8);
  chtf::Rng rng(9);
  Eigen::MatrixXd b = rng.gaussian_matrix(32, 20);
  for (auto _ : state) benchmark::DoNotOptimize(chtf::mode_product(t, 1, b));
}
BENCHMARK(BM_mode_product);

void BM_kronecker(benchmark::State& state) {
  chtf::Rng rng(10);
  Eigen::MatrixXd a = rng.gaussian_matrix(24, 24), b = rng.gaussian_matrix(18, 18);
  for (auto _ : state) benchmark::DoNotOptimize(chtf::kronecker(a, b));
}
BENCHMARK(BM_kronecker);

} // namespace
