#include <benchmark/benchmark.h>

#include "chtf/hierarchy.hpp"
#include "chtf/rng.hpp"
#include "chtf/tucker.hpp"

namespace {

chtf::DenseTensor random_tensor(std::vector<chtf::Index> dims, std::uint64_t seed) {
  chtf::Rng rng(seed);
  chtf::DenseTensor t(std::move(dims));
  for (chtf::Index i = 0; i < t.size(); ++i) t.flat(i) = rng.gaussian();
  return t;
}

void BM_m_mode_svd(benchmark::State& state) {
  chtf::DenseTensor d = random_tensor({48, 16, 8, 8}, 21);
  for (auto _ : state) benchmark::DoNotOptimize(chtf::m_mode_svd(d));
}
BENCHMARK(BM_m_mode_svd);

void BM_tucker_als(benchmark::State& state) {
  chtf::DenseTensor d = random_tensor({24, 24, 24}, 22);
  std::vector<chtf::Index> ranks = {6, 6, 6};
  chtf::AlsOptions opts;
  opts.max_iters = 10;
  for (auto _ : state) benchmark::DoNotOptimize(chtf::tucker_als(d, ranks, opts));
}
BENCHMARK(BM_tucker_als);

void BM_chtf_als_two_segments(benchmark::State& state) {
  chtf::DenseTensor d = random_tensor({16, 6, 5, 4}, 23);
  std::vector<std::vector<chtf::Index>> regions(2);
  for (chtf::Index i = 0; i < 16; ++i) regions[static_cast<size_t>(i / 8)].push_back(i);
  chtf::SegmentFilterBank bank = chtf::make_segmentation_bank(16, regions);
  std::vector<chtf::Index> ranks = {0, 0, 0, 0};
  chtf::AlsOptions opts;
  opts.max_iters = 5;
  for (auto _ : state) benchmark::DoNotOptimize(chtf::chtf_als(d, bank, ranks, opts));
}
BENCHMARK(BM_chtf_als_two_segments);

void BM_rank_one_approx(benchmark::State& state) {
  chtf::DenseTensor t = random_tensor({12, 10, 8}, 24);
  for (auto _ : state) benchmark::DoNotOptimize(chtf::rank_one_approx(t));
}
BENCHMARK(BM_rank_one_approx);

} // namespace
