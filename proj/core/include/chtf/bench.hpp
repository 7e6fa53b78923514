#pragma once

#include <optional>
#include <string>

#include "chtf/recognition.hpp"
#include "chtf/synth.hpp"

namespace chtf {

enum class Method {
  pca,
  global_tensorfaces,
  parts,
  gaussian,
  gaussian_weighted,
  laplacian,
  laplacian_weighted,
};

std::string method_name(Method m);
std::optional<Method> parse_method(const std::string& name);

/// Seeded verification benchmark: train every method on a synthetic
/// ensemble, verify on images of disjoint test identities under
/// configurable occlusion, all methods scored on identical pair lists
/// per seed.
struct BenchConfig {
  SynthOptions synth;      // training ensemble; synth.seed is the base seed
  Index test_people = 20;
  double occlusion = 0.25;
  Index reps = 10;
  std::vector<Method> methods = {Method::pca, Method::global_tensorfaces, Method::parts};
  Index pairs_per_class = 150;
  Index parts_x = 2;
  Index parts_y = 2;
  Index pyramid_levels = 3;
  Index pca_rank = 40;
  Index threads = 1; // additionally capped by CHTF_THREADS
};

struct SeedOutcome {
  double accuracy;
  double auc;
};

struct MethodReport {
  Method method;
  std::vector<SeedOutcome> per_seed; // ordered by seed
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  double auc_mean = 0.0;
  double runtime_seconds = 0.0;
  std::vector<RocPoint> roc; // first seed, plot-ready
};

struct BenchmarkReport {
  std::vector<MethodReport> rows;
  std::uint64_t pair_hash = 0; // digest of the shared per-seed pair lists
};

BenchmarkReport run_benchmark(const BenchConfig& config);

} // namespace chtf
