#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace chtf {

/// Seeded random source with self-contained distributions, so identical
/// seeds give bit-identical streams independent of the standard library's
/// distribution implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller.
  double gaussian();

  Eigen::VectorXd gaussian_vector(Eigen::Index n);
  Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols);

  /// Random matrix with orthonormal columns (rows >= cols), sign-fixed for
  /// determinism.
  Eigen::MatrixXd orthonormal(Eigen::Index rows, Eigen::Index cols);

  /// Fisher-Yates shuffle of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

} // namespace chtf
