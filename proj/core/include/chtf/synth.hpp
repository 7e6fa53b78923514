#pragma once

#include <cstdint>

#include "chtf/recognition.hpp"
#include "chtf/rng.hpp"
#include "chtf/tensor.hpp"

namespace chtf {

/// Factorial synthetic-ensemble generator: observations are
/// d(p, v, l) = T x_P p x_V v x_L l from a seeded random multilinear
/// model, optionally plus white noise.  View and illumination coefficient
/// rows share a dominant leading component (the concentration), so images
/// of one person stay correlated across conditions; person rows are
/// random unit vectors.  The seed fully determines every value.
struct SynthOptions {
  Index measurements = 256;
  Index width = 16; // width*height must equal measurements
  Index height = 16;
  Index people = 10;
  Index views = 6;
  Index illums = 6;
  Index rank_measurement = 0; // 0: full measurement rank
  Index rank_person = 6;
  Index rank_view = 3;
  Index rank_illum = 3;
  double concentration = 0.85; // weight of the shared leading view/illum component
  double noise = 0.0;          // additive, relative to the signal RMS
  std::uint64_t seed = 1;
};

struct SynthModel {
  DenseTensor core;             // planted Z (R_0 x R_P x R_V x R_L)
  Eigen::MatrixXd basis;        // planted U_0 (I_0 x R_0, orthonormal)
  DenseTensor core_basis;       // T = Z x_0 U_0
  Eigen::MatrixXd people;       // rows = person coefficients (unit)
  Eigen::MatrixXd views;        // rows = view coefficients (unit)
  Eigen::MatrixXd illums;       // rows = illumination coefficients (unit)
};

struct SynthResult {
  LabeledEnsemble ensemble;
  SynthModel truth;
};

SynthResult synth_ensemble(const SynthOptions& opts);

/// One observation for arbitrary coefficient vectors.
Eigen::VectorXd render(const SynthModel& truth, const Eigen::VectorXd& person,
                       const Eigen::VectorXd& view, const Eigen::VectorXd& illum);

/// Fresh unit person-coefficient rows from the same distribution as the
/// training people.
Eigen::MatrixXd sample_people(Index count, Index rank, Rng& rng);

/// Zeroes one contiguous block of round(fraction * length) measurements
/// at a seeded uniform position.
Eigen::VectorXd occlude(const Eigen::VectorXd& observation, double fraction, Rng& rng);

} // namespace chtf
