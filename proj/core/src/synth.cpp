#include "chtf/synth.hpp"

#include <cmath>
#include <string>

namespace chtf {

namespace {

Eigen::MatrixXd concentrated_rows(Index count, Index rank, double concentration, Rng& rng) {
  Eigen::MatrixXd rows(count, rank);
  for (Index i = 0; i < count; ++i) {
    Eigen::VectorXd g = rng.gaussian_vector(rank);
    g.normalize();
    Eigen::VectorXd lead = Eigen::VectorXd::Zero(rank);
    lead[0] = 1.0;
    Eigen::VectorXd row = std::sqrt(concentration) * lead +
                          std::sqrt(1.0 - concentration) * g;
    rows.row(i) = row.normalized();
  }
  return rows;
}

std::vector<std::string> index_labels(const char* prefix, Index count) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<size_t>(count));
  for (Index i = 0; i < count; ++i) labels.push_back(prefix + std::to_string(i));
  return labels;
}

} // namespace

Eigen::MatrixXd sample_people(Index count, Index rank, Rng& rng) {
  Eigen::MatrixXd rows(count, rank);
  for (Index i = 0; i < count; ++i) rows.row(i) = rng.gaussian_vector(rank).normalized();
  return rows;
}

SynthResult synth_ensemble(const SynthOptions& opts) {
  if (opts.measurements < 1 || opts.people < 1 || opts.views < 1 || opts.illums < 1)
    throw ShapeError("synth_ensemble: extents must be positive");
  if (opts.width * opts.height != opts.measurements)
    throw ShapeError("synth_ensemble: width*height must equal measurements");
  if (opts.rank_measurement < 0 || opts.rank_measurement > opts.measurements ||
      opts.rank_person < 1 || opts.rank_person > opts.people || opts.rank_view < 1 ||
      opts.rank_view > opts.views || opts.rank_illum < 1 || opts.rank_illum > opts.illums)
    throw ShapeError("synth_ensemble: rank out of range");
  if (opts.concentration < 0.0 || opts.concentration >= 1.0)
    throw ShapeError("synth_ensemble: concentration must be in [0, 1)");

  Rng rng(opts.seed);
  SynthModel truth;
  const Index r0 = opts.rank_measurement == 0 ? opts.measurements : opts.rank_measurement;
  truth.basis = rng.orthonormal(opts.measurements, r0);

  truth.core = DenseTensor({r0, opts.rank_person, opts.rank_view, opts.rank_illum});
  for (Index i = 0; i < truth.core.size(); ++i) truth.core.flat(i) = rng.gaussian();

  truth.people = sample_people(opts.people, opts.rank_person, rng);
  truth.views = concentrated_rows(opts.views, opts.rank_view, opts.concentration, rng);
  truth.illums = concentrated_rows(opts.illums, opts.rank_illum, opts.concentration, rng);
  truth.core_basis = mode_product(truth.core, 0, truth.basis);

  DenseTensor data = truth.core_basis;
  data = mode_product(data, 1, truth.people);
  data = mode_product(data, 2, truth.views);
  data = mode_product(data, 3, truth.illums);

  if (opts.noise > 0.0) {
    const double rms = frobenius_norm(data) / std::sqrt(static_cast<double>(data.size()));
    for (Index i = 0; i < data.size(); ++i) data.flat(i) += opts.noise * rms * rng.gaussian();
  }

  SynthResult out;
  out.ensemble.tensor = std::move(data);
  out.ensemble.factor_labels = {index_labels("p", opts.people), index_labels("v", opts.views),
                                index_labels("l", opts.illums)};
  out.truth = std::move(truth);
  return out;
}

Eigen::VectorXd render(const SynthModel& truth, const Eigen::VectorXd& person,
                       const Eigen::VectorXd& view, const Eigen::VectorXd& illum) {
  DenseTensor r = truth.core_basis;
  r = mode_product(r, 1, person.transpose());
  r = mode_product(r, 2, view.transpose());
  r = mode_product(r, 3, illum.transpose());
  return vectorize(r);
}

Eigen::VectorXd occlude(const Eigen::VectorXd& observation, double fraction, Rng& rng) {
  if (fraction < 0.0 || fraction > 1.0) throw ShapeError("occlude: fraction out of range");
  const Index n = observation.size();
  const Index len = static_cast<Index>(std::llround(fraction * static_cast<double>(n)));
  Eigen::VectorXd out = observation;
  if (len == 0) return out;
  const Index start = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - len + 1)));
  out.segment(start, len).setZero();
  return out;
}

} // namespace chtf
