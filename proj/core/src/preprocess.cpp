#include "chtf/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace chtf {

namespace {

// Equalization mapping for one tile: clipped histogram, excess spread
// uniformly, then the usual (cdf - cdf_min) / (1 - cdf_min) ramp.  A tile
// with a single occupied bin maps identically, so flat regions survive.
std::vector<double> tile_mapping(const std::vector<double>& values, Index bins,
                                 double clip_limit) {
  std::vector<double> hist(static_cast<size_t>(bins), 0.0);
  for (double v : values) {
    Index b = std::min<Index>(bins - 1, static_cast<Index>(v * bins));
    hist[static_cast<size_t>(std::max<Index>(0, b))] += 1.0;
  }
  const double total = static_cast<double>(values.size());

  Index occupied = 0;
  for (double h : hist)
    if (h > 0) ++occupied;
  std::vector<double> lut(static_cast<size_t>(bins));
  if (occupied <= 1) {
    for (Index b = 0; b < bins; ++b)
      lut[static_cast<size_t>(b)] = (b + 0.5) / static_cast<double>(bins);
    return lut;
  }

  if (std::isfinite(clip_limit)) {
    const double cap = clip_limit * total / static_cast<double>(bins);
    double excess = 0.0;
    for (double& h : hist)
      if (h > cap) {
        excess += h - cap;
        h = cap;
      }
    const double bonus = excess / static_cast<double>(bins);
    for (double& h : hist) h += bonus;
  }

  double cdf = 0.0, cdf_min = -1.0;
  for (Index b = 0; b < bins; ++b) {
    cdf += hist[static_cast<size_t>(b)] / total;
    if (cdf_min < 0 && hist[static_cast<size_t>(b)] > 0) cdf_min = cdf;
    lut[static_cast<size_t>(b)] = cdf;
  }
  const double denom = 1.0 - cdf_min;
  for (double& v : lut) v = denom > 0 ? std::clamp((v - cdf_min) / denom, 0.0, 1.0) : v;
  return lut;
}

double lookup(const std::vector<double>& lut, double v, Index bins) {
  Index b = std::min<Index>(bins - 1,
                            std::max<Index>(0, static_cast<Index>(v * bins)));
  return lut[static_cast<size_t>(b)];
}

} // namespace

Eigen::VectorXd preprocess(const Eigen::VectorXd& image, const PreprocessOptions& opts) {
  if (opts.width < 1 || opts.height < 1 || opts.width * opts.height != image.size())
    throw ShapeError("preprocess: image geometry does not match data");
  if (opts.tiles_x < 1 || opts.tiles_y < 1 || opts.tiles_x > opts.width ||
      opts.tiles_y > opts.height)
    throw ShapeError("preprocess: invalid tile geometry");
  if (opts.bins < 2) throw ShapeError("preprocess: needs at least two bins");

  const double lo = image.minCoeff(), hi = image.maxCoeff();
  if (hi == lo) return image; // constant image maps to itself
  Eigen::VectorXd norm = (image.array() - lo) / (hi - lo);

  auto tile_x0 = [&](Index tx) { return tx * opts.width / opts.tiles_x; };
  auto tile_y0 = [&](Index ty) { return ty * opts.height / opts.tiles_y; };

  std::vector<std::vector<double>> luts(
      static_cast<size_t>(opts.tiles_x * opts.tiles_y));
  std::vector<double> centers_x(static_cast<size_t>(opts.tiles_x));
  std::vector<double> centers_y(static_cast<size_t>(opts.tiles_y));
  for (Index ty = 0; ty < opts.tiles_y; ++ty)
    for (Index tx = 0; tx < opts.tiles_x; ++tx) {
      std::vector<double> values;
      for (Index y = tile_y0(ty); y < tile_y0(ty + 1); ++y)
        for (Index x = tile_x0(tx); x < tile_x0(tx + 1); ++x)
          values.push_back(norm[y * opts.width + x]);
      luts[static_cast<size_t>(ty * opts.tiles_x + tx)] =
          tile_mapping(values, opts.bins, opts.clip_limit);
      centers_x[static_cast<size_t>(tx)] = 0.5 * (tile_x0(tx) + tile_x0(tx + 1) - 1);
      centers_y[static_cast<size_t>(ty)] = 0.5 * (tile_y0(ty) + tile_y0(ty + 1) - 1);
    }

  Eigen::VectorXd out(image.size());
  for (Index y = 0; y < opts.height; ++y)
    for (Index x = 0; x < opts.width; ++x) {
      // neighboring tile pair along each axis plus the blend weight
      Index tx1 = 0;
      while (tx1 + 1 < opts.tiles_x && centers_x[static_cast<size_t>(tx1 + 1)] <= x) ++tx1;
      Index tx2 = std::min<Index>(opts.tiles_x - 1, tx1 + 1);
      if (x < centers_x[static_cast<size_t>(tx1)]) tx2 = tx1;
      double ax = 0.0;
      if (tx2 != tx1)
        ax = (x - centers_x[static_cast<size_t>(tx1)]) /
             (centers_x[static_cast<size_t>(tx2)] - centers_x[static_cast<size_t>(tx1)]);

      Index ty1 = 0;
      while (ty1 + 1 < opts.tiles_y && centers_y[static_cast<size_t>(ty1 + 1)] <= y) ++ty1;
      Index ty2 = std::min<Index>(opts.tiles_y - 1, ty1 + 1);
      if (y < centers_y[static_cast<size_t>(ty1)]) ty2 = ty1;
      double ay = 0.0;
      if (ty2 != ty1)
        ay = (y - centers_y[static_cast<size_t>(ty1)]) /
             (centers_y[static_cast<size_t>(ty2)] - centers_y[static_cast<size_t>(ty1)]);

      const double v = norm[y * opts.width + x];
      const double v11 = lookup(luts[static_cast<size_t>(ty1 * opts.tiles_x + tx1)], v, opts.bins);
      const double v12 = lookup(luts[static_cast<size_t>(ty1 * opts.tiles_x + tx2)], v, opts.bins);
      const double v21 = lookup(luts[static_cast<size_t>(ty2 * opts.tiles_x + tx1)], v, opts.bins);
      const double v22 = lookup(luts[static_cast<size_t>(ty2 * opts.tiles_x + tx2)], v, opts.bins);
      out[y * opts.width + x] =
          (1 - ay) * ((1 - ax) * v11 + ax * v12) + ay * ((1 - ax) * v21 + ax * v22);
    }
  return out;
}

} // namespace chtf
