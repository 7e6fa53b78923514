#pragma once

#include <Eigen/Dense>
#include <limits>

#include "chtf/tensor.hpp"

namespace chtf {

/// Tiled adaptive histogram equalization with clip limit.  The image is
/// split into tiles_x x tiles_y tiles, each tile's clipped histogram is
/// turned into an equalization mapping, and per-pixel outputs blend the
/// four surrounding tile mappings bilinearly.  clip_limit is a multiple
/// of the uniform bin height; infinity disables clipping, so a single
/// tile reduces to plain histogram equalization.  Deterministic.
struct PreprocessOptions {
  Index width = 0;
  Index height = 0;
  Index tiles_x = 4;
  Index tiles_y = 4;
  Index bins = 256;
  double clip_limit = 4.0;
};

Eigen::VectorXd preprocess(const Eigen::VectorXd& image, const PreprocessOptions& opts);

} // namespace chtf
