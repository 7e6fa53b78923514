#pragma once

#include <vector>

#include "chtf/tensor.hpp"

namespace chtf {

enum class BankKind { segmentation, pyramid, general };
enum class PyramidMode { gaussian, laplacian };

struct PyramidParams {
  Index width = 0;
  Index height = 0;
  Index levels = 0;
  PyramidMode mode = PyramidMode::gaussian;
};

/// A set of measurement-space operators {H_s}, each I_0 x I_0.
/// Segmentation filters are 0/1 diagonal selectors held as index sets;
/// pyramid levels are materialized blur/reduce/expand chains at full
/// resolution.  partition_flag means sum_s H_s equals the identity
/// exactly (bit level); it is set for complete disjoint segmentations
/// and never for blur banks, whose telescoping reconstruction is exact
/// only to rounding.
struct SegmentFilterBank {
  BankKind kind = BankKind::segmentation;
  Index measurement_dim = 0;
  std::vector<std::vector<Index>> regions;  // segmentation: sorted index sets
  std::vector<Eigen::MatrixXd> operators;   // pyramid/general: dense H_s
  PyramidParams pyramid;
  bool partition_flag = false;

  Index size() const {
    return kind == BankKind::segmentation ? static_cast<Index>(regions.size())
                                          : static_cast<Index>(operators.size());
  }
  bool disjoint_segmentation() const;
  bool full_support() const; // every filter touches the whole measurement vector
};

/// Diagonal 0/1 selectors over regions of [0, dim0); partition_flag is set
/// iff the regions partition the range exactly.
SegmentFilterBank make_segmentation_bank(Index dim0,
                                         const std::vector<std::vector<Index>>& regions);

SegmentFilterBank make_identity_bank(Index dim0);

/// Rectangular grid of disjoint image parts (row-major pixel order,
/// pixel (x, y) at index y*width + x).
SegmentFilterBank make_grid_bank(Index width, Index height, Index parts_x, Index parts_y);

/// Full-resolution pyramid operators built from 5-tap binomial
/// reduce/expand chains.  Level s of a Gaussian bank is
/// A_s = expand^s reduce^s (A_0 = I); a Laplacian bank holds the
/// differences of adjacent Gaussian levels with the final low-pass level
/// appended, so the levels sum back to the input to rounding error.
SegmentFilterBank make_pyramid_bank(Index width, Index height, Index levels, PyramidMode mode);

/// Dense H_s for any bank kind.
Eigen::MatrixXd filter_matrix(const SegmentFilterBank& bank, Index s);

Eigen::VectorXd apply_filter(const SegmentFilterBank& bank, Index s, const Eigen::VectorXd& v);

/// D_s = D x_0 H_s.  Segmentation selectors mask measurement fibers
/// bit-exactly.
DenseTensor segment_tensor(const DenseTensor& d, const SegmentFilterBank& bank, Index s);

} // namespace chtf
