#include "chtf/filter_bank.hpp"

#include <algorithm>
#include <string>

namespace chtf {

namespace {

void require_segment(const SegmentFilterBank& bank, Index s) {
  if (s < 0 || s >= bank.size()) throw ShapeError("segment index out of range");
}

// reflect-101 border: ... 2 1 | 0 1 2 ... n-1 | n-2 n-3 ...
Index reflect101(Index i, Index n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

// 1-D blur+downsample matrix, kernel [1 4 6 4 1]/16, keep even samples.
Eigen::MatrixXd reduce_1d(Index n) {
  static const double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};
  const Index m = (n + 1) / 2;
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, n);
  for (Index o = 0; o < m; ++o)
    for (Index t = -2; t <= 2; ++t) r(o, reflect101(2 * o + t, n)) += k[t + 2];
  return r;
}

// 1-D zero-upsample+blur matrix, kernel doubled so constants survive.
Eigen::MatrixXd expand_1d(Index n) {
  static const double k[5] = {2.0 / 16, 8.0 / 16, 12.0 / 16, 8.0 / 16, 2.0 / 16};
  if (n == 1) return Eigen::MatrixXd::Identity(1, 1);
  const Index m = (n + 1) / 2;
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, m);
  for (Index o = 0; o < n; ++o)
    for (Index t = -2; t <= 2; ++t) {
      const Index up = o + t; // index in the zero-stuffed signal
      if (((reflect101(up, n)) & 1) == 0) e(o, reflect101(up, n) / 2) += k[t + 2];
    }
  return e;
}

// separable 2-D operator from per-axis 1-D operators (row-major pixels)
Eigen::MatrixXd separable_op(const Eigen::MatrixXd& col_op, const Eigen::MatrixXd& row_op) {
  return kronecker(col_op, row_op); // y-axis slow, x-axis fast
}

} // namespace

bool SegmentFilterBank::disjoint_segmentation() const {
  if (kind != BankKind::segmentation) return false;
  std::vector<char> seen(static_cast<size_t>(measurement_dim), 0);
  for (const auto& region : regions)
    for (Index i : region) {
      if (seen[static_cast<size_t>(i)]) return false;
      seen[static_cast<size_t>(i)] = 1;
    }
  return true;
}

bool SegmentFilterBank::full_support() const {
  if (kind == BankKind::segmentation) {
    for (const auto& region : regions)
      if (static_cast<Index>(region.size()) != measurement_dim) return false;
    return true;
  }
  return true;
}

SegmentFilterBank make_segmentation_bank(Index dim0,
                                         const std::vector<std::vector<Index>>& regions) {
  if (dim0 < 1) throw ShapeError("make_segmentation_bank: dim0 must be >= 1");
  if (regions.empty()) throw ShapeError("make_segmentation_bank: needs at least one region");
  SegmentFilterBank bank;
  bank.kind = BankKind::segmentation;
  bank.measurement_dim = dim0;
  std::vector<Index> cover(static_cast<size_t>(dim0), 0);
  for (const auto& region : regions) {
    std::vector<Index> r = region;
    std::sort(r.begin(), r.end());
    if (std::adjacent_find(r.begin(), r.end()) != r.end())
      throw ShapeError("make_segmentation_bank: duplicate index inside a region");
    for (Index i : r) {
      if (i < 0 || i >= dim0) throw ShapeError("make_segmentation_bank: index out of range");
      ++cover[static_cast<size_t>(i)];
    }
    bank.regions.push_back(std::move(r));
  }
  bank.partition_flag =
      std::all_of(cover.begin(), cover.end(), [](Index c) { return c == 1; });
  return bank;
}

SegmentFilterBank make_identity_bank(Index dim0) {
  std::vector<Index> all(static_cast<size_t>(dim0));
  for (Index i = 0; i < dim0; ++i) all[static_cast<size_t>(i)] = i;
  return make_segmentation_bank(dim0, {all});
}

SegmentFilterBank make_grid_bank(Index width, Index height, Index parts_x, Index parts_y) {
  if (width < 1 || height < 1) throw ShapeError("make_grid_bank: bad image geometry");
  if (parts_x < 1 || parts_x > width || parts_y < 1 || parts_y > height)
    throw ShapeError("make_grid_bank: bad grid");
  std::vector<std::vector<Index>> regions;
  for (Index py = 0; py < parts_y; ++py)
    for (Index px = 0; px < parts_x; ++px) {
      const Index x0 = px * width / parts_x, x1 = (px + 1) * width / parts_x;
      const Index y0 = py * height / parts_y, y1 = (py + 1) * height / parts_y;
      std::vector<Index> region;
      for (Index y = y0; y < y1; ++y)
        for (Index x = x0; x < x1; ++x) region.push_back(y * width + x);
      regions.push_back(std::move(region));
    }
  return make_segmentation_bank(width * height, regions);
}

SegmentFilterBank make_pyramid_bank(Index width, Index height, Index levels, PyramidMode mode) {
  if (width < 1 || height < 1) throw ShapeError("make_pyramid_bank: non-factorable dims");
  if (levels < 1) throw ShapeError("make_pyramid_bank: levels must be >= 1");
  const Index dim0 = width * height;

  SegmentFilterBank bank;
  bank.kind = BankKind::pyramid;
  bank.measurement_dim = dim0;
  bank.pyramid = {width, height, levels, mode};
  bank.partition_flag = false;

  // gaussian[l] = expand^l reduce^l at full resolution
  std::vector<Eigen::MatrixXd> gaussian;
  gaussian.push_back(Eigen::MatrixXd::Identity(dim0, dim0));
  Index w = width, h = height;
  Eigen::MatrixXd down = Eigen::MatrixXd::Identity(dim0, dim0);
  Eigen::MatrixXd up = Eigen::MatrixXd::Identity(dim0, dim0);
  for (Index l = 1; l < levels; ++l) {
    Eigen::MatrixXd reduce = separable_op(reduce_1d(h), reduce_1d(w));
    Eigen::MatrixXd expand = separable_op(expand_1d(h), expand_1d(w));
    down = reduce * down;
    up = up * expand;
    w = (w + 1) / 2;
    h = (h + 1) / 2;
    gaussian.push_back(up * down);
  }

  if (mode == PyramidMode::gaussian) {
    bank.operators = std::move(gaussian);
    if (levels == 1) bank.partition_flag = true; // single level is the identity
  } else {
    for (Index l = 0; l + 1 < levels; ++l) bank.operators.push_back(gaussian[l] - gaussian[l + 1]);
    bank.operators.push_back(gaussian[levels - 1]); // final low-pass closes the telescope
    if (levels == 1) bank.partition_flag = true;
  }
  return bank;
}

Eigen::MatrixXd filter_matrix(const SegmentFilterBank& bank, Index s) {
  require_segment(bank, s);
  if (bank.kind == BankKind::segmentation) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(bank.measurement_dim, bank.measurement_dim);
    for (Index i : bank.regions[static_cast<size_t>(s)]) h(i, i) = 1.0;
    return h;
  }
  return bank.operators[static_cast<size_t>(s)];
}

Eigen::VectorXd apply_filter(const SegmentFilterBank& bank, Index s, const Eigen::VectorXd& v) {
  require_segment(bank, s);
  if (v.size() != bank.measurement_dim)
    throw ShapeError("apply_filter: measurement length mismatch");
  if (bank.kind == BankKind::segmentation) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
    for (Index i : bank.regions[static_cast<size_t>(s)]) out[i] = v[i];
    return out;
  }
  return bank.operators[static_cast<size_t>(s)] * v;
}

DenseTensor segment_tensor(const DenseTensor& d, const SegmentFilterBank& bank, Index s) {
  require_segment(bank, s);
  if (d.dim(0) != bank.measurement_dim)
    throw ShapeError("segment_tensor: measurement extent mismatch");
  if (bank.kind == BankKind::segmentation) {
    std::vector<char> keep(static_cast<size_t>(bank.measurement_dim), 0);
    for (Index i : bank.regions[static_cast<size_t>(s)]) keep[static_cast<size_t>(i)] = 1;
    DenseTensor out(d.dims());
    const Index i0 = d.dim(0);
    for (Index p = 0; p < d.size(); ++p)
      out.flat(p) = keep[static_cast<size_t>(p % i0)] ? d.flat(p) : 0.0;
    return out;
  }
  return mode_product(d, 0, bank.operators[static_cast<size_t>(s)]);
}

} // namespace chtf
