#include "chtf/tensor.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace chtf {

namespace {

Index checked_product(const std::vector<Index>& dims) {
  if (dims.empty()) throw ShapeError("tensor order must be >= 1");
  Index prod = 1;
  for (Index d : dims) {
    if (d <= 0) throw ShapeError("tensor extents must be positive");
    if (prod > std::numeric_limits<Index>::max() / d)
      throw ShapeError("tensor extent product overflows");
    prod *= d;
  }
  return prod;
}

void require_same_shape(const DenseTensor& a, const DenseTensor& b) {
  if (a.dims() != b.dims()) throw ShapeError("tensor shape mismatch");
}

void require_mode(const DenseTensor& t, Index mode) {
  if (mode < 0 || mode >= t.order())
    throw ShapeError("mode " + std::to_string(mode) + " out of range for order " +
                     std::to_string(t.order()));
}

} // namespace

DenseTensor::DenseTensor(std::vector<Index> dims)
    : dims_(std::move(dims)), data_(static_cast<size_t>(checked_product(dims_)), 0.0) {}

DenseTensor::DenseTensor(std::vector<Index> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  if (checked_product(dims_) != static_cast<Index>(data_.size()))
    throw ShapeError("data length does not match extent product");
}

Index DenseTensor::offset(std::span<const Index> idx) const {
  if (static_cast<Index>(idx.size()) != order()) throw ShapeError("index arity mismatch");
  Index off = 0, stride = 1;
  for (size_t c = 0; c < dims_.size(); ++c) {
    if (idx[c] < 0 || idx[c] >= dims_[c]) throw ShapeError("index out of range");
    off += idx[c] * stride;
    stride *= dims_[c];
  }
  return off;
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& rhs) {
  require_same_shape(*this, rhs);
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += rhs.data_[i];
  return *this;
}

DenseTensor& DenseTensor::operator-=(const DenseTensor& rhs) {
  require_same_shape(*this, rhs);
  for (size_t i = 0; i < data_.size(); ++i) data_[i] -= rhs.data_[i];
  return *this;
}

DenseTensor& DenseTensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
DenseTensor operator*(DenseTensor a, double s) { return a *= s; }

Eigen::MatrixXd matrixize(const DenseTensor& t, Index mode) {
  require_mode(t, mode);
  const Index rows = t.dim(mode);
  const Index cols = t.size() / rows;
  // inner = stride of `mode`; one outer step jumps a full mode slab.
  Index inner = 1;
  for (Index c = 0; c < mode; ++c) inner *= t.dim(c);
  const Index outer = t.size() / (inner * rows);

  Eigen::MatrixXd m(rows, cols);
  const double* src = t.data();
  for (Index o = 0; o < outer; ++o)
    for (Index j = 0; j < rows; ++j) {
      const double* block = src + o * inner * rows + j * inner;
      double* dst = m.data() + j + (o * inner) * rows; // column (o*inner+k), row j
      for (Index k = 0; k < inner; ++k) dst[k * rows] = block[k];
    }
  return m;
}

DenseTensor unmatrixize(const Eigen::MatrixXd& m, Index mode, std::vector<Index> dims) {
  const Index order = static_cast<Index>(dims.size());
  if (mode < 0 || mode >= order) throw ShapeError("unmatrixize: mode out of range");
  DenseTensor t(std::move(dims));
  const Index rows = t.dim(mode);
  Index inner = 1;
  for (Index c = 0; c < mode; ++c) inner *= t.dim(c);
  const Index outer = t.size() / (inner * rows);
  if (m.rows() != rows || m.cols() != t.size() / rows)
    throw ShapeError("unmatrixize: matrix shape does not match dims");

  double* dst = t.data();
  for (Index o = 0; o < outer; ++o)
    for (Index j = 0; j < rows; ++j) {
      double* block = dst + o * inner * rows + j * inner;
      const double* src = m.data() + j + (o * inner) * rows;
      for (Index k = 0; k < inner; ++k) block[k] = src[k * rows];
    }
  return t;
}

DenseTensor mode_product(const DenseTensor& t, Index mode, const Eigen::MatrixXd& b) {
  require_mode(t, mode);
  if (b.cols() != t.dim(mode))
    throw ShapeError("mode_product: inner dimensions mismatch (" + std::to_string(b.cols()) +
                     " vs " + std::to_string(t.dim(mode)) + ")");
  Eigen::MatrixXd prod = b * matrixize(t, mode);
  std::vector<Index> dims = t.dims();
  dims[static_cast<size_t>(mode)] = b.rows();
  return unmatrixize(prod, mode, std::move(dims));
}

DenseTensor multi_mode_product(const DenseTensor& t,
                               std::span<const Eigen::MatrixXd> ops,
                               Index skip_mode) {
  DenseTensor out = t;
  for (Index m = 0; m < static_cast<Index>(ops.size()); ++m) {
    if (m == skip_mode || ops[static_cast<size_t>(m)].size() == 0) continue;
    out = mode_product(out, m, ops[static_cast<size_t>(m)]);
  }
  return out;
}

DenseTensor multi_mode_product_t(const DenseTensor& t,
                                 std::span<const Eigen::MatrixXd> ops,
                                 Index skip_mode) {
  DenseTensor out = t;
  for (Index m = 0; m < static_cast<Index>(ops.size()); ++m) {
    if (m == skip_mode || ops[static_cast<size_t>(m)].size() == 0) continue;
    out = mode_product(out, m, ops[static_cast<size_t>(m)].transpose());
  }
  return out;
}

Eigen::VectorXd vectorize(const DenseTensor& t) {
  return Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
}

DenseTensor tensor_from_vec(const Eigen::VectorXd& v, std::vector<Index> dims) {
  return DenseTensor(std::move(dims), std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::MatrixXd kronecker(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Eigen::MatrixXd khatri_rao_block(std::span<const Eigen::MatrixXd> blocks_a,
                                 std::span<const Eigen::MatrixXd> blocks_b) {
  if (blocks_a.size() != blocks_b.size())
    throw ShapeError("khatri_rao_block: block count mismatch");
  if (blocks_a.empty()) throw ShapeError("khatri_rao_block: no blocks");
  Index rows = blocks_a[0].rows() * blocks_b[0].rows();
  Index cols = 0;
  for (size_t l = 0; l < blocks_a.size(); ++l) {
    if (blocks_a[l].rows() * blocks_b[l].rows() != rows)
      throw ShapeError("khatri_rao_block: inconsistent block row counts");
    cols += blocks_a[l].cols() * blocks_b[l].cols();
  }
  Eigen::MatrixXd out(rows, cols);
  Index at = 0;
  for (size_t l = 0; l < blocks_a.size(); ++l) {
    Eigen::MatrixXd k = kronecker(blocks_a[l], blocks_b[l]);
    out.middleCols(at, k.cols()) = k;
    at += k.cols();
  }
  return out;
}

DenseTensor outer(std::span<const Eigen::VectorXd> vectors) {
  if (vectors.empty()) throw ShapeError("outer: needs at least one vector");
  std::vector<Index> dims;
  dims.reserve(vectors.size());
  for (const auto& v : vectors) dims.push_back(v.size());
  DenseTensor t(std::move(dims));
  std::vector<Index> idx(vectors.size(), 0);
  for (Index p = 0; p < t.size(); ++p) {
    double prod = 1.0;
    for (size_t c = 0; c < vectors.size(); ++c) prod *= vectors[c][idx[c]];
    t.flat(p) = prod;
    for (size_t c = 0; c < idx.size(); ++c) { // advance multi-index, mode 0 fastest
      if (++idx[c] < t.dim(static_cast<Index>(c))) break;
      idx[c] = 0;
    }
  }
  return t;
}

double frobenius_norm(const DenseTensor& t) {
  double s = 0.0;
  for (Index i = 0; i < t.size(); ++i) s += t.flat(i) * t.flat(i);
  return std::sqrt(s);
}

double dot(const DenseTensor& a, const DenseTensor& b) {
  require_same_shape(a, b);
  double s = 0.0;
  for (Index i = 0; i < a.size(); ++i) s += a.flat(i) * b.flat(i);
  return s;
}

DenseTensor leading_block(const DenseTensor& t, std::span<const Index> dims) {
  if (static_cast<Index>(dims.size()) != t.order())
    throw ShapeError("leading_block: arity mismatch");
  for (size_t c = 0; c < dims.size(); ++c)
    if (dims[c] < 1 || dims[c] > t.dim(static_cast<Index>(c)))
      throw ShapeError("leading_block: block exceeds extents");
  DenseTensor out(std::vector<Index>(dims.begin(), dims.end()));
  std::vector<Index> idx(dims.size(), 0);
  for (Index p = 0; p < out.size(); ++p) {
    out.flat(p) = t.at(idx);
    for (size_t c = 0; c < idx.size(); ++c) {
      if (++idx[c] < out.dim(static_cast<Index>(c))) break;
      idx[c] = 0;
    }
  }
  return out;
}

} // namespace chtf
