#pragma once

#include <Eigen/Dense>

#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace schatten {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense K-way tensor. Storage is a flat array in column-major-style order:
/// the first index varies fastest. Entries are validated finite on
/// construction; all operations on tensors are pure.
class DenseTensor {
 public:
  DenseTensor() = default;

  /// Zero tensor of the given shape.
  explicit DenseTensor(std::vector<int> dims)
      : dims_(std::move(dims)), data_(checked_size(dims_), 0.0) {}

  DenseTensor(std::vector<int> dims, std::vector<double> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    if (static_cast<Eigen::Index>(data_.size()) != checked_size(dims_))
      throw std::invalid_argument("DenseTensor: data length does not match dims");
    if (!as_vector().allFinite())
      throw std::invalid_argument("DenseTensor: non-finite entry");
  }

  int order() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }
  int dim(int k) const { return dims_.at(static_cast<std::size_t>(k)); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](Eigen::Index i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](Eigen::Index i) const { return data_[static_cast<std::size_t>(i)]; }

  Eigen::Map<Vector> as_vector() {
    return {data_.data(), static_cast<Eigen::Index>(data_.size())};
  }
  Eigen::Map<const Vector> as_vector() const {
    return {data_.data(), static_cast<Eigen::Index>(data_.size())};
  }

  DenseTensor& operator+=(const DenseTensor& o) {
    require_same_dims(o);
    as_vector() += o.as_vector();
    return *this;
  }
  DenseTensor& operator-=(const DenseTensor& o) {
    require_same_dims(o);
    as_vector() -= o.as_vector();
    return *this;
  }
  DenseTensor& operator*=(double c) {
    as_vector() *= c;
    return *this;
  }

  friend DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
  friend DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
  friend DenseTensor operator*(double c, DenseTensor t) { return t *= c; }

  void require_same_dims(const DenseTensor& o) const {
    if (dims_ != o.dims_) throw std::invalid_argument("tensor dims mismatch");
  }

 private:
  static Eigen::Index checked_size(const std::vector<int>& dims) {
    if (dims.empty()) throw std::invalid_argument("DenseTensor: order must be >= 1");
    Eigen::Index n = 1;
    for (int d : dims) {
      if (d < 1) throw std::invalid_argument("DenseTensor: dims must be positive");
      n *= d;
    }
    return n;
  }

  std::vector<int> dims_;
  std::vector<double> data_;
};

namespace detail {

// Entry (i_1..i_K) of the mode-k unfolding sits at row i_k and column
// sum_{l != k} i_l * prod_{m < l, m != k} n_m (all 0-based): indices other
// than k vary with smaller mode index fastest. With first-index-fastest
// storage this makes each slab over the trailing modes a transposed block.
struct ModeSplit {
  Eigen::Index inner = 1;   // prod of dims before mode k
  Eigen::Index nk = 1;      // dim of mode k
  Eigen::Index outer = 1;   // prod of dims after mode k
};

inline ModeSplit mode_split(const std::vector<int>& dims, int mode) {
  if (mode < 0 || mode >= static_cast<int>(dims.size()))
    throw std::invalid_argument("mode index out of range");
  ModeSplit s;
  for (int m = 0; m < mode; ++m) s.inner *= dims[static_cast<std::size_t>(m)];
  s.nk = dims[static_cast<std::size_t>(mode)];
  for (int m = mode + 1; m < static_cast<int>(dims.size()); ++m)
    s.outer *= dims[static_cast<std::size_t>(m)];
  return s;
}

}  // namespace detail

/// Mode-k unfolding: n_k x (N / n_k) matrix of mode-k fibers.
inline Matrix unfold(const DenseTensor& t, int mode) {
  const auto s = detail::mode_split(t.dims(), mode);
  Matrix m(s.nk, s.inner * s.outer);
  for (Eigen::Index b = 0; b < s.outer; ++b) {
    Eigen::Map<const Matrix> slab(t.data() + b * s.inner * s.nk, s.inner, s.nk);
    m.block(0, b * s.inner, s.nk, s.inner) = slab.transpose();
  }
  return m;
}

/// Mode-k folding, the inverse of unfold for the given shape.
inline DenseTensor fold(const Matrix& m, int mode, const std::vector<int>& dims) {
  const auto s = detail::mode_split(dims, mode);
  if (m.rows() != s.nk || m.cols() != s.inner * s.outer)
    throw std::invalid_argument("fold: matrix shape does not match dims");
  std::vector<double> data(static_cast<std::size_t>(s.inner * s.nk * s.outer));
  for (Eigen::Index b = 0; b < s.outer; ++b) {
    Eigen::Map<Matrix> slab(data.data() + b * s.inner * s.nk, s.inner, s.nk);
    slab = m.block(0, b * s.inner, s.nk, s.inner).transpose();
  }
  return {dims, std::move(data)};
}

/// Mode-k product t x_k m: contracts mode k with the columns of m, so that
/// unfold(mode_product(t, m, k), k) == m * unfold(t, k).
inline DenseTensor mode_product(const DenseTensor& t, const Matrix& m, int mode) {
  if (m.cols() != t.dim(mode))
    throw std::invalid_argument("mode_product: inner dimension mismatch");
  std::vector<int> out_dims = t.dims();
  out_dims[static_cast<std::size_t>(mode)] = static_cast<int>(m.rows());
  return fold(m * unfold(t, mode), mode, out_dims);
}

inline double inner(const DenseTensor& a, const DenseTensor& b) {
  a.require_same_dims(b);
  return a.as_vector().dot(b.as_vector());
}

inline double frobenius_norm(const DenseTensor& t) { return t.as_vector().norm(); }

/// Relabels modes: result dims are dims[perm[0]], dims[perm[1]], ... and
/// entry (j_1..j_K) of the result equals entry (j at inverse positions) of t.
inline DenseTensor permute_modes(const DenseTensor& t, const std::vector<int>& perm) {
  const int k = t.order();
  if (static_cast<int>(perm.size()) != k)
    throw std::invalid_argument("permute_modes: bad permutation length");
  std::vector<bool> seen(static_cast<std::size_t>(k), false);
  std::vector<int> out_dims(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    const int p = perm[static_cast<std::size_t>(j)];
    if (p < 0 || p >= k || seen[static_cast<std::size_t>(p)])
      throw std::invalid_argument("permute_modes: not a permutation");
    seen[static_cast<std::size_t>(p)] = true;
    out_dims[static_cast<std::size_t>(j)] = t.dim(p);
  }
  DenseTensor out(out_dims);
  std::vector<Eigen::Index> in_strides(static_cast<std::size_t>(k), 1);
  for (int m = 1; m < k; ++m)
    in_strides[static_cast<std::size_t>(m)] =
        in_strides[static_cast<std::size_t>(m - 1)] * t.dim(m - 1);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(k), 0);
  for (Eigen::Index lin = 0; lin < out.size(); ++lin) {
    Eigen::Index src = 0;
    for (int j = 0; j < k; ++j)
      src += idx[static_cast<std::size_t>(j)] *
             in_strides[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])];
    out[lin] = t[src];
    for (int j = 0; j < k; ++j) {
      if (++idx[static_cast<std::size_t>(j)] < out.dim(j)) break;
      idx[static_cast<std::size_t>(j)] = 0;
    }
  }
  return out;
}

}  // namespace schatten
