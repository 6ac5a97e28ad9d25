#pragma once

#include "schatten/tensor.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace schatten {

/// Raised when the underlying decomposition fails to converge. Kept distinct
/// from std::invalid_argument so callers can tell bad inputs from numerical
/// breakdown.
class SvdError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thin decomposition m = u * s.asDiagonal() * v.transpose() with
/// s sorted descending and u, v having orthonormal columns.
struct SvdResult {
  Matrix u;
  Vector s;
  Matrix v;
};

inline SvdResult thin_svd(const Matrix& m) {
  Eigen::BDCSVD<Matrix> bdc(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (bdc.info() == Eigen::Success)
    return {bdc.matrixU(), bdc.singularValues(), bdc.matrixV()};
  Eigen::JacobiSVD<Matrix> jac(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (jac.info() == Eigen::Success)
    return {jac.matrixU(), jac.singularValues(), jac.matrixV()};
  throw SvdError("thin_svd: decomposition did not converge");
}

/// Singular values only, sorted descending.
inline Vector singular_values(const Matrix& m) {
  Eigen::BDCSVD<Matrix> bdc(m);
  if (bdc.info() == Eigen::Success) return bdc.singularValues();
  Eigen::JacobiSVD<Matrix> jac(m);
  if (jac.info() == Eigen::Success) return jac.singularValues();
  throw SvdError("singular_values: decomposition did not converge");
}

/// lp norm of the singular value vector, p in [1, inf]. Scaled by the top
/// singular value so large p does not overflow.
inline double schatten_norm(const Matrix& m, double p) {
  if (std::isnan(p) || p < 1.0)
    throw std::invalid_argument("schatten_norm: p must be >= 1");
  const Vector s = singular_values(m);
  const double top = s.size() > 0 ? s(0) : 0.0;
  if (top == 0.0) return 0.0;
  if (std::isinf(p)) return top;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) acc += std::pow(s(i) / top, p);
  return top * std::pow(acc, 1.0 / p);
}

inline double spectral_norm(const Matrix& m) {
  return schatten_norm(m, std::numeric_limits<double>::infinity());
}

inline double trace_norm(const Matrix& m) { return schatten_norm(m, 1.0); }

namespace detail {

// The heavy per-iteration cost of the solvers is thresholding unfoldings
// that are short and wide. For those, the eigendecomposition of the small
// Gram matrix a*a^T is several times faster than a full SVD and only the
// singular pairs above the threshold, which are the well separated top ones,
// are ever formed. Guarded by use_gram_path so components near the Gram
// accuracy floor of about sqrt(eps) * sigma_max are never kept.
inline bool use_gram_path(const Matrix& m, double threshold) {
  const Eigen::Index lo = std::min(m.rows(), m.cols());
  const Eigen::Index hi = std::max(m.rows(), m.cols());
  return lo >= 16 && hi >= 2 * lo && threshold >= 1e-7 * m.norm();
}

}  // namespace detail

/// Soft thresholding of the singular values: each sigma becomes
/// max(sigma - tau, 0). Optionally reports the trace norm of the result.
inline Matrix svt(const Matrix& m, double tau, double* trace_norm_out = nullptr) {
  if (std::isnan(tau) || tau < 0.0)
    throw std::invalid_argument("svt: tau must be nonnegative");
  if (tau == 0.0) {
    if (trace_norm_out) *trace_norm_out = trace_norm(m);
    return m;
  }
  if (detail::use_gram_path(m, tau)) {
    // Kept components have sigma > tau; rebuild them from the Gram basis with
    // weight (sigma - tau) / sigma, everything below the cut vanishes.
    const bool wide = m.cols() >= m.rows();
    const Matrix gram =
        wide ? Matrix(m * m.transpose()) : Matrix(m.transpose() * m);
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    if (es.info() != Eigen::Success)
      throw SvdError("svt: gram eigendecomposition did not converge");
    const Vector& ev = es.eigenvalues();  // ascending
    const Eigen::Index n = ev.size();
    Eigen::Index k = 0;
    double kept_sum = 0.0;
    while (k < n) {
      const double sigma = std::sqrt(std::max(ev(n - 1 - k), 0.0));
      if (sigma <= tau) break;
      kept_sum += sigma - tau;
      ++k;
    }
    if (trace_norm_out) *trace_norm_out = kept_sum;
    if (k == 0) return Matrix::Zero(m.rows(), m.cols());
    Vector w(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const double sigma = std::sqrt(std::max(ev(n - 1 - i), 0.0));
      w(i) = (sigma - tau) / sigma;
    }
    const Matrix basis = es.eigenvectors().rightCols(k).rowwise().reverse();
    if (wide) return basis * w.asDiagonal() * (basis.transpose() * m);
    return (m * basis) * w.asDiagonal() * basis.transpose();
  }
  const SvdResult r = thin_svd(m);
  Eigen::Index k = 0;
  double kept_sum = 0.0;
  while (k < r.s.size() && r.s(k) > tau) {
    kept_sum += r.s(k) - tau;
    ++k;
  }
  if (trace_norm_out) *trace_norm_out = kept_sum;
  if (k == 0) return Matrix::Zero(m.rows(), m.cols());
  const Vector shrunk = r.s.head(k).array() - tau;
  return r.u.leftCols(k) * shrunk.asDiagonal() * r.v.leftCols(k).transpose();
}

/// Projection onto the spectral norm ball of radius alpha: each sigma
/// becomes min(sigma, alpha). Returns m unchanged when already inside.
inline Matrix spectral_clip(const Matrix& m, double alpha) {
  if (std::isnan(alpha) || alpha < 0.0)
    throw std::invalid_argument("spectral_clip: alpha must be nonnegative");
  if (std::isinf(alpha)) return m;
  if (alpha == 0.0) return Matrix::Zero(m.rows(), m.cols());
  if (detail::use_gram_path(m, alpha)) {
    // Excess components have sigma > alpha; subtract their overshoot
    // (sigma - alpha) / sigma from m.
    const bool wide = m.cols() >= m.rows();
    const Matrix gram =
        wide ? Matrix(m * m.transpose()) : Matrix(m.transpose() * m);
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    if (es.info() != Eigen::Success)
      throw SvdError("spectral_clip: gram eigendecomposition did not converge");
    const Vector& ev = es.eigenvalues();  // ascending
    const Eigen::Index n = ev.size();
    Eigen::Index k = 0;
    while (k < n && std::sqrt(std::max(ev(n - 1 - k), 0.0)) > alpha) ++k;
    if (k == 0) return m;
    Vector w(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const double sigma = std::sqrt(std::max(ev(n - 1 - i), 0.0));
      w(i) = (sigma - alpha) / sigma;
    }
    const Matrix basis = es.eigenvectors().rightCols(k).rowwise().reverse();
    if (wide) return m - basis * w.asDiagonal() * (basis.transpose() * m);
    return m - (m * basis) * w.asDiagonal() * basis.transpose();
  }
  const SvdResult r = thin_svd(m);
  if (r.s.size() == 0 || r.s(0) <= alpha) return m;
  const Vector clipped = r.s.array().min(alpha);
  return r.u * clipped.asDiagonal() * r.v.transpose();
}

/// Number of singular values above rel_tol times the largest one.
inline int numerical_rank(const Matrix& m, double rel_tol = 1e-6) {
  if (std::isnan(rel_tol) || rel_tol < 0.0)
    throw std::invalid_argument("numerical_rank: rel_tol must be nonnegative");
  const Vector s = singular_values(m);
  const double top = s.size() > 0 ? s(0) : 0.0;
  if (top == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * top) ++rank;
  return rank;
}

}  // namespace schatten
