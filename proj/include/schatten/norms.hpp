#pragma once

#include "schatten/spectral.hpp"
#include "schatten/tensor.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace schatten {

/// Additive split of a tensor into one component per mode, component k being
/// the one whose mode-k unfolding carries the trace norm penalty.
struct LatentDecomposition {
  std::vector<DenseTensor> components;

  DenseTensor sum() const {
    if (components.empty()) throw std::invalid_argument("empty decomposition");
    DenseTensor s = components.front();
    for (std::size_t k = 1; k < components.size(); ++k) s += components[k];
    return s;
  }
};

struct NormConfig {
  int max_iter = 2000;
  double rel_tol = 1e-6;
  double penalty = 1.0;  // initial augmented Lagrangian weight
};

inline void validate(const NormConfig& cfg) {
  if (cfg.max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  if (!(cfg.rel_tol > 0.0) || !std::isfinite(cfg.rel_tol))
    throw std::invalid_argument("rel_tol must be positive and finite");
  if (!(cfg.penalty > 0.0) || !std::isfinite(cfg.penalty))
    throw std::invalid_argument("penalty must be positive and finite");
}

/// lq norm over modes of the Schatten-p norms of the unfoldings.
inline double overlapped_norm(const DenseTensor& t, double p, double q) {
  if (std::isnan(q) || q < 1.0)
    throw std::invalid_argument("overlapped_norm: q must be >= 1");
  std::vector<double> per_mode(static_cast<std::size_t>(t.order()));
  for (int k = 0; k < t.order(); ++k)
    per_mode[static_cast<std::size_t>(k)] = schatten_norm(unfold(t, k), p);
  double top = 0.0;
  for (double v : per_mode) top = std::max(top, v);
  if (top == 0.0) return 0.0;
  if (std::isinf(q)) return top;
  double acc = 0.0;
  for (double v : per_mode) acc += std::pow(v / top, q);
  return top * std::pow(acc, 1.0 / q);
}

/// Largest spectral norm over all unfoldings. This is the dual norm of the
/// latent trace norm.
inline double overlapped_spectral(const DenseTensor& t) {
  double top = 0.0;
  for (int k = 0; k < t.order(); ++k)
    top = std::max(top, spectral_norm(unfold(t, k)));
  return top;
}

/// Lower bound on the latent trace norm from the dual feasible point
/// t / overlapped_spectral(t): the latent norm is at least
/// <t, t> / overlapped_spectral(t).
inline double latent_lower_bound(const DenseTensor& t) {
  const double sq = inner(t, t);
  if (sq == 0.0) return 0.0;
  return sq / overlapped_spectral(t);
}

struct LatentNormResult {
  double value = 0.0;             // trace norm total of the witness
  LatentDecomposition witness;    // components summing to t up to feasibility
  double lower_bound = 0.0;       // certified lower bound on the exact norm
  double duality_gap = 0.0;       // value - lower_bound
  double feasibility = 0.0;       // ||sum(witness) - t||_F / ||t||_F
  int iterations = 0;
  bool converged = false;
};

/// Latent trace norm: the infimum over additive decompositions
/// sum_k W^k = t of sum_k ||unfold(W^k, k)||_S1.
///
/// Solved by consensus ADMM: each component gets a private copy, the prox
/// step soft-thresholds each copy along its own mode, and the coupling step
/// projects onto decompositions summing to t. The shared dual variable
/// yields a certificate whose feasible scaling gives the lower bound, so the
/// reported value and lower_bound bracket the exact norm.
inline LatentNormResult latent_s1(const DenseTensor& t, const NormConfig& cfg = {}) {
  validate(cfg);
  const int order = t.order();
  const auto n = static_cast<std::size_t>(order);
  const double scale = frobenius_norm(t);

  LatentNormResult res;
  res.witness.components.assign(n, DenseTensor(t.dims()));
  if (scale == 0.0) {
    res.converged = true;
    return res;
  }

  DenseTensor target = t;
  target *= 1.0 / scale;

  // Split copies V sum to the target exactly throughout; W holds the
  // thresholded components and is the witness; U is the scaled dual.
  std::vector<DenseTensor> w(n, DenseTensor(t.dims()));
  std::vector<DenseTensor> v(n, target);
  for (auto& vk : v) vk *= 1.0 / order;
  DenseTensor u(t.dims());
  DenseTensor mean_excess(t.dims());

  double rho = cfg.penalty;
  double objective = 0.0;
  double feas = std::numeric_limits<double>::infinity();

  for (int it = 0; it < cfg.max_iter; ++it) {
    res.iterations = it + 1;
    objective = 0.0;
    for (int k = 0; k < order; ++k) {
      DenseTensor arg = v[static_cast<std::size_t>(k)];
      arg -= u;
      double tn = 0.0;
      w[static_cast<std::size_t>(k)] =
          fold(svt(unfold(arg, k), 1.0 / rho, &tn), k, t.dims());
      objective += tn;
    }

    // Project w + u onto the affine set of decompositions summing to the
    // target; the dual update then equals the shared mean excess.
    mean_excess = w[0];
    for (std::size_t k = 1; k < n; ++k) mean_excess += w[k];
    mean_excess -= target;
    mean_excess *= 1.0 / order;
    mean_excess += u;

    double dual_sq = 0.0;
    const double drift = frobenius_norm(mean_excess - u);
    for (int k = 0; k < order; ++k) {
      DenseTensor vk = w[static_cast<std::size_t>(k)];
      vk += u;
      vk -= mean_excess;
      dual_sq += (vk.as_vector() - v[static_cast<std::size_t>(k)].as_vector())
                     .squaredNorm();
      v[static_cast<std::size_t>(k)] = std::move(vk);
    }
    u = mean_excess;

    feas = order * drift;  // == ||sum_k w^k - target||_F on the unit scale
    const double primal = std::sqrt(static_cast<double>(order)) * drift;
    const double dual = rho * std::sqrt(dual_sq);

    if (feas <= cfg.rel_tol &&
        dual <= cfg.rel_tol * std::max(1.0, rho * std::sqrt(static_cast<double>(order)) *
                                                frobenius_norm(u))) {
      res.converged = true;
      break;
    }
    if (primal > 10.0 * dual && rho < 1e6) {
      rho *= 2.0;
      u *= 0.5;
    } else if (dual > 10.0 * primal && rho > 1e-4) {
      rho *= 0.5;
      u *= 2.0;
    }
  }

  // Close the remaining constraint violation by spreading it over the
  // components, then price the now exactly feasible witness. Its objective
  // is a true upper bound on the norm, so value and lower_bound always
  // bracket it.
  DenseTensor residual = target;
  for (const DenseTensor& wk : w) residual -= wk;
  residual *= 1.0 / order;
  objective = 0.0;
  for (int k = 0; k < order; ++k) {
    w[static_cast<std::size_t>(k)] += residual;
    objective += trace_norm(unfold(w[static_cast<std::size_t>(k)], k));
  }
  res.value = scale * objective;
  DenseTensor achieved = w[0];
  for (std::size_t k = 1; k < n; ++k) achieved += w[k];
  res.feasibility = frobenius_norm(achieved - target);
  for (std::size_t k = 0; k < n; ++k) {
    res.witness.components[k] = std::move(w[k]);
    res.witness.components[k] *= scale;
  }

  // Certificate: the dual variable approaches -G / rho with G dual feasible
  // at the optimum; rescale into the unit dual ball before pairing with t.
  DenseTensor cert = u;
  cert *= -rho;
  const double cert_scale = overlapped_spectral(cert);
  double certified = 0.0;
  if (cert_scale > 0.0) certified = inner(cert, target) / std::max(1.0, cert_scale);
  const double static_bound = latent_lower_bound(target);
  res.lower_bound = scale * std::max(certified, static_bound);
  res.duality_gap = res.value - res.lower_bound;
  return res;
}

}  // namespace schatten
