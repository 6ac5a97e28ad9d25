#pragma once

// Synthetic-data experiment harness: low rank tensor generation, complexity
// measures, regularization heuristics, decomposition perturbation, and a
// reproducible parameter sweep with CSV output.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "schatten/norms.hpp"
#include "schatten/rng.hpp"
#include "schatten/solvers.hpp"
#include "schatten/spectral.hpp"
#include "schatten/tensor.hpp"

namespace schatten {

/// Per-mode rank vector, same length as the tensor dims.
using RankVector = std::vector<int>;

namespace detail {

inline void require_rank_vector(const std::vector<int>& dims,
                                const RankVector& ranks) {
  if (ranks.size() != dims.size())
    throw std::invalid_argument("rank vector length does not match dims");
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (ranks[k] < 0 || ranks[k] > dims[k])
      throw std::invalid_argument("ranks must lie in [0, dim] per mode");
  }
}

/// Fill an n x r matrix with standard Gaussian entries drawn column-major, so
/// the layout of the draw order is part of the frozen output format.
inline Matrix gaussian_matrix(int rows, int cols, Xoshiro256pp& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.gaussian();
  return m;
}

/// Thin QR orthonormalization with the sign of each column fixed so the
/// result is a deterministic function of the input (diag(R) >= 0).
inline Matrix orthonormalize(const Matrix& m) {
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
  Matrix r = qr.matrixQR().topRows(m.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

/// Haar-distributed n x r orthonormal frame (QR of a Gaussian matrix with
/// positive-diagonal sign convention).
inline Matrix haar_frame(int rows, int cols, Xoshiro256pp& rng) {
  return orthonormalize(gaussian_matrix(rows, cols, rng));
}

}  // namespace detail

/// Random Tucker-format tensor: a Gaussian core of shape `ranks` multiplied by
/// an independent Haar orthonormal factor along every mode. Bitwise
/// deterministic in (dims, ranks, seed); the core and each factor draw from
/// their own derived streams so changing one mode's rank does not disturb the
/// others' factors.
inline DenseTensor generate_low_rank(const std::vector<int>& dims,
                                     const RankVector& ranks,
                                     std::uint64_t seed) {
  DenseTensor probe(dims);  // validates dims
  detail::require_rank_vector(dims, ranks);
  if (std::any_of(ranks.begin(), ranks.end(), [](int r) { return r == 0; }))
    return probe;  // a zero mode rank forces the zero tensor

  Xoshiro256pp core_rng(derive_seed(seed, {0}));
  DenseTensor core(std::vector<int>(ranks.begin(), ranks.end()));
  for (Eigen::Index i = 0; i < core.size(); ++i) core[i] = core_rng.gaussian();

  DenseTensor t = std::move(core);
  for (std::size_t k = 0; k < dims.size(); ++k) {
    Xoshiro256pp factor_rng(derive_seed(seed, {k + 1}));
    Matrix u = detail::haar_frame(dims[k], ranks[k], factor_rng);
    t = mode_product(t, u, static_cast<int>(k));
  }
  return t;
}

/// Add iid Gaussian noise of standard deviation sigma. sigma = 0 returns the
/// input unchanged.
inline DenseTensor add_noise(const DenseTensor& t, double sigma,
                             std::uint64_t seed) {
  if (std::isnan(sigma) || sigma < 0.0 || std::isinf(sigma))
    throw std::invalid_argument("sigma must be finite and nonnegative");
  if (sigma == 0.0) return t;
  DenseTensor out = t;
  Xoshiro256pp rng(seed);
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += sigma * rng.gaussian();
  return out;
}

/// Mean squared error per entry.
inline double mse(const DenseTensor& a, const DenseTensor& b) {
  if (a.dims() != b.dims())
    throw std::invalid_argument("mse: tensors must share dims");
  const double d = (a.as_vector() - b.as_vector()).squaredNorm();
  return d / static_cast<double>(a.size());
}

/// Complexity measure attached to the overlapped regularizer:
/// ((1/K) sum_k sqrt(1/n_k))^2 * ((1/K) sum_k sqrt(r_k))^2.
inline double tr_complexity(const std::vector<int>& dims,
                            const RankVector& tucker_rank) {
  if (dims.empty()) throw std::invalid_argument("dims must be nonempty");
  for (int n : dims)
    if (n < 1) throw std::invalid_argument("dims must be positive");
  detail::require_rank_vector(dims, tucker_rank);
  const double k = static_cast<double>(dims.size());
  double inv = 0.0, rk = 0.0;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    inv += std::sqrt(1.0 / static_cast<double>(dims[i]));
    rk += std::sqrt(static_cast<double>(tucker_rank[i]));
  }
  inv /= k;
  rk /= k;
  return inv * inv * rk * rk;
}

/// Complexity measure attached to the latent regularizer: the summed witness
/// ranks divided by the smallest dimension.
inline double lr_complexity(const std::vector<int>& dims,
                            const RankVector& latent_rank) {
  if (dims.empty()) throw std::invalid_argument("dims must be nonempty");
  for (int n : dims)
    if (n < 1) throw std::invalid_argument("dims must be positive");
  if (latent_rank.size() != dims.size())
    throw std::invalid_argument("rank vector length does not match dims");
  long sum = 0;
  for (int r : latent_rank) {
    if (r < 0) throw std::invalid_argument("ranks must be nonnegative");
    sum += r;
  }
  const int n_min = *std::min_element(dims.begin(), dims.end());
  return static_cast<double>(sum) / static_cast<double>(n_min);
}

/// Raised when an iterative solve backing a computed quantity fails to reach
/// its tolerance, in contexts where a best-effort answer would be misleading.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-mode ranks of a minimizing decomposition of the latent trace norm.
/// Solves the norm program, reads off the numerical rank of each witness
/// component along its own mode, and falls back to the cheaper single-mode
/// answer when one mode alone explains the tensor with a smaller rank total.
inline RankVector estimate_latent_rank(const DenseTensor& t,
                                       const SolverConfig& cfg = {}) {
  validate(cfg);
  const auto order = static_cast<std::size_t>(t.order());
  RankVector out(order, 0);
  if (frobenius_norm(t) == 0.0) return out;

  constexpr double kRankTol = 1e-6;
  long witness_sum = 0;
  NormConfig norm_cfg{cfg.max_iter, cfg.rel_tol, cfg.penalty};
  LatentNormResult res = latent_s1(t, norm_cfg);
  if (!res.converged)
    throw ConvergenceError("latent rank estimate: norm solve did not converge");
  for (std::size_t k = 0; k < order; ++k) {
    const Matrix m = unfold(res.witness.components[k], static_cast<int>(k));
    out[k] = numerical_rank(m, kRankTol);
    witness_sum += out[k];
  }

  // A single-mode decomposition (everything on mode k*) is always feasible;
  // prefer it when it beats the witness total.
  int best_mode = 0;
  int best_rank = std::numeric_limits<int>::max();
  for (std::size_t k = 0; k < order; ++k) {
    const int r = numerical_rank(unfold(t, static_cast<int>(k)), kRankTol);
    if (r < best_rank) {
      best_rank = r;
      best_mode = static_cast<int>(k);
    }
  }
  if (static_cast<long>(best_rank) < witness_sum) {
    std::fill(out.begin(), out.end(), 0);
    out[static_cast<std::size_t>(best_mode)] = best_rank;
  }
  return out;
}

/// Scaling-law choice of the regularization weight:
/// c0 * sigma * (sqrt(N / n_K) + sqrt(n_1) + sqrt(log K)) + alpha * (K - 1),
/// with dims sorted descending so n_1 is the largest and n_K the smallest
/// dimension. The cap term drops out for K = 1.
inline double theoretical_lambda(const std::vector<int>& dims, double sigma,
                                 double alpha, double c0, int K) {
  if (dims.empty()) throw std::invalid_argument("dims must be nonempty");
  for (int n : dims)
    if (n < 1) throw std::invalid_argument("dims must be positive");
  if (std::isnan(sigma) || sigma < 0.0)
    throw std::invalid_argument("sigma must be nonnegative");
  if (!(c0 > 0.0) || !std::isfinite(c0))
    throw std::invalid_argument("c0 must be positive and finite");
  if (std::isnan(alpha) || alpha < 0.0)
    throw std::invalid_argument("alpha must be nonnegative");
  if (K < 1) throw std::invalid_argument("K must be >= 1");

  std::vector<int> sorted = dims;
  std::sort(sorted.begin(), sorted.end(), std::greater<int>());
  double total = 1.0;
  for (int n : sorted) total *= static_cast<double>(n);
  const double n_first = static_cast<double>(sorted.front());
  const double n_last = static_cast<double>(sorted.back());
  const double noise_term = c0 * sigma *
                            (std::sqrt(total / n_last) + std::sqrt(n_first) +
                             std::sqrt(std::log(static_cast<double>(K))));
  const double cap_term = (K == 1) ? 0.0 : alpha * static_cast<double>(K - 1);
  return noise_term + cap_term;
}

namespace detail {

/// Basis of the top-r left singular space of the mode-k unfolding, mapped to a
/// canonical representative of its span. Two matrices with the same column
/// span (up to rounding) produce the same frame, which is what lets a
/// perturbation made with one component's basis be undone with the perturbed
/// component's basis.
inline Matrix canonical_mode_frame(const DenseTensor& component, int mode) {
  const Matrix m = unfold(component, mode);
  SvdResult svd = thin_svd(m);
  const int r = numerical_rank(m);
  if (r == 0) throw std::invalid_argument("component has no numerical rank");
  const Matrix span = svd.u.leftCols(r);

  // Project a fixed generic matrix onto the span; its QR frame depends only on
  // the span, not on the particular singular vectors the SVD happened to pick.
  Xoshiro256pp rng(derive_seed(0x5eedf4a3e0c1b2d9ULL,
                               {static_cast<std::uint64_t>(m.rows()),
                                static_cast<std::uint64_t>(r)}));
  const Matrix generic = gaussian_matrix(static_cast<int>(m.rows()), r, rng);
  return orthonormalize(span * (span.transpose() * generic));
}

}  // namespace detail

/// Move mass between two components of a decomposition without changing the
/// sum or any mode rank: add P to component k and subtract it from component
/// l, where P is a random tensor confined to the existing mode-k span of
/// component k and mode-l span of component l. Deterministic in (k, l, scale,
/// seed); negating scale with the same seed undoes the perturbation.
inline LatentDecomposition perturb_decomposition(
    const LatentDecomposition& decomp, int k, int l, double scale,
    std::uint64_t seed) {
  const auto count = static_cast<int>(decomp.components.size());
  if (count == 0) throw std::invalid_argument("decomposition is empty");
  if (k < 0 || k >= count || l < 0 || l >= count)
    throw std::invalid_argument("component index out of range");
  if (k == l) throw std::invalid_argument("component indices must differ");
  if (!std::isfinite(scale)) throw std::invalid_argument("scale must be finite");
  const DenseTensor& wk = decomp.components[static_cast<std::size_t>(k)];
  const DenseTensor& wl = decomp.components[static_cast<std::size_t>(l)];
  if (wk.dims() != wl.dims())
    throw std::invalid_argument("components must share dims");
  if (frobenius_norm(wk) == 0.0 || frobenius_norm(wl) == 0.0)
    throw std::invalid_argument(
        "perturbation of a zero component is undefined");

  LatentDecomposition out = decomp;
  if (scale == 0.0) return out;

  const Matrix uk = detail::canonical_mode_frame(wk, k);
  const Matrix ul = detail::canonical_mode_frame(wl, l);

  std::vector<int> core_dims = wk.dims();
  core_dims[static_cast<std::size_t>(k)] = static_cast<int>(uk.cols());
  core_dims[static_cast<std::size_t>(l)] = static_cast<int>(ul.cols());
  DenseTensor d(core_dims);
  Xoshiro256pp rng(seed);
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = scale * rng.gaussian();

  const DenseTensor p = mode_product(mode_product(d, uk, k), ul, l);
  out.components[static_cast<std::size_t>(k)] += p;
  out.components[static_cast<std::size_t>(l)] -= p;
  return out;
}

/// Logarithmic grid of candidate regularization weights, 20 points from 0.1
/// to 100.
inline std::vector<double> default_lambda_grid() {
  std::vector<double> grid(20);
  for (int j = 0; j < 20; ++j)
    grid[static_cast<std::size_t>(j)] =
        std::pow(10.0, -1.0 + 3.0 * static_cast<double>(j) / 19.0);
  return grid;
}

struct ExperimentConfig {
  std::vector<int> dims;
  std::vector<RankVector> rank_grid;
  double sigma = 0.1;
  std::vector<double> lambda_grid = default_lambda_grid();
  int trials = 1;
  std::uint64_t base_seed = 0;
  std::vector<std::string> methods = {"overlapped", "latent"};
  SolverConfig solver;
};

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.dims.empty()) throw std::invalid_argument("dims must be nonempty");
  for (int n : cfg.dims)
    if (n < 1) throw std::invalid_argument("dims must be positive");
  if (cfg.rank_grid.empty())
    throw std::invalid_argument("rank grid must be nonempty");
  for (const RankVector& r : cfg.rank_grid) detail::require_rank_vector(cfg.dims, r);
  if (std::isnan(cfg.sigma) || cfg.sigma < 0.0 || std::isinf(cfg.sigma))
    throw std::invalid_argument("sigma must be finite and nonnegative");
  if (cfg.lambda_grid.empty())
    throw std::invalid_argument("lambda grid must be nonempty");
  for (double lam : cfg.lambda_grid)
    if (!(lam > 0.0) || !std::isfinite(lam))
      throw std::invalid_argument("lambda values must be positive and finite");
  if (cfg.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (cfg.methods.empty())
    throw std::invalid_argument("methods must be nonempty");
  for (const std::string& m : cfg.methods)
    if (m != "overlapped" && m != "latent")
      throw std::invalid_argument("unknown method: " + m);
  SolverConfig probe = cfg.solver;
  probe.lambda = cfg.lambda_grid.front();
  validate(probe);
}

/// One solved cell of a sweep. `seed` is the derived seed of the ground truth
/// so any row can be regenerated in isolation.
struct TrialRecord {
  std::vector<int> dims;
  RankVector tucker_rank;
  int latent_rank_sum = 0;
  std::string method;
  double lambda = 0.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  int trial = 0;
  double mse = 0.0;
  double tr_complexity = 0.0;
  double lr_complexity = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_time_s = 0.0;
};

namespace detail {

struct SweepCell {
  std::size_t rank_index = 0;
  int trial = 0;
};

/// Solve every (method, lambda) combination for one ground-truth draw and
/// write the records into a preallocated slab, keeping the output order
/// independent of thread scheduling.
inline void run_sweep_cell(const ExperimentConfig& cfg, const SweepCell& cell,
                           TrialRecord* slot) {
  const RankVector& ranks = cfg.rank_grid[cell.rank_index];
  const std::uint64_t truth_seed =
      derive_seed(cfg.base_seed, {1, cell.rank_index,
                                  static_cast<std::uint64_t>(cell.trial)});
  const std::uint64_t noise_seed =
      derive_seed(cfg.base_seed, {2, cell.rank_index,
                                  static_cast<std::uint64_t>(cell.trial)});
  const DenseTensor truth = generate_low_rank(cfg.dims, ranks, truth_seed);
  const DenseTensor y = add_noise(truth, cfg.sigma, noise_seed);

  // Latent ranks are a property of the noiseless truth; estimate them once per
  // cell at a fixed tolerance so the complexity column does not drift with the
  // solver settings chosen for denoising.
  SolverConfig rank_cfg = cfg.solver;
  rank_cfg.rel_tol = 1e-6;
  RankVector latent_ranks;
  try {
    latent_ranks = estimate_latent_rank(truth, rank_cfg);
  } catch (const ConvergenceError&) {
    latent_ranks.assign(cfg.dims.size(), 0);
    int best_mode = 0, best_rank = std::numeric_limits<int>::max();
    for (int k = 0; k < truth.order(); ++k) {
      const int r = numerical_rank(unfold(truth, k));
      if (r < best_rank) {
        best_rank = r;
        best_mode = k;
      }
    }
    latent_ranks[static_cast<std::size_t>(best_mode)] = best_rank;
  }
  const int rank_sum =
      std::accumulate(latent_ranks.begin(), latent_ranks.end(), 0);
  const double tr_value = tr_complexity(cfg.dims, ranks);
  const double lr_value = lr_complexity(cfg.dims, latent_ranks);

  std::size_t offset = 0;
  for (const std::string& method : cfg.methods) {
    for (double lambda : cfg.lambda_grid) {
      SolverConfig solver = cfg.solver;
      solver.lambda = lambda;

      const auto start = std::chrono::steady_clock::now();
      DenseTensor estimate;
      SolverDiagnostics diag;
      if (method == "overlapped") {
        auto [w, d] = overlapped_denoise(y, solver);
        estimate = std::move(w);
        diag = std::move(d);
      } else {
        auto [decomp, d] = latent_denoise(y, solver);
        estimate = decomp.sum();
        diag = std::move(d);
      }
      const std::chrono::duration<double> elapsed =
          std::chrono::steady_clock::now() - start;

      TrialRecord& rec = slot[offset++];
      rec.dims = cfg.dims;
      rec.tucker_rank = ranks;
      rec.latent_rank_sum = rank_sum;
      rec.method = method;
      rec.lambda = lambda;
      rec.sigma = cfg.sigma;
      rec.seed = truth_seed;
      rec.trial = cell.trial;
      rec.mse = mse(estimate, truth);
      rec.tr_complexity = tr_value;
      rec.lr_complexity = lr_value;
      rec.iterations = diag.iterations;
      rec.converged = diag.converged;
      rec.wall_time_s = elapsed.count();
    }
  }
}

}  // namespace detail

/// Run the full sweep: every rank vector x trial gets its own ground truth
/// and noise draw, and every (method, lambda) pair is solved against it.
/// Records come back in a deterministic order (rank vector, trial, method,
/// lambda) regardless of the worker count, and a record is emitted for every
/// combination even when the solver stops at its iteration cap.
inline std::vector<TrialRecord> run_sweep(const ExperimentConfig& cfg,
                                          int workers = 1) {
  validate(cfg);
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");

  std::vector<detail::SweepCell> cells;
  for (std::size_t ri = 0; ri < cfg.rank_grid.size(); ++ri)
    for (int tr = 0; tr < cfg.trials; ++tr) cells.push_back({ri, tr});

  const std::size_t per_cell = cfg.methods.size() * cfg.lambda_grid.size();
  std::vector<TrialRecord> records(cells.size() * per_cell);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        detail::run_sweep_cell(cfg, cells[i], records.data() + i * per_cell);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const int thread_count =
      static_cast<int>(std::min<std::size_t>(
          static_cast<std::size_t>(workers), cells.size()));
  if (thread_count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(thread_count));
    for (int i = 0; i < thread_count; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

namespace detail {

inline std::string format_dims(const std::vector<int>& dims) {
  std::string out;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i > 0) out += 'x';
    out += std::to_string(dims[i]);
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// CSV serialization of sweep records. Multi-valued columns use 'x' as the
/// inner separator (dims "50x50x20") so the outer separator stays a plain
/// comma.
inline void write_records_csv(std::ostream& os,
                              const std::vector<TrialRecord>& records) {
  os << "dims,tucker_rank,latent_rank_sum,method,lambda,sigma,seed,trial,mse,"
        "tr_complexity,lr_complexity,iterations,converged,wall_time_s\n";
  for (const TrialRecord& r : records) {
    os << detail::format_dims(r.dims) << ','
       << detail::format_dims(r.tucker_rank) << ',' << r.latent_rank_sum << ','
       << r.method << ',' << detail::format_double(r.lambda) << ','
       << detail::format_double(r.sigma) << ',' << r.seed << ',' << r.trial
       << ',' << detail::format_double(r.mse) << ','
       << detail::format_double(r.tr_complexity) << ','
       << detail::format_double(r.lr_complexity) << ',' << r.iterations << ','
       << (r.converged ? 1 : 0) << ','
       << detail::format_double(r.wall_time_s) << '\n';
  }
}

}  // namespace schatten
