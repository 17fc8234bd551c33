#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "emgs/copula.hpp"
#include "emgs/ecm.hpp"
#include "emgs/glasso.hpp"
#include "emgs/graph.hpp"

// Recovery metrics, regularization paths over v0 (or rho), K-fold
// cross-validation selection, and imputation scoring.

namespace emgs {

enum class Method { Emgs, EmgsCopula, Glasso };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::Emgs: return "emgs";
    case Method::EmgsCopula: return "emgs-copula";
    case Method::Glasso: return "glasso";
  }
  return "?";
}

template <typename DA, typename DB>
double frobenius_error(const Eigen::MatrixBase<DA>& est,
                       const Eigen::MatrixBase<DB>& truth) {
  return (est - truth).norm();
}

// Largest singular value of the difference, by power iteration on D'D.
template <typename DA, typename DB>
double spectral_error(const Eigen::MatrixBase<DA>& est,
                      const Eigen::MatrixBase<DB>& truth,
                      double rel_tol = 1e-8, int max_iter = 100000) {
  Eigen::MatrixXd d = est - truth;
  Eigen::MatrixXd b = d.transpose() * d;
  const Eigen::Index p = b.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(p).normalized();
  double lam = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = b * v;
    double nrm = w.norm();
    if (nrm == 0.0) return 0.0;
    double lam_new = v.dot(w);
    v = w / nrm;
    if (it > 0 && std::abs(lam_new - lam) <= rel_tol * std::abs(lam_new)) {
      lam = lam_new;
      break;
    }
    lam = lam_new;
  }
  return std::sqrt(std::max(lam, 0.0));
}

// AUC over thresholds of |omega_jk|, trapezoidal (midrank) tie handling.
inline double roc_auc(const Eigen::MatrixXd& scores, const Adjacency& truth) {
  const Eigen::Index p = scores.rows();
  std::vector<double> s;
  std::vector<bool> lab;
  std::size_t pos = 0, neg = 0;
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = j + 1; k < p; ++k) {
      s.push_back(std::abs(scores(j, k)));
      lab.push_back(truth(j, k));
      truth(j, k) ? ++pos : ++neg;
    }
  if (pos == 0 || neg == 0)
    throw std::invalid_argument("roc_auc: needs a true edge and a non-edge");
  auto ranks = average_ranks(s);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (lab[i]) rank_sum += ranks[i];
  const double P = static_cast<double>(pos), N = static_cast<double>(neg);
  return (rank_sum - P * (P + 1.0) / 2.0) / (P * N);
}

// 2TP / (2TP + FP + FN) over unordered pairs; both-empty counts as perfect.
inline double f1_score(const Adjacency& est, const Adjacency& truth) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (Eigen::Index j = 0; j < est.rows(); ++j)
    for (Eigen::Index k = j + 1; k < est.cols(); ++k) {
      if (est(j, k) && truth(j, k)) ++tp;
      else if (est(j, k)) ++fp;
      else if (truth(j, k)) ++fn;
    }
  if (2 * tp + fp + fn == 0) return 1.0;
  return 2.0 * static_cast<double>(tp) /
         static_cast<double>(2 * tp + fp + fn);
}

struct PathResult {
  std::vector<double> v0_grid;  // rho grid for the glasso method
  std::vector<GraphEstimate> fits;
  std::vector<double> cv_scores;
  double v0_selected = 0.0;
  Method method = Method::Emgs;
};

// Starting point for the first fit on the grid.  The flat diagonal start
// can land in the all-spike basin at small v0; the ridged inverse or a
// lightly penalized glasso start track the slab mode instead.
enum class InitPolicy { Diagonal, RidgedInverse, Glasso };

struct PathOptions {
  Method method = Method::Emgs;
  SaemSchedule schedule;   // copula only
  std::uint64_t seed = 0;  // copula sampling streams
  double glasso_tol = 1e-6;
  int glasso_max_iter = 500;
  int jobs = 1;            // fold-level parallelism in cv_select
  InitPolicy init = InitPolicy::Diagonal;
};

// Resolve the initial Omega for a path under the given policy; the scatter
// proxy S is X'X/n (or the latent normal-scores analogue for copula fits).
inline Eigen::MatrixXd initial_omega(const Eigen::MatrixXd& S,
                                     InitPolicy policy) {
  const Eigen::Index p = S.rows();
  switch (policy) {
    case InitPolicy::RidgedInverse:
      return (S + 0.01 * Eigen::MatrixXd::Identity(p, p))
          .llt()
          .solve(Eigen::MatrixXd::Identity(p, p));
    case InitPolicy::Glasso: {
      const double rho =
          0.1 * S.diagonal().maxCoeff();  // light penalty, SPD start
      return glasso_fit(S, rho).omega;
    }
    case InitPolicy::Diagonal:
      break;
  }
  return Eigen::MatrixXd();  // empty: fit_ecm falls back to its default
}

inline GraphEstimate glasso_as_estimate(const GlassoFit& fit, double rho) {
  GraphEstimate est;
  est.omega = fit.omega;
  est.pstar = Eigen::MatrixXd::Zero(fit.omega.rows(), fit.omega.cols());
  est.adjacency = threshold_abs(fit.omega, 1e-12);
  est.v0_selected = rho;
  est.converged = fit.converged;
  est.iterations = fit.iterations;
  est.trace.emplace_back(fit.iterations, -fit.kkt_residual);
  return est;
}

// Sequential fits over an increasing grid with warm starts (Omega, pi, tau
// for EMGS; the latent accumulator additionally for the copula path).
inline PathResult fit_path(const Dataset& data, const Hyperparams& hp_base,
                           const std::vector<double>& grid,
                           const PathOptions& opts = {}) {
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw std::invalid_argument("fit_path: grid must be strictly increasing");
  PathResult out;
  out.v0_grid = grid;
  out.method = opts.method;
  if (opts.method == Method::Glasso) {
    Eigen::MatrixXd S =
        crossprod_observed(data) / static_cast<double>(data.n());
    for (double rho : grid)
      out.fits.push_back(glasso_as_estimate(
          glasso_fit(S, rho, opts.glasso_tol, opts.glasso_max_iter), rho));
    return out;
  }
  Eigen::MatrixXd warm_omega;
  EcmState warm_state;
  bool have_warm = false;
  if (opts.init != InitPolicy::Diagonal) {
    Eigen::MatrixXd S0;
    if (opts.method == Method::EmgsCopula) {
      Eigen::MatrixXd z = init_latent_scores(data);
      S0 = z.transpose() * z / static_cast<double>(data.n());
    } else {
      S0 = crossprod_observed(data) / static_cast<double>(data.n());
    }
    warm_omega = initial_omega(S0, opts.init);
    warm_state.omega = warm_omega;
    warm_state.pi = 0.5;
    warm_state.tau =
        Eigen::MatrixXd::Ones(hp_base.n_groups(), hp_base.n_groups());
    warm_state.q_accum = Eigen::MatrixXd::Zero(data.p(), data.p());
    have_warm = true;
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Hyperparams hp = hp_base;
    hp.v0 = grid[i];
    if (opts.method == Method::Emgs) {
      GraphEstimate fit =
          fit_ecm(data, hp, have_warm ? &warm_omega : nullptr);
      warm_omega = fit.omega;
      have_warm = true;
      out.fits.push_back(std::move(fit));
    } else {
      GraphEstimate fit =
          fit_copula(data, hp, opts.schedule, opts.seed + i,
                     have_warm ? &warm_state : nullptr);
      warm_state.omega = fit.omega;
      warm_state.pi = fit.pi;
      warm_state.tau = fit.tau;
      // carrying the accumulator forward would bias the new v0's E-step,
      // so restart it from fresh samples
      warm_state.q_accum =
          Eigen::MatrixXd::Zero(data.p(), data.p());
      have_warm = true;
      out.fits.push_back(std::move(fit));
    }
  }
  return out;
}

// Mean per-row Gaussian log-likelihood of held-out rows (2*pi constant
// dropped).  Complete Gaussian rows use X'X directly; rows with missing
// cells use the expected cross-product from the E-step; copula fits use the
// expected latent cross-product under the fixed precision.
inline double holdout_score(const Dataset& test, const Eigen::MatrixXd& omega,
                            Method method, std::uint64_t seed) {
  Eigen::MatrixXd q;
  if (method == Method::EmgsCopula)
    q = expected_latent_crossprod(test, omega, seed);
  else if (test.has_missing())
    q = e_step_missing(omega, test);
  else
    q = crossprod_observed(test);
  Eigen::LLT<Eigen::MatrixXd> llt(omega);
  if (llt.info() != Eigen::Success)
    return -std::numeric_limits<double>::infinity();
  double logdet = 0.0;
  for (Eigen::Index j = 0; j < omega.rows(); ++j)
    logdet += 2.0 * std::log(llt.matrixL()(j, j));
  const double n = static_cast<double>(test.n());
  return 0.5 * logdet - 0.5 * q.cwiseProduct(omega).sum() / n;
}

// K-fold CV over the grid: rows shuffled by seed into folds, per-fold paths
// fitted on the training rows, scores averaged per grid point; ties go to
// the larger (sparser) grid value.  Returns the full-data path with scores.
inline PathResult cv_select(const Dataset& data, const Hyperparams& hp_base,
                            const std::vector<double>& grid, int folds,
                            std::uint64_t seed, const PathOptions& opts = {}) {
  const Eigen::Index n = data.n();
  if (n < folds) throw std::invalid_argument("cv_select: n < K");
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  // Fold jobs are independent; results land in per-fold slots so the merge
  // is deterministic regardless of scheduling.
  std::vector<std::vector<double>> fold_scores(
      static_cast<std::size_t>(folds), std::vector<double>(grid.size(), 0.0));
  auto run_fold = [&](int f) {
    std::vector<Eigen::Index> train_idx, test_idx;
    for (std::size_t i = 0; i < perm.size(); ++i)
      ((static_cast<int>(i) % folds == f) ? test_idx : train_idx)
          .push_back(perm[i]);
    Dataset train = data.rows(train_idx);
    Dataset test = data.rows(test_idx);
    PathOptions fold_opts = opts;
    fold_opts.seed = opts.seed + 1000003ULL * static_cast<std::uint64_t>(f + 1);
    PathResult path = fit_path(train, hp_base, grid, fold_opts);
    for (std::size_t i = 0; i < grid.size(); ++i)
      fold_scores[static_cast<std::size_t>(f)][i] =
          holdout_score(test, path.fits[i].omega, opts.method,
                        fold_opts.seed + 7919ULL * (i + 1));
  };
  if (opts.jobs > 1) {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min(opts.jobs, folds);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int f = next.fetch_add(1); f < folds; f = next.fetch_add(1))
          run_fold(f);
      });
    for (auto& t : pool) t.join();
  } else {
    for (int f = 0; f < folds; ++f) run_fold(f);
  }
  std::vector<double> mean_scores(grid.size(), 0.0);
  for (int f = 0; f < folds; ++f)
    for (std::size_t i = 0; i < grid.size(); ++i)
      mean_scores[i] +=
          fold_scores[static_cast<std::size_t>(f)][i] /
          static_cast<double>(folds);

  PathResult out = fit_path(data, hp_base, grid, opts);
  out.cv_scores = mean_scores;
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (mean_scores[i] >= mean_scores[best]) best = i;  // ties -> larger
  out.v0_selected = grid[best];
  return out;
}

inline const GraphEstimate& selected_fit(const PathResult& path) {
  for (std::size_t i = 0; i < path.v0_grid.size(); ++i)
    if (path.v0_grid[i] == path.v0_selected) return path.fits[i];
  throw std::logic_error("selected_fit: selection not on grid");
}

// Conditional-mean imputation of the masked cells under a fixed precision.
inline Eigen::MatrixXd impute_with_omega(const Dataset& data,
                                         const Eigen::MatrixXd& omega) {
  Eigen::MatrixXd out = data.values;
  const Eigen::Index p = data.p();
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    std::vector<Eigen::Index> obs, mis;
    for (Eigen::Index j = 0; j < p; ++j)
      (data.missing(i, j) ? mis : obs).push_back(j);
    if (mis.empty()) continue;
    const Eigen::Index m = static_cast<Eigen::Index>(mis.size());
    Eigen::MatrixXd omm(m, m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) omm(a, b) = omega(mis[a], mis[b]);
      for (std::size_t o = 0; o < obs.size(); ++o)
        rhs(a) += omega(mis[a], obs[o]) * data.values(i, obs[o]);
    }
    Eigen::VectorXd mu = omm.llt().solve(-rhs);
    for (Eigen::Index a = 0; a < m; ++a) out(i, mis[a]) = mu(a);
  }
  return out;
}

enum class ImputeMethod { Emgs, EmpiricalCovariance, ColumnMean };

// Pairwise-complete covariance of the observed cells, eigenvalue-floored
// to keep it invertible.
inline Eigen::MatrixXd pairwise_covariance(const Dataset& data,
                                           double eig_floor = 1e-3) {
  const Eigen::Index p = data.p();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = j; k < p; ++k) {
      double s = 0.0;
      Eigen::Index cnt = 0;
      for (Eigen::Index i = 0; i < data.n(); ++i)
        if (!data.missing(i, j) && !data.missing(i, k)) {
          s += data.values(i, j) * data.values(i, k);
          ++cnt;
        }
      cov(j, k) = cov(k, j) = cnt > 1 ? s / static_cast<double>(cnt) : 0.0;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(eig_floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Hides the masked cells, imputes them with the chosen method, and returns
// the mean squared error per hidden cell.
inline double impute_score(const Dataset& data_complete, const Adjacency& mask,
                           ImputeMethod method, const Hyperparams& hp = {}) {
  if (!mask.any()) throw std::invalid_argument("impute_score: empty mask");
  Dataset masked = data_complete;
  masked.missing = masked.missing || mask;
  masked = center_columns(masked);
  Dataset truth_centered = data_complete;
  // center with the same observed-cell means the methods see
  for (Eigen::Index j = 0; j < data_complete.p(); ++j) {
    double sum = 0.0;
    Eigen::Index cnt = 0;
    for (Eigen::Index i = 0; i < data_complete.n(); ++i)
      if (!masked.missing(i, j)) {
        sum += data_complete.values(i, j);
        ++cnt;
      }
    truth_centered.values.col(j).array() -=
        sum / static_cast<double>(cnt);
  }

  Eigen::MatrixXd imputed;
  switch (method) {
    case ImputeMethod::Emgs: {
      GraphEstimate fit = fit_ecm(masked, hp);
      imputed = impute_with_omega(masked, fit.omega);
      break;
    }
    case ImputeMethod::EmpiricalCovariance: {
      Eigen::MatrixXd cov = pairwise_covariance(masked);
      Eigen::MatrixXd omega =
          cov.llt().solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
      imputed = impute_with_omega(masked, omega);
      break;
    }
    case ImputeMethod::ColumnMean: {
      imputed = masked.values;
      for (Eigen::Index i = 0; i < masked.n(); ++i)
        for (Eigen::Index j = 0; j < masked.p(); ++j)
          if (masked.missing(i, j)) imputed(i, j) = 0.0;  // centered mean
      break;
    }
  }

  double se = 0.0;
  std::size_t cells = 0;
  for (Eigen::Index i = 0; i < data_complete.n(); ++i)
    for (Eigen::Index j = 0; j < data_complete.p(); ++j)
      if (mask(i, j) && !data_complete.missing(i, j)) {
        double d = imputed(i, j) - truth_centered.values(i, j);
        se += d * d;
        ++cells;
      }
  return se / static_cast<double>(cells);
}

}  // namespace emgs
