#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "emgs/dataset.hpp"
#include "emgs/graph.hpp"
#include "emgs/hyperparams.hpp"
#include "emgs/prob.hpp"

// ECM machinery for the spike-and-slab precision model: E-step edge
// expectations, the missing-data E-step, conditional maximization of the
// sparsity parameter, the column-wise precision update, the block rescaling
// update, and the convergence driver.

namespace emgs {

inline constexpr double kPiClamp = 1e-10;

struct EStepDelta {
  Eigen::MatrixXd pstar;  // slab inclusion probabilities, symmetric
  Eigen::MatrixXd dstar;  // adaptive ridge weights, tau included
};

struct EcmState {
  Eigen::MatrixXd omega;
  double pi = 0.5;
  Eigen::MatrixXd pstar;
  Eigen::MatrixXd dstar;
  Eigen::MatrixXd tau;     // G x G block rescaling
  Eigen::MatrixXd q_accum; // SAEM cross-product accumulator
  int iter = 0;
};

struct GraphEstimate {
  Eigen::MatrixXd omega;
  Adjacency adjacency;
  double v0_selected = 0.0;
  std::vector<std::pair<int, double>> trace;  // (iteration, objective)
  Eigen::MatrixXd pstar;
  double pi = 0.5;
  Eigen::MatrixXd tau;
  bool converged = true;
  int iterations = 0;
  int all_missing_rows = 0;
  std::int64_t tail_events = 0;
};

inline double tau_for_pair(const Hyperparams& hp, const Eigen::MatrixXd& tau,
                           Eigen::Index j, Eigen::Index k) {
  if (!hp.groups) return 1.0;
  int gj = (*hp.groups)[static_cast<std::size_t>(j)] - 1;
  int gk = (*hp.groups)[static_cast<std::size_t>(k)] - 1;
  return tau(gj, gk);
}

// p*_jk = sigma(log slab-mass - log spike-mass), evaluated in log space;
// d*_jk = tau * ((1-p*)/v0^2 + p*/v1^2).
inline EStepDelta e_step_delta(const Eigen::MatrixXd& omega, double pi,
                               const Hyperparams& hp,
                               const Eigen::MatrixXd& tau) {
  const Eigen::Index p = omega.rows();
  if (!omega.allFinite())
    throw std::invalid_argument("e_step_delta: non-finite omega entries");
  EStepDelta es;
  es.pstar = Eigen::MatrixXd::Zero(p, p);
  es.dstar = Eigen::MatrixXd::Zero(p, p);
  const double log_pi = std::log(pi);
  const double log_1mpi = std::log1p(-pi);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = j + 1; k < p; ++k) {
      const double t = tau_for_pair(hp, tau, j, k);
      const double sqrt_t = std::sqrt(t);
      const double w = omega(j, k);
      const double la = log_pi + norm_logpdf0(w, hp.v1 / sqrt_t);
      const double lb = log_1mpi + norm_logpdf0(w, hp.v0 / sqrt_t);
      const double ps = 1.0 / (1.0 + std::exp(lb - la));
      const double ds =
          t * ((1.0 - ps) / (hp.v0 * hp.v0) + ps / (hp.v1 * hp.v1));
      es.pstar(j, k) = es.pstar(k, j) = ps;
      es.dstar(j, k) = es.dstar(k, j) = ds;
    }
  }
  return es;
}

// d* recomputed with tau = 1, as needed by the tau update.
inline Eigen::MatrixXd dstar_unit_from_pstar(const Eigen::MatrixXd& pstar,
                                             const Hyperparams& hp) {
  const Eigen::Index p = pstar.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = j + 1; k < p; ++k) {
      double ps = pstar(j, k);
      d(j, k) = d(k, j) =
          (1.0 - ps) / (hp.v0 * hp.v0) + ps / (hp.v1 * hp.v1);
    }
  return d;
}

// Sum over rows of E[x_i x_i^T | x_{i,o}, Omega].  The missing block of each
// row gets conditional mean -Omega_mm^{-1} Omega_mo x_o and conditional
// covariance Omega_mm^{-1} added to the outer product of the completed mean.
// Rows with every cell missing contribute Omega^{-1}; counted, not an error.
inline Eigen::MatrixXd e_step_missing(const Eigen::MatrixXd& omega,
                                      const Dataset& data,
                                      int* all_missing_rows = nullptr) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p, p);
  Eigen::LLT<Eigen::MatrixXd> omega_llt(omega);
  if (omega_llt.info() != Eigen::Success)
    throw std::runtime_error("e_step_missing: omega not SPD");
  Eigen::MatrixXd sigma;  // lazily computed full inverse, for all-missing rows
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<Eigen::Index> obs, mis;
    for (Eigen::Index j = 0; j < p; ++j)
      (data.missing(i, j) ? mis : obs).push_back(j);
    if (mis.empty()) {
      acc.noalias() += data.values.row(i).transpose() * data.values.row(i);
      continue;
    }
    if (obs.empty()) {
      if (sigma.size() == 0)
        sigma = omega_llt.solve(Eigen::MatrixXd::Identity(p, p));
      acc += sigma;
      if (all_missing_rows) ++(*all_missing_rows);
      continue;
    }
    const Eigen::Index m = static_cast<Eigen::Index>(mis.size());
    Eigen::MatrixXd omm(m, m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) omm(a, b) = omega(mis[a], mis[b]);
      for (Eigen::Index o = 0;
           o < static_cast<Eigen::Index>(obs.size()); ++o)
        rhs(a) += omega(mis[a], obs[o]) * data.values(i, obs[o]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(omm);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("e_step_missing: missing block not SPD");
    Eigen::VectorXd mu = llt.solve(-rhs);
    Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(m, m));
    Eigen::VectorXd xhat(p);
    for (std::size_t o = 0; o < obs.size(); ++o)
      xhat(obs[o]) = data.values(i, obs[o]);
    for (Eigen::Index a = 0; a < m; ++a) xhat(mis[a]) = mu(a);
    acc.noalias() += xhat * xhat.transpose();
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b)
        acc(mis[a], mis[b]) += cov(a, b);
  }
  return acc;
}

inline Eigen::MatrixXd crossprod_observed(const Dataset& data) {
  return data.values.transpose() * data.values;
}

// Closed-form Beta-posterior mode, clamped away from {0,1}.
inline double cm_step_pi(const Eigen::MatrixXd& pstar, const Hyperparams& hp) {
  const Eigen::Index p = pstar.rows();
  double sum = 0.0;
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = j + 1; k < p; ++k) sum += pstar(j, k);
  const double denom =
      hp.a + hp.b + static_cast<double>(p) * (p - 1) / 2.0 - 2.0;
  double pi = (hp.a + sum - 1.0) / denom;
  return std::min(std::max(pi, kPiClamp), 1.0 - kPiClamp);
}

// One column update: with `col` permuted last,
//   omega_12 <- -((s22+lambda) Omega11^{-1} + diag(d*_12))^{-1} s12
//   omega_22 <- omega_12' Omega11^{-1} omega_12 + n/(lambda+s22).
// The Schur complement equals n/(lambda+s22) > 0, so SPD is preserved.
inline void cm_step_column(Eigen::MatrixXd& omega,
                           const Eigen::MatrixXd& crossprod,
                           const Eigen::MatrixXd& dstar,
                           const Hyperparams& hp, Eigen::Index n,
                           Eigen::Index col) {
  const Eigen::Index p = omega.rows();
  Eigen::MatrixXd o11(p - 1, p - 1);
  Eigen::VectorXd s12(p - 1), d12(p - 1);
  Eigen::Index a = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (j == col) continue;
    Eigen::Index b = 0;
    for (Eigen::Index k = 0; k < p; ++k) {
      if (k == col) continue;
      o11(a, b) = omega(j, k);
      ++b;
    }
    s12(a) = crossprod(j, col);
    d12(a) = dstar(j, col);
    ++a;
  }
  const double s22 = crossprod(col, col);
  Eigen::LLT<Eigen::MatrixXd> llt(o11);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("cm_step_column: Omega11 not SPD");
  Eigen::MatrixXd o11inv = llt.solve(Eigen::MatrixXd::Identity(p - 1, p - 1));
  Eigen::MatrixXd m = (s22 + hp.lambda) * o11inv;
  m.diagonal() += d12;
  Eigen::VectorXd w12 = m.llt().solve(-s12);
  const double w22 =
      w12.dot(o11inv * w12) + static_cast<double>(n) / (hp.lambda + s22);
  a = 0;
  for (Eigen::Index j = 0; j < p; ++j) {
    if (j == col) continue;
    omega(j, col) = omega(col, j) = w12(a);
    ++a;
  }
  omega(col, col) = w22;
}

// Block rescaling update; empty blocks fall back to the prior mode.
inline Eigen::MatrixXd cm_step_tau(const Eigen::MatrixXd& omega,
                                   const Eigen::MatrixXd& dstar_unit,
                                   const Hyperparams& hp,
                                   std::vector<std::pair<int, int>>*
                                       empty_blocks = nullptr) {
  if (!hp.groups)
    throw std::invalid_argument("cm_step_tau: groups absent");
  const int g = hp.n_groups();
  const Eigen::Index p = omega.rows();
  Eigen::MatrixXd count = Eigen::MatrixXd::Zero(g, g);
  Eigen::MatrixXd quad = Eigen::MatrixXd::Zero(g, g);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = j + 1; k < p; ++k) {
      int gj = (*hp.groups)[static_cast<std::size_t>(j)] - 1;
      int gk = (*hp.groups)[static_cast<std::size_t>(k)] - 1;
      int lo = std::min(gj, gk), hi = std::max(gj, gk);
      count(lo, hi) += 1.0;
      quad(lo, hi) += omega(j, k) * omega(j, k) * dstar_unit(j, k);
    }
  Eigen::MatrixXd tau(g, g);
  for (int x = 0; x < g; ++x)
    for (int y = x; y < g; ++y) {
      double t;
      if (count(x, y) == 0.0) {
        t = (hp.a_tau - 1.0) / hp.b_tau;
        if (empty_blocks) empty_blocks->emplace_back(x + 1, y + 1);
      } else {
        t = (hp.a_tau - 1.0 + 0.5 * count(x, y)) /
            (hp.b_tau + 0.5 * quad(x, y));
      }
      tau(x, y) = tau(y, x) = t;
    }
  return tau;
}

// Expected complete-data log posterior, E-step quantities held fixed
// (constant dropped).
inline double log_posterior(const Eigen::MatrixXd& omega,
                            const Eigen::MatrixXd& pstar,
                            const Eigen::MatrixXd& dstar, double pi,
                            const Eigen::MatrixXd& crossprod,
                            const Hyperparams& hp, Eigen::Index n) {
  const Eigen::Index p = omega.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(omega);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("log_posterior: omega not SPD");
  double logdet = 0.0;
  for (Eigen::Index j = 0; j < p; ++j)
    logdet += 2.0 * std::log(llt.matrixL()(j, j));
  double val = 0.5 * static_cast<double>(n) * logdet -
               0.5 * crossprod.cwiseProduct(omega).sum();
  double psum = 0.0;
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = j + 1; k < p; ++k) {
      val -= 0.5 * omega(j, k) * omega(j, k) * dstar(j, k);
      psum += pstar(j, k);
    }
  val -= 0.5 * hp.lambda * omega.trace();
  val += psum * (std::log(pi) - std::log1p(-pi));
  val += static_cast<double>(p) * (p - 1) / 2.0 * std::log1p(-pi);
  val += (hp.a - 1.0) * std::log(pi) + (hp.b - 1.0) * std::log1p(-pi);
  return val;
}

inline Eigen::MatrixXd default_init(const Eigen::MatrixXd& crossprod,
                                    Eigen::Index n, const Hyperparams& hp) {
  const Eigen::Index p = crossprod.rows();
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j)
    omega(j, j) =
        1.0 / (crossprod(j, j) / static_cast<double>(n) + hp.lambda);
  return omega;
}

// Per-iteration snapshots, for diagnostics and tests.
struct FitObserver {
  std::vector<Eigen::MatrixXd> omegas;
  std::vector<double> pis;
};

// Full ECM driver: E-step (edge expectations, plus the missing-data
// cross-product when the mask is non-empty, plus the tau update when groups
// are present), pi update, one ascending sweep of column updates, explicit
// symmetrization, until max |Omega change| < tol or max_iter.
inline GraphEstimate fit_ecm(const Dataset& data, const Hyperparams& hp,
                             const Eigen::MatrixXd* init = nullptr,
                             bool force_missing_estep = false,
                             FitObserver* observer = nullptr) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  const bool any_missing = data.has_missing() || force_missing_estep;
  const int g = hp.n_groups();

  GraphEstimate est;
  Eigen::MatrixXd crossprod =
      any_missing ? Eigen::MatrixXd() : crossprod_observed(data);
  Eigen::MatrixXd omega;
  if (init) {
    omega = *init;
  } else {
    Eigen::MatrixXd s0 =
        any_missing
            ? e_step_missing(Eigen::MatrixXd::Identity(p, p), data)
            : crossprod;
    omega = default_init(s0, n, hp);
  }
  double pi = 0.5;
  Eigen::MatrixXd tau = Eigen::MatrixXd::Ones(g, g);
  EStepDelta es;

  for (int it = 1; it <= hp.max_iter; ++it) {
    if (any_missing) {
      int amr = 0;
      crossprod = e_step_missing(omega, data, &amr);
      if (it == 1) est.all_missing_rows = amr;
    }
    es = e_step_delta(omega, pi, hp, tau);
    Eigen::MatrixXd dstar = es.dstar;
    if (hp.groups) {
      Eigen::MatrixXd du = dstar_unit_from_pstar(es.pstar, hp);
      tau = cm_step_tau(omega, du, hp);
      dstar = du;
      for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index k = 0; k < p; ++k)
          if (j != k) dstar(j, k) *= tau_for_pair(hp, tau, j, k);
    }
    pi = cm_step_pi(es.pstar, hp);

    Eigen::MatrixXd omega_old = omega;
    for (Eigen::Index col = 0; col < p; ++col)
      cm_step_column(omega, crossprod, dstar, hp, n, col);
    omega = 0.5 * (omega + omega.transpose()).eval();

    est.trace.emplace_back(
        it, log_posterior(omega, es.pstar, dstar, pi, crossprod, hp, n));
    est.iterations = it;
    if (observer) {
      observer->omegas.push_back(omega);
      observer->pis.push_back(pi);
    }
    if ((omega - omega_old).cwiseAbs().maxCoeff() < hp.tol) {
      est.converged = true;
      break;
    }
    est.converged = (it < hp.max_iter);
  }

  est.omega = omega;
  est.pstar = e_step_delta(omega, pi, hp, tau).pstar;
  est.pi = pi;
  est.tau = tau;
  est.v0_selected = hp.v0;
  est.adjacency = threshold_pstar(est.pstar, 0.5);
  return est;
}

}  // namespace emgs
