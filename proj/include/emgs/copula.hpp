#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "emgs/dataset.hpp"
#include "emgs/ecm.hpp"
#include "emgs/prob.hpp"

// Gaussian copula graphical model estimation on the extended rank
// likelihood: rank-truncated Gibbs sampling of the latent Gaussian matrix
// and a stochastic-approximation E-step feeding the ECM machinery.

namespace emgs {

struct SaemSchedule {
  std::function<double(int)> step = [](int k) { return 1.0 / k; };
  int samples_per_iter = 5;
  int total_iter = 200;
  int sweeps_per_sample = 1;
};

// Truncation interval for cell (i,j) given the current latent matrix:
// l = max{z_{i'j} : x_{i'j} < x_{ij}}, u = min{z_{i'j} : x_{i'j} > x_{ij}}.
// Ties impose no constraint; a missing cell is unconstrained.
inline std::pair<double, double> compute_rank_bounds(
    const Eigen::MatrixXd& z, const Dataset& data, Eigen::Index i,
    Eigen::Index j) {
  double l = -std::numeric_limits<double>::infinity();
  double u = std::numeric_limits<double>::infinity();
  if (data.missing(i, j)) return {l, u};
  const double x = data.values(i, j);
  for (Eigen::Index r = 0; r < data.n(); ++r) {
    if (r == i || data.missing(r, j)) continue;
    const double xr = data.values(r, j);
    if (xr < x)
      l = std::max(l, z(r, j));
    else if (xr > x)
      u = std::min(u, z(r, j));
  }
  return {l, u};
}

// Conditional truncated-normal draw for one cell:
// m = -omega_{j,-j} z_{i,-j} / omega_jj, sigma^2 = 1/omega_jj.
inline double sample_latent_cell(const Eigen::MatrixXd& z,
                                 const Eigen::MatrixXd& omega, double l,
                                 double u, Eigen::Index i, Eigen::Index j,
                                 std::mt19937_64& rng,
                                 std::int64_t* tail_events = nullptr) {
  const double ojj = omega(j, j);
  const double dot = omega.row(j).dot(z.row(i)) - ojj * z(i, j);
  const double m = -dot / ojj;
  const double sigma = 1.0 / std::sqrt(ojj);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return truncated_normal_inverse_cdf(m, sigma, l, u, unif(rng), tail_events);
}

// One full pass over all cells in (j outer, i inner) order.  Continuous
// columns are handled through ranks like ordinal ones; missing cells are
// drawn unconstrained from the conditional.
inline void gibbs_sweep_latent(Eigen::MatrixXd& z, const Eigen::MatrixXd& omega,
                               const Dataset& data, std::mt19937_64& rng,
                               std::int64_t* tail_events = nullptr) {
  for (Eigen::Index j = 0; j < data.p(); ++j)
    for (Eigen::Index i = 0; i < data.n(); ++i) {
      auto [l, u] = compute_rank_bounds(z, data, i, j);
      z(i, j) = sample_latent_cell(z, omega, l, u, i, j, rng, tail_events);
    }
}

// q <- (1 - t_k) q + (t_k / B) sum_b Z_b' Z_b
inline Eigen::MatrixXd saem_e_step(const Eigen::MatrixXd& q_accum,
                                   const std::vector<Eigen::MatrixXd>& samples,
                                   double t_k) {
  Eigen::MatrixXd avg =
      Eigen::MatrixXd::Zero(q_accum.rows(), q_accum.cols());
  for (const auto& ztz : samples) avg += ztz;
  avg /= static_cast<double>(samples.size());
  return (1.0 - t_k) * q_accum + t_k * avg;
}

// Normal scores of within-column ranks over observed cells, ties averaged;
// missing cells start at 0.
inline Eigen::MatrixXd init_latent_scores(const Dataset& data) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    std::vector<double> obs;
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!data.missing(i, j)) {
        obs.push_back(data.values(i, j));
        idx.push_back(i);
      }
    auto ranks = average_ranks(obs);
    for (std::size_t k = 0; k < idx.size(); ++k)
      z(idx[k], j) = norm_quantile(
          ranks[k] / (static_cast<double>(obs.size()) + 1.0));
  }
  return z;
}

// SAEM driver: each outer iteration draws B samples of Z (warm-started
// across iterations), updates the cross-product accumulator, and runs the
// ECM CM-steps with the accumulator in place of X'X.  Not monotone; the
// trace records the objective at the current accumulator.
inline GraphEstimate fit_copula(const Dataset& data, const Hyperparams& hp,
                                const SaemSchedule& schedule,
                                std::uint64_t seed,
                                const EcmState* warm = nullptr) {
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  const int g = hp.n_groups();
  std::mt19937_64 rng(seed);

  GraphEstimate est;
  Eigen::MatrixXd z = init_latent_scores(data);
  Eigen::MatrixXd q_accum = Eigen::MatrixXd::Zero(p, p);
  Eigen::MatrixXd omega;
  double pi = 0.5;
  Eigen::MatrixXd tau = Eigen::MatrixXd::Ones(g, g);
  if (warm) {
    omega = warm->omega;
    pi = warm->pi;
    tau = warm->tau;
    q_accum = warm->q_accum;
  } else {
    omega = default_init(z.transpose() * z, n, hp);
  }

  std::int64_t tails = 0;
  for (int k = 1; k <= schedule.total_iter; ++k) {
    std::vector<Eigen::MatrixXd> samples;
    samples.reserve(static_cast<std::size_t>(schedule.samples_per_iter));
    for (int b = 0; b < schedule.samples_per_iter; ++b) {
      for (int s = 0; s < schedule.sweeps_per_sample; ++s)
        gibbs_sweep_latent(z, omega, data, rng, &tails);
      samples.push_back(z.transpose() * z);
    }
    const double t_k = schedule.step(k);
    if (k == 1 && !warm && q_accum.isZero())
      q_accum = saem_e_step(q_accum, samples, 1.0);
    else
      q_accum = saem_e_step(q_accum, samples, t_k);

    EStepDelta es = e_step_delta(omega, pi, hp, tau);
    Eigen::MatrixXd dstar = es.dstar;
    if (hp.groups) {
      Eigen::MatrixXd du = dstar_unit_from_pstar(es.pstar, hp);
      tau = cm_step_tau(omega, du, hp);
      dstar = du;
      for (Eigen::Index jj = 0; jj < p; ++jj)
        for (Eigen::Index kk = 0; kk < p; ++kk)
          if (jj != kk) dstar(jj, kk) *= tau_for_pair(hp, tau, jj, kk);
    }
    pi = cm_step_pi(es.pstar, hp);
    for (Eigen::Index col = 0; col < p; ++col)
      cm_step_column(omega, q_accum, dstar, hp, n, col);
    omega = 0.5 * (omega + omega.transpose()).eval();
    est.trace.emplace_back(
        k, log_posterior(omega, es.pstar, dstar, pi, q_accum, hp, n));
  }

  est.omega = omega;
  est.pi = pi;
  est.tau = tau;
  est.iterations = schedule.total_iter;
  est.v0_selected = hp.v0;
  est.pstar = e_step_delta(omega, pi, hp, tau).pstar;
  est.adjacency = threshold_pstar(est.pstar, 0.5);
  est.tail_events = tails;
  return est;
}

// Latent cross-product expectation for held-out rows under a fixed
// precision matrix; used by cross-validation scoring for copula fits.
inline Eigen::MatrixXd expected_latent_crossprod(const Dataset& data,
                                                 const Eigen::MatrixXd& omega,
                                                 std::uint64_t seed,
                                                 int burn_in = 10,
                                                 int keep = 10) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd z = init_latent_scores(data);
  for (int s = 0; s < burn_in; ++s) gibbs_sweep_latent(z, omega, data, rng);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(data.p(), data.p());
  for (int s = 0; s < keep; ++s) {
    gibbs_sweep_latent(z, omega, data, rng);
    acc += z.transpose() * z;
  }
  return acc / static_cast<double>(keep);
}

}  // namespace emgs
