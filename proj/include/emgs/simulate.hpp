#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "emgs/dataset.hpp"
#include "emgs/graph.hpp"
#include "emgs/prob.hpp"

// Synthetic graph and data generators: AR(1)/AR(2) bands, Bernoulli random
// graphs, within-block cluster graphs, Gaussian or Poisson margins, and
// missing-completely-at-random masks.

namespace emgs {

enum class GraphFamily { Ar1, Ar2, Random, Cluster };
enum class Margin { Gaussian, Poisson };

struct SimSpec {
  GraphFamily family = GraphFamily::Ar1;
  int p = 10;
  int n = 100;
  double edge_prob = 0.2;       // random/cluster families
  int n_clusters = 0;           // 0 = max{2, floor(p/20)}
  Margin margin = Margin::Gaussian;
  double theta = 2.0;           // Poisson mean
  double missing_rate = 0.0;
  std::uint64_t seed = 0;
};

struct TrueGraph {
  Eigen::MatrixXd omega;
  Eigen::MatrixXd sigma;
  Adjacency adjacency;
};

// Sigma_jk = 0.7^|j-k|; Omega is its tridiagonal inverse in closed form.
inline TrueGraph gen_ar1(int p, double rho = 0.7) {
  if (p < 2) throw std::invalid_argument("gen_ar1: p must be >= 2");
  TrueGraph g;
  g.sigma.resize(p, p);
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k)
      g.sigma(j, k) = std::pow(rho, std::abs(j - k));
  g.omega = Eigen::MatrixXd::Zero(p, p);
  const double c = 1.0 / (1.0 - rho * rho);
  for (int j = 0; j < p; ++j)
    g.omega(j, j) = (j == 0 || j == p - 1) ? c : (1.0 + rho * rho) * c;
  for (int j = 0; j + 1 < p; ++j)
    g.omega(j, j + 1) = g.omega(j + 1, j) = -rho * c;
  g.adjacency = threshold_abs(g.omega, 1e-12);
  return g;
}

// Banded precision: unit diagonal, 0.5 at lag one, 0.25 at lag two.
inline TrueGraph gen_ar2(int p) {
  if (p < 3) throw std::invalid_argument("gen_ar2: p must be >= 3");
  TrueGraph g;
  g.omega = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j) {
    g.omega(j, j) = 1.0;
    if (j + 1 < p) g.omega(j, j + 1) = g.omega(j + 1, j) = 0.5;
    if (j + 2 < p) g.omega(j, j + 2) = g.omega(j + 2, j) = 0.25;
  }
  g.sigma = g.omega.llt().solve(Eigen::MatrixXd::Identity(p, p));
  g.adjacency = threshold_abs(g.omega, 1e-12);
  return g;
}

namespace detail {

// Weighted precision over a fixed edge set: weights uniform in +/-[0.4, 1],
// diagonal dominance for SPD, then rescaled so Sigma has unit variances.
inline TrueGraph precision_from_edges(const Adjacency& edges,
                                      std::mt19937_64& rng) {
  const Eigen::Index p = edges.rows();
  std::uniform_real_distribution<double> mag(0.4, 1.0);
  std::bernoulli_distribution sign(0.5);
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = j + 1; k < p; ++k)
      if (edges(j, k)) {
        double w = mag(rng) * (sign(rng) ? 1.0 : -1.0);
        omega(j, k) = omega(k, j) = w;
      }
  for (Eigen::Index j = 0; j < p; ++j)
    omega(j, j) = omega.row(j).cwiseAbs().sum() + 0.1;
  // unit-variance rescale: omega <- D omega D with D = sqrt(diag(Sigma))
  Eigen::MatrixXd sigma =
      omega.llt().solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::VectorXd d = sigma.diagonal().array().sqrt();
  omega = d.asDiagonal() * omega * d.asDiagonal();
  TrueGraph g;
  g.omega = omega;
  g.sigma = omega.llt().solve(Eigen::MatrixXd::Identity(p, p));
  g.adjacency = edges;
  return g;
}

}  // namespace detail

inline TrueGraph gen_random_graph(int p, double prob, std::mt19937_64& rng) {
  if (p < 2) throw std::invalid_argument("gen_random_graph: p must be >= 2");
  std::bernoulli_distribution edge(prob);
  Adjacency edges = empty_adjacency(p);
  for (int j = 0; j < p; ++j)
    for (int k = j + 1; k < p; ++k)
      if (edge(rng)) edges(j, k) = edges(k, j) = true;
  return detail::precision_from_edges(edges, rng);
}

// Contiguous equal-sized clusters, random edges within each cluster only.
inline TrueGraph gen_cluster_graph(int p, std::mt19937_64& rng,
                                   double prob = 0.2, int n_clusters = 0) {
  if (n_clusters <= 0) n_clusters = std::max(2, p / 20);
  std::bernoulli_distribution edge(prob);
  Adjacency edges = empty_adjacency(p);
  for (int j = 0; j < p; ++j)
    for (int k = j + 1; k < p; ++k) {
      if (j * n_clusters / p != k * n_clusters / p) continue;
      if (edge(rng)) edges(j, k) = edges(k, j) = true;
    }
  return detail::precision_from_edges(edges, rng);
}

inline TrueGraph gen_graph(const SimSpec& spec, std::mt19937_64& rng) {
  switch (spec.family) {
    case GraphFamily::Ar1:
      return gen_ar1(spec.p);
    case GraphFamily::Ar2:
      return gen_ar2(spec.p);
    case GraphFamily::Random:
      return gen_random_graph(spec.p, spec.edge_prob, rng);
    case GraphFamily::Cluster:
      return gen_cluster_graph(spec.p, rng, spec.edge_prob,
                               spec.n_clusters);
  }
  throw std::logic_error("gen_graph: unknown family");
}

// Rows drawn from Normal(0, Omega^{-1}); Poisson margins map each latent
// cell through its Gaussian CDF and the Poisson quantile.  MCAR mask last.
inline Dataset sample_data(const SimSpec& spec, const TrueGraph& truth,
                           std::mt19937_64& rng) {
  const int n = spec.n;
  const int p = spec.p;
  Eigen::LLT<Eigen::MatrixXd> llt(truth.sigma);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("sample_data: sigma not SPD");
  Eigen::MatrixXd L = llt.matrixL();
  std::normal_distribution<double> stdnorm(0.0, 1.0);
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd zrow(p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) zrow(j) = stdnorm(rng);
    x.row(i) = (L * zrow).transpose();
  }
  Dataset d = Dataset::from_matrix(x);
  if (spec.margin == Margin::Poisson) {
    for (int j = 0; j < p; ++j) {
      const double sd = std::sqrt(truth.sigma(j, j));
      for (int i = 0; i < n; ++i)
        d.values(i, j) = static_cast<double>(
            poisson_quantile(norm_cdf(d.values(i, j) / sd), spec.theta));
      d.kinds[static_cast<std::size_t>(j)] = ColumnKind::Ordinal;
    }
  }
  if (spec.missing_rate > 0.0) {
    std::bernoulli_distribution miss(spec.missing_rate);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j)
        if (miss(rng)) d.missing(i, j) = true;
  }
  return d;
}

inline std::pair<TrueGraph, Dataset> simulate(const SimSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  TrueGraph g = gen_graph(spec, rng);
  Dataset d = sample_data(spec, g, rng);
  return {g, d};
}

inline std::string family_name(GraphFamily f) {
  switch (f) {
    case GraphFamily::Ar1: return "ar1";
    case GraphFamily::Ar2: return "ar2";
    case GraphFamily::Random: return "random";
    case GraphFamily::Cluster: return "cluster";
  }
  return "?";
}

}  // namespace emgs
