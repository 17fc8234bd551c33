#pragma once

#include <algorithm>
#include <stdexcept>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

namespace emgs {

using Adjacency = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

inline Adjacency empty_adjacency(Eigen::Index p) {
  return Adjacency::Constant(p, p, false);
}

// Keeps edges with |omega_jk| >= t (strictly off-diagonal).
template <typename Derived>
Adjacency threshold_abs(const Eigen::MatrixBase<Derived>& omega, double t) {
  const Eigen::Index p = omega.rows();
  Adjacency adj = empty_adjacency(p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = j + 1; k < p; ++k)
      if (std::abs(omega(j, k)) >= t) adj(j, k) = adj(k, j) = true;
  return adj;
}

// Keeps the k largest |omega_jk| over j<k, skipping exact zeros; ties are
// broken by (j,k) lexicographic order, smaller index kept first.
template <typename Derived>
Adjacency threshold_top_k(const Eigen::MatrixBase<Derived>& omega,
                          std::size_t k) {
  const Eigen::Index p = omega.rows();
  const std::size_t max_edges =
      static_cast<std::size_t>(p) * static_cast<std::size_t>(p - 1) / 2;
  if (k > max_edges)
    throw std::invalid_argument("top_k: k exceeds p(p-1)/2");
  std::vector<std::tuple<double, Eigen::Index, Eigen::Index>> entries;
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index kk = j + 1; kk < p; ++kk) {
      double v = std::abs(omega(j, kk));
      if (v > 0.0) entries.emplace_back(v, j, kk);
    }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b))
      return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b))
      return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  Adjacency adj = empty_adjacency(p);
  const std::size_t kept = std::min(k, entries.size());
  for (std::size_t e = 0; e < kept; ++e) {
    adj(std::get<1>(entries[e]), std::get<2>(entries[e])) = true;
    adj(std::get<2>(entries[e]), std::get<1>(entries[e])) = true;
  }
  return adj;
}

// Keeps edges with slab inclusion probability p*_jk > q.
template <typename Derived>
Adjacency threshold_pstar(const Eigen::MatrixBase<Derived>& pstar, double q) {
  const Eigen::Index p = pstar.rows();
  Adjacency adj = empty_adjacency(p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = j + 1; k < p; ++k)
      if (pstar(j, k) > q) adj(j, k) = adj(k, j) = true;
  return adj;
}

inline std::size_t edge_count(const Adjacency& adj) {
  std::size_t c = 0;
  for (Eigen::Index j = 0; j < adj.rows(); ++j)
    for (Eigen::Index k = j + 1; k < adj.cols(); ++k)
      if (adj(j, k)) ++c;
  return c;
}

// -omega_jk / sqrt(omega_jj omega_kk); unit diagonal.
template <typename Derived>
Eigen::MatrixXd partial_correlations(const Eigen::MatrixBase<Derived>& omega) {
  const Eigen::Index p = omega.rows();
  Eigen::MatrixXd pc(p, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = 0; k < p; ++k)
      pc(j, k) = (j == k) ? 1.0
                          : -omega(j, k) /
                                std::sqrt(omega(j, j) * omega(k, k));
  return pc;
}

}  // namespace emgs
