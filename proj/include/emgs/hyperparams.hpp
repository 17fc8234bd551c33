#pragma once

#include <optional>
#include <string>
#include <vector>

#include "emgs/dataset.hpp"

namespace emgs {

// Prior and convergence settings.  Group indices, when present, are 1-based
// labels in {1..G}; tau is identically 1 without groups.
struct Hyperparams {
  double v0 = 0.1;     // spike std. dev.
  double v1 = 100.0;   // slab std. dev.
  double lambda = 1.0; // exponential rate on the diagonal
  double a = 1.0;      // Beta prior on the sparsity parameter
  double b = 1.0;
  std::optional<std::vector<int>> groups;
  double a_tau = 2.0;  // Gamma prior on the block rescaling (a_tau > 1)
  double b_tau = 2.0;
  int max_iter = 1000;
  double tol = 1e-4;

  int n_groups() const {
    if (!groups) return 1;
    int g = 0;
    for (int v : *groups) g = std::max(g, v);
    return g;
  }
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

inline ValidationReport validate(const Hyperparams& hp, const Dataset& data) {
  ValidationReport rep;
  auto bad = [&](const std::string& msg) { rep.violations.push_back(msg); };
  if (data.n() < 2) bad("n must be at least 2");
  if (data.p() < 2) bad("p must be at least 2");
  if (!(hp.v0 > 0)) bad("v0 must be positive");
  if (!(hp.v1 > hp.v0)) bad("v1 must exceed v0");
  if (!(hp.lambda > 0)) bad("lambda must be positive");
  if (!(hp.a > 0) || !(hp.b > 0)) bad("Beta prior parameters must be positive");
  if (!(hp.tol > 0)) bad("tol must be positive");
  if (hp.max_iter < 1) bad("max_iter must be at least 1");
  if (hp.groups) {
    if (static_cast<Eigen::Index>(hp.groups->size()) != data.p())
      bad("groups length must equal p");
    int g = hp.n_groups();
    for (int v : *hp.groups)
      if (v < 1 || v > g) bad("group index out of range");
    if (!(hp.a_tau > 1)) bad("a_tau must exceed 1 when groups are present");
    if (!(hp.b_tau > 0)) bad("b_tau must be positive");
  }
  for (Eigen::Index j = 0; j < data.p(); ++j) {
    bool all_missing = true;
    for (Eigen::Index i = 0; i < data.n(); ++i)
      if (!data.missing(i, j)) {
        all_missing = false;
        break;
      }
    if (all_missing)
      bad("column " + std::to_string(j + 1) + " fully missing");
  }
  return rep;
}

}  // namespace emgs
