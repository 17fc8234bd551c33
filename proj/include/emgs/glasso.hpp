#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

// Graphical lasso by block coordinate descent on the covariance matrix,
// used as the comparison baseline.  Off-diagonals are penalized by default;
// the diagonal penalty is available behind a flag.

namespace emgs {

struct GlassoFit {
  Eigen::MatrixXd omega;
  Eigen::MatrixXd sigma;  // maintained inverse (the working W)
  double rho = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

// Max violation of the subgradient optimality conditions of
// -log|Omega| + tr(S Omega) + rho sum_{j!=k} |omega_jk|.
inline double kkt_check(const GlassoFit& fit, const Eigen::MatrixXd& S,
                        double rho) {
  const Eigen::Index p = S.rows();
  double res = 0.0;
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = 0; k < p; ++k) {
      const double g = fit.sigma(j, k) - S(j, k);
      double v;
      if (j == k)
        v = std::abs(g);
      else if (fit.omega(j, k) != 0.0)
        v = std::abs(g - rho * (fit.omega(j, k) > 0 ? 1.0 : -1.0));
      else
        v = std::max(0.0, std::abs(g) - rho);
      res = std::max(res, v);
    }
  return res;
}

inline GlassoFit glasso_fit(const Eigen::MatrixXd& S, double rho,
                            double tol = 1e-6, int max_iter = 500,
                            bool penalize_diagonal = false) {
  const Eigen::Index p = S.rows();
  if ((S.diagonal().array() <= 0).any())
    throw std::invalid_argument("glasso_fit: diag(S) must be positive");

  GlassoFit fit;
  fit.rho = rho;
  Eigen::MatrixXd W = S;
  if (penalize_diagonal) W.diagonal().array() += rho;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(p, p);  // column of betas each j

  Eigen::MatrixXd W11(p - 1, p - 1);
  Eigen::VectorXd s12(p - 1), beta(p - 1);

  int it = 0;
  for (; it < max_iter; ++it) {
    double max_change = 0.0;
    for (Eigen::Index col = 0; col < p; ++col) {
      Eigen::Index a = 0;
      for (Eigen::Index j = 0; j < p; ++j) {
        if (j == col) continue;
        Eigen::Index b = 0;
        for (Eigen::Index k = 0; k < p; ++k) {
          if (k == col) continue;
          W11(a, b) = W(j, k);
          ++b;
        }
        s12(a) = S(j, col);
        beta(a) = B(j, col);
        ++a;
      }
      // lasso subproblem: min 1/2 b'W11 b - b's12 + rho |b|_1
      for (int inner = 0; inner < 1000; ++inner) {
        double d = 0.0;
        for (Eigen::Index k = 0; k < p - 1; ++k) {
          const double old = beta(k);
          const double grad =
              s12(k) - (W11.col(k).dot(beta) - W11(k, k) * old);
          const double nb = soft_threshold(grad, rho) / W11(k, k);
          beta(k) = nb;
          d = std::max(d, std::abs(nb - old));
        }
        if (d < tol * 0.1) break;
      }
      Eigen::VectorXd w12 = W11 * beta;
      a = 0;
      for (Eigen::Index j = 0; j < p; ++j) {
        if (j == col) continue;
        max_change = std::max(max_change, std::abs(W(j, col) - w12(a)));
        W(j, col) = W(col, j) = w12(a);
        B(j, col) = beta(a);
        ++a;
      }
    }
    if (max_change < tol) {
      fit.converged = true;
      ++it;
      break;
    }
  }
  fit.iterations = it;

  // Recover Omega from the final W and betas.
  fit.omega = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index col = 0; col < p; ++col) {
    double quad = 0.0;
    Eigen::Index a = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (j == col) continue;
      quad += W(j, col) * B(j, col);
      ++a;
    }
    const double o22 = 1.0 / (W(col, col) - quad);
    fit.omega(col, col) = o22;
    for (Eigen::Index j = 0; j < p; ++j)
      if (j != col) fit.omega(j, col) = -B(j, col) * o22;
  }
  fit.omega = 0.5 * (fit.omega + fit.omega.transpose()).eval();
  fit.sigma = W;
  fit.kkt_residual = kkt_check(fit, S, rho);
  return fit;
}

// Penalized negative log-likelihood, for the monotonicity checks.
inline double glasso_objective(const Eigen::MatrixXd& omega,
                               const Eigen::MatrixXd& S, double rho,
                               bool penalize_diagonal = false) {
  Eigen::LLT<Eigen::MatrixXd> llt(omega);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("glasso_objective: omega not SPD");
  double logdet = 0.0;
  for (Eigen::Index j = 0; j < omega.rows(); ++j)
    logdet += 2.0 * std::log(llt.matrixL()(j, j));
  double pen = 0.0;
  for (Eigen::Index j = 0; j < omega.rows(); ++j)
    for (Eigen::Index k = 0; k < omega.cols(); ++k)
      if (penalize_diagonal || j != k) pen += std::abs(omega(j, k));
  return -logdet + S.cwiseProduct(omega).sum() + rho * pen;
}

}  // namespace emgs
