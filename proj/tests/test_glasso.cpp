#include <doctest.h>

#include <cmath>
#include <random>

#include "emgs/evaluate.hpp"
#include "emgs/glasso.hpp"
#include "emgs/simulate.hpp"

using namespace emgs;

namespace {

Eigen::MatrixXd sample_cov(int n, int p, std::uint64_t seed) {
  SimSpec spec;
  spec.family = GraphFamily::Ar1;
  spec.p = p;
  spec.n = n;
  spec.seed = seed;
  auto [truth, data] = simulate(spec);
  Eigen::MatrixXd c = data.values.rowwise() - data.values.colwise().mean();
  return Eigen::MatrixXd(c.transpose() * c / double(n));
}

}  // namespace

TEST_CASE("soft threshold worked examples") {
  CHECK(soft_threshold(3.0, 1.0) == doctest::Approx(2.0));
  CHECK(soft_threshold(-3.0, 1.0) == doctest::Approx(-2.0));
  CHECK(soft_threshold(0.5, 1.0) == doctest::Approx(0.0));
  CHECK(soft_threshold(-1.0, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("rho = 0 recovers the inverse covariance") {
  Eigen::MatrixXd S = sample_cov(500, 5, 3);
  GlassoFit fit = glasso_fit(S, 0.0, 1e-9, 2000);
  Eigen::MatrixXd inv = S.inverse();
  CHECK((fit.omega - inv).cwiseAbs().maxCoeff() < 1e-5);
  // residual definition at rho = 0: max |Omega^{-1} - S|
  CHECK(fit.kkt_residual ==
        doctest::Approx((fit.sigma - S).cwiseAbs().maxCoeff()));
}

TEST_CASE("rho above the max off-diagonal gives a diagonal estimate") {
  Eigen::MatrixXd S = sample_cov(300, 6, 8);
  double rho_max = 0.0;
  for (int j = 0; j < 6; ++j)
    for (int k = j + 1; k < 6; ++k)
      rho_max = std::max(rho_max, std::abs(S(j, k)));
  GlassoFit fit = glasso_fit(S, rho_max * 1.01);
  for (int j = 0; j < 6; ++j)
    for (int k = 0; k < 6; ++k) {
      if (j == k)
        CHECK(fit.omega(j, j) == doctest::Approx(1.0 / S(j, j)).epsilon(1e-6));
      else
        CHECK(fit.omega(j, k) == doctest::Approx(0.0));
    }
}

TEST_CASE("KKT residual is small at the solution and grows off it") {
  Eigen::MatrixXd S = sample_cov(400, 8, 12);
  const double rho = 0.1;
  GlassoFit fit = glasso_fit(S, rho, 1e-8, 2000);
  CHECK(fit.converged);
  CHECK(fit.kkt_residual < 1e-4);

  GlassoFit bumped = fit;
  bumped.omega(0, 1) += 0.1;
  bumped.omega(1, 0) += 0.1;
  bumped.sigma = bumped.omega.inverse();
  CHECK(kkt_check(bumped, S, rho) > 10.0 * fit.kkt_residual);
}

TEST_CASE("omega and the maintained sigma are inverse pairs") {
  Eigen::MatrixXd S = sample_cov(300, 7, 21);
  GlassoFit fit = glasso_fit(S, 0.05, 1e-8, 2000);
  Eigen::MatrixXd prod = fit.omega * fit.sigma;
  CHECK((prod - Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-4);
  Eigen::LLT<Eigen::MatrixXd> llt(fit.omega);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("objective at the fit beats nearby perturbations") {
  Eigen::MatrixXd S = sample_cov(300, 5, 4);
  const double rho = 0.08;
  GlassoFit fit = glasso_fit(S, rho, 1e-8, 2000);
  const double at_fit = glasso_objective(fit.omega, S, rho);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd(0.0, 0.02);
  for (int rep = 0; rep < 30; ++rep) {
    Eigen::MatrixXd pert = fit.omega;
    for (int j = 0; j < 5; ++j)
      for (int k = j; k < 5; ++k) {
        double e = nd(rng);
        pert(j, k) += e;
        pert(k, j) = pert(j, k);
      }
    Eigen::LLT<Eigen::MatrixXd> llt(pert);
    if (llt.info() != Eigen::Success) continue;
    CHECK(glasso_objective(pert, S, rho) >= at_fit - 1e-8);
  }
}

TEST_CASE("heavier penalties give sparser graphs") {
  Eigen::MatrixXd S = sample_cov(200, 10, 55);
  GlassoFit light = glasso_fit(S, 0.02, 1e-7, 1000);
  GlassoFit heavy = glasso_fit(S, 0.3, 1e-7, 1000);
  std::size_t e_light = edge_count(threshold_abs(light.omega, 1e-8));
  std::size_t e_heavy = edge_count(threshold_abs(heavy.omega, 1e-8));
  CHECK(e_heavy < e_light);
}

TEST_CASE("diagonal penalty flag shifts the working diagonal") {
  Eigen::MatrixXd S = sample_cov(300, 4, 17);
  GlassoFit plain = glasso_fit(S, 0.1);
  GlassoFit pen = glasso_fit(S, 0.1, 1e-6, 500, true);
  for (int j = 0; j < 4; ++j) {
    CHECK(plain.sigma(j, j) == doctest::Approx(S(j, j)));
    CHECK(pen.sigma(j, j) == doctest::Approx(S(j, j) + 0.1));
  }
  // penalized diagonal means smaller precision diagonal
  for (int j = 0; j < 4; ++j) CHECK(pen.omega(j, j) < plain.omega(j, j));
}

TEST_CASE("non-positive diagonal is rejected") {
  Eigen::MatrixXd S = Eigen::MatrixXd::Identity(3, 3);
  S(1, 1) = 0.0;
  CHECK_THROWS(glasso_fit(S, 0.1));
}

TEST_CASE("path over rho is continuous at neighboring penalties") {
  Eigen::MatrixXd S = sample_cov(400, 6, 9);
  GlassoFit a = glasso_fit(S, 0.10, 1e-8, 2000);
  GlassoFit b = glasso_fit(S, 0.1001, 1e-8, 2000);
  CHECK((a.omega - b.omega).cwiseAbs().maxCoeff() < 0.01);
}
