#include <doctest.h>

#include <cmath>
#include <random>

#include "emgs/evaluate.hpp"
#include "emgs/simulate.hpp"

using namespace emgs;

TEST_CASE("norm errors on a diagonal difference") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd b(2, 2);
  b << 3, 0, 0, 4;
  CHECK(frobenius_error(a, b) == doctest::Approx(5.0));
  CHECK(spectral_error(a, b) == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(frobenius_error(b, b) == doctest::Approx(0.0));
  CHECK(spectral_error(b, b) == doctest::Approx(0.0));
}

TEST_CASE("frobenius dominates spectral") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd a(6, 6), b(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        a(i, j) = nd(rng);
        b(i, j) = nd(rng);
      }
    double f = frobenius_error(a, b);
    double s = spectral_error(a, b);
    CHECK(f >= s - 1e-8);
    CHECK(s >= 0.0);
  }
}

TEST_CASE("spectral error matches SVD on random symmetric differences") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::MatrixXd a(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) a(i, j) = nd(rng);
    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(5, 5);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    CHECK(spectral_error(a, zero) ==
          doctest::Approx(svd.singularValues()(0)).epsilon(1e-6));
  }
}

namespace {

Adjacency adj_from_pairs(int p, std::initializer_list<std::pair<int, int>> e) {
  Adjacency a = empty_adjacency(p);
  for (auto [j, k] : e) a(j, k) = a(k, j) = true;
  return a;
}

}  // namespace

TEST_CASE("roc_auc worked examples") {
  // p = 3: pairs (0,1), (0,2), (1,2); truth has edge (0,1) only
  Adjacency truth = adj_from_pairs(3, {{0, 1}});
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(3, 3);
  s(0, 1) = s(1, 0) = 0.9;
  s(0, 2) = s(2, 0) = 0.1;
  s(1, 2) = s(2, 1) = 0.2;
  CHECK(roc_auc(s, truth) == doctest::Approx(1.0));

  s(0, 1) = s(1, 0) = 0.15;  // ranks between the two negatives
  CHECK(roc_auc(s, truth) == doctest::Approx(0.5));

  // all scores tied -> 0.5 by midranks
  Eigen::MatrixXd t = Eigen::MatrixXd::Constant(3, 3, 0.3);
  CHECK(roc_auc(t, truth) == doctest::Approx(0.5));

  CHECK_THROWS(roc_auc(s, empty_adjacency(3)));
}

TEST_CASE("roc_auc is invariant to monotone score transforms") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  SimSpec spec;
  spec.family = GraphFamily::Ar2;
  spec.p = 8;
  TrueGraph g = gen_ar2(8);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(8, 8);
  for (int j = 0; j < 8; ++j)
    for (int k = j + 1; k < 8; ++k) s(j, k) = s(k, j) = std::abs(nd(rng));
  Eigen::MatrixXd s2 = (2.0 * s).array().exp().matrix();
  s2.diagonal().setZero();
  CHECK(roc_auc(s, g.adjacency) == doctest::Approx(roc_auc(s2, g.adjacency)));
  (void)spec;
}

TEST_CASE("f1 worked examples") {
  Adjacency truth = adj_from_pairs(4, {{0, 1}, {1, 2}});
  CHECK(f1_score(truth, truth) == doctest::Approx(1.0));
  CHECK(f1_score(adj_from_pairs(4, {{0, 3}}), truth) == doctest::Approx(0.0));
  // TP=1, FP=0, FN=1 -> 2/3
  CHECK(f1_score(adj_from_pairs(4, {{0, 1}}), truth) ==
        doctest::Approx(2.0 / 3.0));
  CHECK(f1_score(empty_adjacency(4), empty_adjacency(4)) ==
        doctest::Approx(1.0));
}

TEST_CASE("top-k at the true edge count makes precision equal recall") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd;
  TrueGraph g = gen_ar1(7);
  std::size_t k = edge_count(g.adjacency);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(7, 7);
  for (int a = 0; a < 7; ++a)
    for (int b = a + 1; b < 7; ++b) s(a, b) = s(b, a) = nd(rng);
  Adjacency est = threshold_top_k(s, k);
  REQUIRE(edge_count(est) == k);
  std::size_t tp = 0;
  for (int a = 0; a < 7; ++a)
    for (int b = a + 1; b < 7; ++b)
      if (est(a, b) && g.adjacency(a, b)) ++tp;
  double prec = double(tp) / double(k);
  double rec = double(tp) / double(k);
  CHECK(f1_score(est, g.adjacency) == doctest::Approx(prec).epsilon(1e-12));
  CHECK(prec == rec);
}

TEST_CASE("fit_path rejects a non-increasing grid and warm starts help") {
  SimSpec spec;
  spec.family = GraphFamily::Ar1;
  spec.p = 8;
  spec.n = 120;
  spec.seed = 5;
  auto [truth, data] = simulate(spec);
  Dataset d = center_columns(data);
  Hyperparams hp;
  CHECK_THROWS(fit_path(d, hp, {0.2, 0.1}));
  CHECK_THROWS(fit_path(d, hp, {0.1, 0.1}));

  PathResult path = fit_path(d, hp, {0.02, 0.05, 0.1, 0.3});
  REQUIRE(path.fits.size() == 4);
  for (const auto& f : path.fits) {
    Eigen::LLT<Eigen::MatrixXd> llt(f.omega);
    CHECK(llt.info() == Eigen::Success);
  }
  // larger v0 shrinks small entries toward zero: edge count non-explosive
  CHECK(edge_count(path.fits.back().adjacency) <=
        edge_count(path.fits.front().adjacency) + 8);
}

TEST_CASE("holdout_score equals the explicit Gaussian formula") {
  Eigen::MatrixXd x(3, 2);
  x << 1, 0, 0, 2, -1, 1;
  Dataset d = Dataset::from_matrix(x);
  Eigen::MatrixXd omega(2, 2);
  omega << 2, 0.3, 0.3, 1;
  double logdet = std::log(2.0 * 1.0 - 0.09);
  Eigen::MatrixXd s = x.transpose() * x;
  double expected = 0.5 * logdet - 0.5 * (s.cwiseProduct(omega)).sum() / 3.0;
  CHECK(holdout_score(d, omega, Method::Emgs, 0) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("cv_select is deterministic and picks a grid point") {
  SimSpec spec;
  spec.family = GraphFamily::Ar1;
  spec.p = 6;
  spec.n = 90;
  spec.seed = 42;
  auto [truth, data] = simulate(spec);
  Dataset d = center_columns(data);
  Hyperparams hp;
  std::vector<double> grid = {0.02, 0.06, 0.15, 0.4};
  PathResult a = cv_select(d, hp, grid, 5, 7);
  PathResult b = cv_select(d, hp, grid, 5, 7);
  CHECK(a.v0_selected == b.v0_selected);
  REQUIRE(a.cv_scores.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(a.cv_scores[i] == b.cv_scores[i]);
  bool on_grid = false;
  for (double v : grid) on_grid |= (v == a.v0_selected);
  CHECK(on_grid);
  CHECK(&selected_fit(a) != nullptr);

  PathOptions par;
  par.jobs = 3;
  PathResult c = cv_select(d, hp, grid, 5, 7, par);
  CHECK(c.v0_selected == a.v0_selected);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(c.cv_scores[i] == doctest::Approx(a.cv_scores[i]).epsilon(1e-12));
}

TEST_CASE("cv_select boundary: K equal to n runs leave-one-out") {
  SimSpec spec;
  spec.family = GraphFamily::Ar1;
  spec.p = 3;
  spec.n = 12;
  spec.seed = 9;
  auto [truth, data] = simulate(spec);
  Dataset d = center_columns(data);
  Hyperparams hp;
  PathResult r = cv_select(d, hp, {0.05, 0.2}, 12, 1);
  CHECK(r.cv_scores.size() == 2);
  CHECK_THROWS(cv_select(d, hp, {0.05, 0.2}, 13, 1));
}

TEST_CASE("ties in the cv score resolve to the larger v0") {
  // degenerate single-point grid and a two-point grid with identical fits
  SimSpec spec;
  spec.family = GraphFamily::Ar1;
  spec.p = 4;
  spec.n = 40;
  spec.seed = 2;
  auto [truth, data] = simulate(spec);
  Dataset d = center_columns(data);
  Hyperparams hp;
  PathResult r = cv_select(d, hp, {0.1}, 4, 3);
  CHECK(r.v0_selected == 0.1);
}

TEST_CASE("bivariate conditional-mean imputation matches rho * x") {
  const double rho = 0.9;
  Eigen::MatrixXd omega(2, 2);
  const double c = 1.0 / (1.0 - rho * rho);
  omega << c, -rho * c, -rho * c, c;
  Eigen::MatrixXd x(3, 2);
  x << 1.0, 123.0, -2.0, 456.0, 0.5, 789.0;
  Dataset d = Dataset::from_matrix(x);
  d.missing(0, 1) = d.missing(1, 1) = d.missing(2, 1) = true;
  Eigen::MatrixXd imp = impute_with_omega(d, omega);
  CHECK(imp(0, 1) == doctest::Approx(rho * 1.0).epsilon(1e-12));
  CHECK(imp(1, 1) == doctest::Approx(rho * -2.0).epsilon(1e-12));
  CHECK(imp(2, 1) == doctest::Approx(rho * 0.5).epsilon(1e-12));
  // observed cells untouched
  CHECK(imp(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("pairwise covariance is SPD after flooring") {
  SimSpec spec;
  spec.family = GraphFamily::Ar1;
  spec.p = 6;
  spec.n = 15;  // few rows so the raw pairwise matrix can be indefinite
  spec.missing_rate = 0.3;
  spec.seed = 33;
  auto [truth, data] = simulate(spec);
  Dataset d = center_columns(data);
  Eigen::MatrixXd cov = pairwise_covariance(d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  CHECK(es.eigenvalues().minCoeff() >= 1e-3 - 1e-10);
}

TEST_CASE("impute_score orders methods on a correlated design") {
  SimSpec spec;
  spec.family = GraphFamily::Ar1;
  spec.p = 8;
  spec.n = 300;
  spec.seed = 71;
  auto [truth, data] = simulate(spec);
  std::mt19937_64 rng(5);
  std::bernoulli_distribution hide(0.2);
  Adjacency mask(data.n(), data.p());
  mask.setConstant(false);
  do {
    for (Eigen::Index i = 0; i < data.n(); ++i)
      for (Eigen::Index j = 0; j < data.p(); ++j) mask(i, j) = hide(rng);
  } while (!mask.any());
  // keep at least one observed cell per column
  for (Eigen::Index j = 0; j < data.p(); ++j) mask(0, j) = false;
  Hyperparams hp;
  hp.v0 = 0.1;
  double m_emgs = impute_score(data, mask, ImputeMethod::Emgs, hp);
  double m_mean = impute_score(data, mask, ImputeMethod::ColumnMean, hp);
  CHECK(m_emgs < m_mean);  // conditional mean beats the marginal mean here
  CHECK(m_emgs > 0.0);
  CHECK_THROWS(impute_score(data, empty_adjacency(1), ImputeMethod::Emgs, hp));
}
