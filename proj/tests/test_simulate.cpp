#include <doctest.h>

#include <cmath>
#include <random>

#include "emgs/simulate.hpp"

using namespace emgs;

TEST_CASE("ar1 precision matches the closed form") {
  TrueGraph g = gen_ar1(5);
  CHECK(g.omega(0, 0) == doctest::Approx(1.0 / 0.51).epsilon(1e-10));
  CHECK(g.omega(4, 4) == doctest::Approx(1.0 / 0.51).epsilon(1e-10));
  CHECK(g.omega(2, 2) == doctest::Approx(1.49 / 0.51).epsilon(1e-10));
  CHECK(g.omega(1, 2) == doctest::Approx(-0.7 / 0.51).epsilon(1e-10));
  CHECK(g.omega(0, 2) == doctest::Approx(0.0));
  CHECK(g.sigma(1, 3) == doctest::Approx(0.49));
  // exact inverse pair
  Eigen::MatrixXd prod = g.omega * g.sigma;
  CHECK((prod - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <
        1e-10);
  CHECK(edge_count(g.adjacency) == 4);
}

TEST_CASE("ar2 band structure and SPD at large p") {
  TrueGraph g = gen_ar2(7);
  Eigen::VectorXd row = g.omega.row(3);
  CHECK(row(1) == doctest::Approx(0.25));
  CHECK(row(2) == doctest::Approx(0.5));
  CHECK(row(3) == doctest::Approx(1.0));
  CHECK(row(4) == doctest::Approx(0.5));
  CHECK(row(5) == doctest::Approx(0.25));
  CHECK(row(6) == doctest::Approx(0.0));
  CHECK(edge_count(g.adjacency) == 6 + 5);

  TrueGraph big = gen_ar2(500);
  Eigen::LLT<Eigen::MatrixXd> llt(big.omega);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("random graph density concentrates around edge_prob") {
  std::mt19937_64 rng(17);
  const int p = 50;
  const double pairs = p * (p - 1) / 2.0;
  double total = 0.0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    std::bernoulli_distribution edge(0.2);
    Adjacency edges = empty_adjacency(p);
    for (int j = 0; j < p; ++j)
      for (int k = j + 1; k < p; ++k)
        if (edge(rng)) edges(j, k) = edges(k, j) = true;
    total += edge_count(edges) / pairs;
  }
  CHECK(total / reps == doctest::Approx(0.2).epsilon(0.05));

  // full generator: SPD, unit variances, adjacency matches support
  TrueGraph g = gen_random_graph(p, 0.2, rng);
  Eigen::LLT<Eigen::MatrixXd> llt(g.omega);
  CHECK(llt.info() == Eigen::Success);
  for (int j = 0; j < p; ++j)
    CHECK(g.sigma(j, j) == doctest::Approx(1.0).epsilon(1e-10));
  for (int j = 0; j < p; ++j)
    for (int k = j + 1; k < p; ++k)
      CHECK(g.adjacency(j, k) == (std::abs(g.omega(j, k)) > 1e-12));
}

TEST_CASE("cluster graph has no between-block edges") {
  std::mt19937_64 rng(5);
  const int p = 30;
  TrueGraph g = gen_cluster_graph(p, rng, 0.5, 3);
  for (int j = 0; j < p; ++j)
    for (int k = j + 1; k < p; ++k)
      if (j * 3 / p != k * 3 / p) {
        CHECK_FALSE(g.adjacency(j, k));
        CHECK(g.omega(j, k) == doctest::Approx(0.0));
      }
  CHECK(edge_count(g.adjacency) > 0);
}

TEST_CASE("sample covariance converges to sigma") {
  SimSpec spec;
  spec.family = GraphFamily::Ar1;
  spec.p = 5;
  spec.n = 100000;
  spec.seed = 99;
  auto [truth, data] = simulate(spec);
  Eigen::MatrixXd centered =
      data.values.rowwise() - data.values.colwise().mean();
  Eigen::MatrixXd s = centered.transpose() * centered / double(spec.n);
  CHECK((s - truth.sigma).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("poisson margin maps the latent median to the distribution median") {
  // z = 0 -> u = 0.5 -> Poisson(2) quantile 2
  CHECK(poisson_quantile(norm_cdf(0.0), 2.0) == 2);
  CHECK(poisson_quantile(0.0, 2.0) == 0);
  CHECK(poisson_quantile(1.0 - 1e-12, 2.0) > 8);
}

TEST_CASE("poisson margins are nonnegative integers marked ordinal") {
  SimSpec spec;
  spec.family = GraphFamily::Ar1;
  spec.p = 6;
  spec.n = 300;
  spec.margin = Margin::Poisson;
  spec.theta = 2.0;
  spec.seed = 31;
  auto [truth, data] = simulate(spec);
  for (Eigen::Index i = 0; i < data.n(); ++i)
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      double v = data.values(i, j);
      CHECK(v >= 0.0);
      CHECK(v == std::floor(v));
    }
  for (auto k : data.kinds) CHECK(k == ColumnKind::Ordinal);
  // empirical mean near theta
  CHECK(data.values.mean() == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("missing mask hits the requested rate") {
  SimSpec spec;
  spec.family = GraphFamily::Ar1;
  spec.p = 20;
  spec.n = 2000;
  spec.missing_rate = 0.2;
  spec.seed = 77;
  auto [truth, data] = simulate(spec);
  double rate = data.missing.cast<double>().sum() / (2000.0 * 20.0);
  CHECK(rate == doctest::Approx(0.2).epsilon(0.1));
}

TEST_CASE("simulate is deterministic in the seed") {
  SimSpec spec;
  spec.family = GraphFamily::Random;
  spec.p = 12;
  spec.n = 40;
  spec.missing_rate = 0.1;
  spec.seed = 123;
  auto [t1, d1] = simulate(spec);
  auto [t2, d2] = simulate(spec);
  CHECK(t1.omega == t2.omega);
  CHECK(d1.values == d2.values);
  CHECK((d1.missing == d2.missing).all());

  spec.seed = 124;
  auto [t3, d3] = simulate(spec);
  CHECK(d1.values != d3.values);
}

TEST_CASE("invalid dimensions throw") {
  CHECK_THROWS(gen_ar1(1));
  CHECK_THROWS(gen_ar2(2));
  std::mt19937_64 rng(0);
  CHECK_THROWS(gen_random_graph(1, 0.2, rng));
}
