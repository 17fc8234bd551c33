#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

// Scalar probability helpers shared by the ECM and copula code paths.
// Everything here is deterministic given its inputs; random draws are made
// by feeding uniforms from an explicit engine into inverse CDFs.

namespace emgs {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

template <typename Scalar>
Scalar norm_cdf(Scalar x) {
  return Scalar(0.5) * std::erfc(-x / std::sqrt(Scalar(2)));
}

// Acklam's rational approximation with one Halley refinement step;
// accurate to ~1e-15 over (0,1).
template <typename Scalar>
Scalar norm_quantile(Scalar p) {
  if (p <= Scalar(0)) return -std::numeric_limits<Scalar>::infinity();
  if (p >= Scalar(1)) return std::numeric_limits<Scalar>::infinity();

  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};

  const double plow = 0.02425;
  double q, x;
  double pd = static_cast<double>(p);
  if (pd < plow) {
    q = std::sqrt(-2.0 * std::log(pd));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (pd <= 1.0 - plow) {
    q = pd - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    q = std::sqrt(-2.0 * std::log(1.0 - pd));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley refinement against the exact CDF.
  double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - pd;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return static_cast<Scalar>(x);
}

// log Normal(x | 0, sd^2)
template <typename Scalar>
Scalar norm_logpdf0(Scalar x, Scalar sd) {
  return -kLogSqrt2Pi - std::log(sd) - x * x / (2 * sd * sd);
}

// Inverse-CDF draw from Normal(m, sigma^2) truncated to [l, u], given a
// uniform q in (0,1).  Returns clamp(m,l,u) and bumps *tail_events when the
// truncation interval has no CDF mass left in double precision.
inline double truncated_normal_inverse_cdf(double m, double sigma, double l,
                                           double u, double q,
                                           std::int64_t* tail_events = nullptr) {
  double pl = std::isinf(l) && l < 0 ? 0.0 : norm_cdf((l - m) / sigma);
  double pu = std::isinf(u) && u > 0 ? 1.0 : norm_cdf((u - m) / sigma);
  if (!(pu > pl)) {
    if (tail_events) ++(*tail_events);
    return std::min(std::max(m, l), u);
  }
  double z = m + sigma * norm_quantile(pl + q * (pu - pl));
  return std::min(std::max(z, l), u);
}

// Smallest k with Pr(Poisson(theta) <= k) >= u.
inline long poisson_quantile(double u, double theta) {
  if (u <= 0.0) return 0;
  double pmf = std::exp(-theta);
  double cdf = pmf;
  long k = 0;
  // For the theta values used here (<= ~100) this loop terminates fast.
  while (cdf < u && k < 100000) {
    ++k;
    pmf *= theta / static_cast<double>(k);
    cdf += pmf;
    if (pmf < 1e-300 && cdf < u) break;  // tail underflow; return current k
  }
  return k;
}

// Average ranks (1-based, ties averaged) of the finite entries of v.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    double r = 0.5 * static_cast<double>(i + j) + 1.0;  // average of i+1..j+1
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace emgs
