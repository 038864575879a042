#pragma once

// Goodness-of-fit helpers: one-sample Kolmogorov-Smirnov and chi-squared.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "bgq/errors.hpp"
#include "bgq/numeric.hpp"

namespace bgq {

// sup_x |F_n(x) - F(x)|
inline double ks_statistic(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw InvalidInput("KS statistic needs at least one sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

// Kolmogorov limiting distribution Q(λ) = 2 Σ (-1)^{j-1} exp(-2 j^2 λ^2),
// evaluated at Stephens' finite-n argument λ = (√n + 0.12 + 0.11/√n) D.
inline double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lam = (sn + 0.12 + 0.11 / sn) * d;
  if (lam < 0.2) return 1.0;
  double q = 0, sign = 1;
  for (int j = 1; j <= 200; ++j) {
    const double term = sign * std::exp(-2.0 * j * j * lam * lam);
    q += term;
    if (std::abs(term) < 1e-17) break;
    sign = -sign;
  }
  return std::clamp(2 * q, 0.0, 1.0);
}

struct ChiSquared {
  double statistic = 0;
  int dof = 0;
  double p_value = 1;
};

inline double chi_squared_pvalue(double stat, int dof) {
  if (dof < 1) throw InvalidInput("chi-squared needs at least one degree of freedom");
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), std::max(0.0, stat)));
}

struct MeanError {
  double mean = 0;
  double std_error = 0;
};

// Mean and standard error of per-sample values, reduced pairwise.
inline MeanError mean_stderr(const std::vector<double>& v) {
  if (v.empty()) return {};
  const double n = static_cast<double>(v.size());
  const double m = pairwise_sum(v) / n;
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - m) * (v[i] - m);
  const double var = v.size() > 1 ? pairwise_sum(sq) / (n - 1) : 0.0;
  return {m, std::sqrt(var / n)};
}

}  // namespace bgq
