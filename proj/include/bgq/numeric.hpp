#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "bgq/errors.hpp"

namespace bgq {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

// n! exactly for n <= 20 (held in 64-bit integers), floating beyond.
inline double factorial(int n) {
  if (n < 0) throw DomainError("factorial of a negative integer");
  static const std::array<std::uint64_t, 21> exact = [] {
    std::array<std::uint64_t, 21> t{};
    t[0] = 1;
    for (std::uint64_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] * i;
    return t;
  }();
  if (n <= 20) return static_cast<double>(exact[static_cast<std::size_t>(n)]);
  return std::tgamma(static_cast<double>(n) + 1.0);
}

// Deterministic pairwise summation; result is independent of thread layout.
template <class T>
T pairwise_sum(std::span<const T> v) {
  if (v.empty()) return T{};
  if (v.size() <= 8) {
    T s = v[0];
    for (std::size_t i = 1; i < v.size(); ++i) s += v[i];
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

template <class T>
T pairwise_sum(const std::vector<T>& v) {
  return pairwise_sum(std::span<const T>(v.data(), v.size()));
}

// Nodes/weights of the 20-point Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> x, w;
};

inline const GaussRule& gauss20() {
  static const GaussRule rule = [] {
    using G = boost::math::quadrature::gauss<double, 20>;
    const auto a = G::abscissa();
    const auto w = G::weights();
    GaussRule r;
    for (std::size_t i = a.size(); i-- > 0;) {
      r.x.push_back(-a[i]);
      r.w.push_back(w[i]);
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      r.x.push_back(a[i]);
      r.w.push_back(w[i]);
    }
    return r;
  }();
  return rule;
}

// Composite Gauss-Legendre nodes over the panel breakpoints `edges`.
struct QuadGrid {
  std::vector<double> x, w;
};

inline QuadGrid composite_grid(const std::vector<double>& edges) {
  const auto& g = gauss20();
  QuadGrid q;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double a = edges[p], b = edges[p + 1];
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      q.x.push_back(c + h * g.x[i]);
      q.w.push_back(h * g.w[i]);
    }
  }
  return q;
}

inline QuadGrid uniform_grid(double a, double b, int panels) {
  std::vector<double> e(static_cast<std::size_t>(panels) + 1);
  for (int i = 0; i <= panels; ++i) e[static_cast<std::size_t>(i)] = a + (b - a) * i / panels;
  return composite_grid(e);
}

// Panels that are uniform on [0, a] and geometric on [a, b].
inline QuadGrid graded_grid(double a, double b, int uniform_panels, int per_decade) {
  std::vector<double> e;
  for (int i = 0; i <= uniform_panels; ++i) e.push_back(a * i / uniform_panels);
  if (b > a) {
    const int n = std::max(1, static_cast<int>(std::ceil(per_decade * std::log10(b / a))));
    for (int i = 1; i <= n; ++i) e.push_back(a * std::pow(b / a, static_cast<double>(i) / n));
  }
  return composite_grid(e);
}

inline double norm2(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace bgq
