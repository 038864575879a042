#pragma once

#include <cmath>
#include <complex>

#include "bgq/errors.hpp"
#include "bgq/numeric.hpp"

namespace bgq {

inline constexpr double kBesselDefaultCap = 30.0;

namespace detail {

#if defined(__SIZEOF_FLOAT128__)
using wide_real = __float128;
#else
using wide_real = long double;
#endif

struct WideComplex {
  wide_real re = 0, im = 0;
  WideComplex operator*(const WideComplex& o) const { return {re * o.re - im * o.im, re * o.im + im * o.re}; }
  WideComplex& operator+=(const WideComplex& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  WideComplex scaled(wide_real s) const { return {re * s, im * s}; }
  double magnitude() const { return std::hypot(static_cast<double>(re), static_cast<double>(im)); }
};

// sum_m (-q)^m / (m! (m+n)!) evaluated with wide accumulators.
inline cplx scaled_series_wide(int n, cplx q) {
  WideComplex mq{-static_cast<wide_real>(q.real()), -static_cast<wide_real>(q.imag())};
  wide_real f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  WideComplex term{1 / f, 0};
  WideComplex sum = term;
  const double aq = std::abs(q);
  for (int m = 1; m < 2000; ++m) {
    term = (term * mq).scaled(static_cast<wide_real>(1) / (static_cast<wide_real>(m) * static_cast<wide_real>(m + n)));
    sum += term;
    if (m > std::sqrt(aq) && term.magnitude() < 1e-17 * sum.magnitude()) break;
    if (sum.magnitude() == 0.0 && term.magnitude() == 0.0) break;
  }
  return {static_cast<double>(sum.re), static_cast<double>(sum.im)};
}

}  // namespace detail

// J_n(z) / (z/2)^n as an entire function of q = z^2/4:
//   sum_m (-q)^m / (m! (m+n)!).
// Branch-free; used wherever only z^2 is known.
inline cplx bessel_j_scaled(int n, cplx q, double cap = kBesselDefaultCap) {
  if (n < 0) throw DomainError("bessel order must be non-negative");
  if (std::abs(q) > 0.25 * cap * cap) throw DomainError("bessel argument beyond the cancellation cap");
  cplx term = 1.0 / factorial(n);
  cplx sum = term;
  double abs_sum = std::abs(term);
  const double aq = std::abs(q);
  for (int m = 1; m < 2000; ++m) {
    term *= -q / (static_cast<double>(m) * (m + n));
    sum += term;
    abs_sum += std::abs(term);
    if (m > std::sqrt(aq) && std::abs(term) < 1e-17 * std::abs(sum)) break;
    if (term == cplx(0.0)) break;
  }
  // Cancellation amplifies rounding by abs_sum/|sum|; redo in wide precision.
  if (abs_sum > 8.0 * std::abs(sum)) return detail::scaled_series_wide(n, q);
  return sum;
}

// J_n(z) = (z/2)^n sum_m (-z^2/4)^m / (m! (m+n)!).
inline cplx bessel_j(int n, cplx z, double cap = kBesselDefaultCap) {
  if (std::abs(z) > cap) throw DomainError("|z| exceeds the bessel series cap");
  const cplx h = 0.5 * z;
  cplx hn = 1.0;
  for (int i = 0; i < n; ++i) hn *= h;
  return hn * bessel_j_scaled(n, h * h, cap);
}

}  // namespace bgq
