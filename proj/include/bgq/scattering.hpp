#pragma once

// Single-site scattering for the Gaussian potential W(x) = A exp(-pi |x|^2 / s^2):
// Born terms T_n of the T-matrix, collision kernel, total cross section,
// optical-theorem residual, Schwartz norms and the convergence radius R.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "bgq/errors.hpp"
#include "bgq/numeric.hpp"

namespace bgq {

using Vec = std::vector<double>;

struct GaussianPotential {
  double amplitude = 1.0;  // A
  double width = 1.0;      // s
  int d = 3;

  void validate() const {
    if (!std::isfinite(amplitude)) throw InvalidInput("potential amplitude must be finite");
    if (!(width > 0.0) || !std::isfinite(width)) throw InvalidInput("potential width must be positive");
    if (d < 3) throw InvalidInput("dimension must be at least 3");
  }
  // W(x)
  double value(std::span<const double> x) const { return amplitude * std::exp(-pi * norm2(x) / (width * width)); }
  // Ŵ as a function of |y|^2
  double hat_r2(double r2) const { return amplitude * std::pow(width, d) * std::exp(-pi * width * width * r2); }
};

// Ŵ(y) = ∫ W(x) e(-x.y) dx = A s^d exp(-pi s^2 |y|^2)
inline double w_hat(const GaussianPotential& p, std::span<const double> y) {
  if (static_cast<int>(y.size()) != p.d) throw InvalidInput("momentum has wrong dimension");
  return p.hat_r2(norm2(y));
}

// g^γ(y, y') = 1 / (|y|^2/2 - |y'|^2/2 + iγ)
inline cplx free_resolvent(std::span<const double> y, std::span<const double> yp, cplx gamma) {
  return 1.0 / (0.5 * norm2(y) - 0.5 * norm2(yp) + I * gamma);
}

struct ThetaQuadrature {
  double tol = 1e-10;      // relative truncation target for the θ tail
  double theta_max = 0.0;  // 0 = derive from the tail bound
  int per_decade = 6;      // geometric panels per decade beyond the core
};

// Chebyshev interpolant of c -> T(p ω, p e_1) with c = cos angle, for one speed p.
class OnShellTable {
 public:
  OnShellTable() = default;
  OnShellTable(const std::function<cplx(double)>& f, double tol, int n_min = 64, int n_max = 512) {
    for (int n = n_min;; n *= 2) {
      build(f, n);
      double head = 0, tail = 0;
      for (std::size_t j = 0; j < c_.size(); ++j) {
        double& slot = j + 8 < c_.size() ? head : tail;
        slot = std::max(slot, std::abs(c_[j]));
      }
      if (tail <= tol * std::max(head, 1e-300) || n >= n_max) {
        converged_ = tail <= tol * std::max(head, 1e-300);
        break;
      }
    }
  }
  cplx operator()(double c) const {
    // Clenshaw
    cplx b1 = 0, b2 = 0;
    for (std::size_t j = c_.size(); j-- > 1;) {
      const cplx b0 = 2.0 * c * b1 - b2 + c_[j];
      b2 = b1;
      b1 = b0;
    }
    return c * b1 - b2 + c_[0];
  }
  bool converged() const { return converged_; }
  std::size_t nodes() const { return c_.size(); }

 private:
  void build(const std::function<cplx(double)>& f, int n) {
    std::vector<cplx> v(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) v[static_cast<std::size_t>(j)] = f(std::cos(pi * (j + 0.5) / n));
    c_.assign(static_cast<std::size_t>(n), 0.0);
    for (int m = 0; m < n; ++m) {
      cplx s = 0;
      for (int j = 0; j < n; ++j) s += v[static_cast<std::size_t>(j)] * std::cos(pi * m * (j + 0.5) / n);
      c_[static_cast<std::size_t>(m)] = s * ((m == 0 ? 1.0 : 2.0) / n);
    }
  }
  std::vector<cplx> c_;
  bool converged_ = false;
};

namespace detail {

struct CacheKey {
  std::array<double, 10> params;  // model parameters the entry belongs to
  std::uint64_t speed;
  bool operator==(const CacheKey&) const = default;
};

struct CacheKeyHash {
  std::size_t operator()(const CacheKey& k) const {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a over the raw words
    auto mix = [&](std::uint64_t w) {
      for (int i = 0; i < 8; ++i) {
        h ^= (w >> (8 * i)) & 0xff;
        h *= 1099511628211ull;
      }
    };
    for (double v : k.params) mix(std::bit_cast<std::uint64_t>(v));
    mix(k.speed);
    return static_cast<std::size_t>(h);
  }
};

struct ScatterCache {
  std::shared_mutex mu;
  std::unordered_map<CacheKey, double, CacheKeyHash> sigma_tot;
  std::unordered_map<CacheKey, std::shared_ptr<const OnShellTable>, CacheKeyHash> tables;
  std::unordered_map<CacheKey, double, CacheKeyHash> sigma_max;
};

// Speeds are cached on a grid of relative spacing 2^-44; values are always
// computed at the grid representative so results do not depend on call order.
inline std::uint64_t speed_key(double p) { return std::bit_cast<std::uint64_t>(p) >> 8; }
inline double speed_of_key(std::uint64_t k) { return std::bit_cast<double>(k << 8); }

template <class Map, class F>
auto cached(std::shared_mutex& mu, Map& map, const CacheKey& key, F&& compute) {
  {
    std::shared_lock lk(mu);
    auto it = map.find(key);
    if (it != map.end()) return it->second;
  }
  auto v = compute();
  std::unique_lock lk(mu);
  return map.emplace(key, std::move(v)).first->second;
}

}  // namespace detail

class ScatteringModel {
 public:
  GaussianPotential potential;
  double lambda = 0.1;
  int born_order = 1;  // N, 1..3
  cplx gamma = 0.0;    // Re γ >= 0; 0 is on-shell
  ThetaQuadrature quad;

  ScatteringModel() = default;
  ScatteringModel(GaussianPotential p, double lam, int order, cplx g = 0.0, ThetaQuadrature q = {})
      : potential(p), lambda(lam), born_order(order), gamma(g), quad(q) {
    validate();
  }

  void validate() const {
    potential.validate();
    if (!std::isfinite(lambda)) throw InvalidInput("coupling must be finite");
    if (born_order < 1 || born_order > 3) throw InvalidInput("born_order must be 1, 2 or 3");
    if (gamma.real() < 0.0) throw InvalidInput("Re gamma must be non-negative");
    if (!(quad.tol > 0.0)) throw InvalidInput("theta tolerance must be positive");
  }
  int d() const { return potential.d; }

  // Cross-section quantities (on-shell, radial potential) below.
  double sigma_tot(double p) const;
  double sigma(double p, double cos_angle) const;  // σ(p e -> p ω), cos_angle = e.ω
  double sigma_max(double p) const;                // max over angles
  cplx on_shell_t(double p, double cos_angle) const;

  void clear_cache() { cache_ = std::make_shared<detail::ScatterCache>(); }

 private:
  // Copies share one cache; entries are keyed by the parameters they were computed with.
  detail::CacheKey key(double p) const {
    return {{potential.amplitude, potential.width, static_cast<double>(potential.d), lambda,
             static_cast<double>(born_order), gamma.real(), gamma.imag(), quad.tol, quad.theta_max, static_cast<double>(quad.per_decade)},
            detail::speed_key(p)};
  }
  std::shared_ptr<detail::ScatterCache> cache_ = std::make_shared<detail::ScatterCache>();
};

namespace detail {

// θ-contour: θ = dir·τ with τ >= 0. Rotating by ±π/4 turns the oscillating
// factor e(θε) into exponential decay e^{-κτ}; amin bounds |2s^2 + iθ| below.
struct ThetaRay {
  cplx dir = 1.0;
  double kappa = 0;
  double amin = 0;
};

inline ThetaRay theta_ray(cplx eps, double s2) {
  ThetaRay r;
  const double h = std::sqrt(0.5);
  if (eps.real() > 0) {
    r.dir = cplx(h, h);
    r.kappa = 2 * pi * (eps.real() + eps.imag()) * h;
    r.amin = std::sqrt(2.0) * s2;
  } else if (eps.real() < 0) {
    r.dir = cplx(h, -h);
    r.kappa = 2 * pi * (-eps.real() + eps.imag()) * h;
    r.amin = 2 * s2;
  } else {
    r.dir = 1.0;
    r.kappa = 2 * pi * eps.imag();
    r.amin = 2 * s2;
  }
  return r;
}

// Smallest Θ with envelope tail ∫_Θ^∞ |integrand| below tol times the integrand scale.
inline double theta_cutoff(const ThetaRay& ray, double s2, int d, double quad_exponent, double tol) {
  if (ray.kappa <= 0) return 10.0 * std::pow(tol, -2.0 / (d - 2));
  const double growth = std::exp(std::min(quad_exponent / ray.amin, 700.0));
  double th = 4 * s2;
  for (int it = 0; it < 4000; ++it) {
    const double env = std::pow(std::max(ray.amin, th * std::sqrt(0.5)) / (2 * s2), -0.5 * d) * growth;
    if (env * std::exp(-ray.kappa * th) / ray.kappa <= tol * 1e-2 * std::max(1.0, s2)) return th;
    th *= 1.25;
  }
  return th;
}

inline QuadGrid theta_grid(double theta, double s2, double kappa, int per_decade) {
  const double core = std::min(4 * s2, theta);
  double width = 0.25 * s2;
  if (kappa > 0) width = std::min(width, 2.0 / kappa);
  const int panels = std::max(1, static_cast<int>(std::ceil(core / width)));
  return graded_grid(core, theta, panels, per_decade);
}

// sqrt of det(2s^2 + iθ_j, -s^2 tridiagonal 2x2), continued from θ = 0
// along the segment t(θ1, θ2), t in [0, 1]; det(t) = c + b t + a t^2.
inline cplx sqrt_det3(cplx th1, cplx th2, double s2) {
  const cplx a = -th1 * th2;
  const cplx b = 2.0 * I * s2 * (th1 + th2);
  const double c = 3 * s2 * s2;
  if (a == cplx(0.0)) return std::sqrt(c) * std::sqrt(1.0 + b / c);
  const cplx root = std::sqrt(b * b - 4.0 * a * c);
  const double sgn = (std::conj(b) * root).real() >= 0 ? 1.0 : -1.0;
  const cplx q = -0.5 * (b + sgn * root);
  // roots r1 = q/a, r2 = c/q; det(1)/c = (1 - 1/r1)(1 - 1/r2)
  return std::sqrt(c) * std::sqrt(1.0 - a / q) * std::sqrt(1.0 - q / c);
}

inline void check_dims(const ScatteringModel& m, std::span<const double> a, std::span<const double> b) {
  if (static_cast<int>(a.size()) != m.d() || static_cast<int>(b.size()) != m.d())
    throw InvalidInput("momentum has wrong dimension");
}

inline double required_theta(const ScatteringModel& m, const ThetaRay& ray, double s2, double quad_exponent) {
  const double need = theta_cutoff(ray, s2, m.d(), quad_exponent, m.quad.tol);
  if (m.quad.theta_max > 0) {
    if (m.quad.theta_max < need)
      throw TailBoundError("theta_max " + std::to_string(m.quad.theta_max) + " below the required " +
                           std::to_string(need) + " for tolerance " + std::to_string(m.quad.tol));
    return m.quad.theta_max;
  }
  return need;
}

inline cplx t2(const ScatteringModel& m, std::span<const double> y0, std::span<const double> y2) {
  const auto& P = m.potential;
  const double s2 = P.width * P.width, d = P.d;
  const cplx eps = 0.5 * norm2(y0) + I * m.gamma;
  double bb = 0;  // |b|^2, b = s^2 (y0 + y2)
  for (std::size_t i = 0; i < y0.size(); ++i) bb += (y0[i] + y2[i]) * (y0[i] + y2[i]);
  bb *= s2 * s2;
  const double c0 = P.amplitude * P.amplitude * std::pow(P.width, 2 * d) * std::exp(-pi * s2 * (norm2(y0) + norm2(y2)));
  const ThetaRay ray = theta_ray(eps, s2);
  const double theta = required_theta(m, ray, s2, pi * bb);
  const QuadGrid g = theta_grid(theta, s2, ray.kappa, m.quad.per_decade);
  std::vector<cplx> terms(g.x.size());
  for (std::size_t q = 0; q < g.x.size(); ++q) {
    const cplx th = ray.dir * g.x[q];
    const cplx M = 2 * s2 + I * th;
    terms[q] = g.w[q] * std::exp(-0.5 * d * std::log(M) + pi * bb / M + 2 * pi * I * th * eps);
  }
  return -2.0 * pi * I * c0 * ray.dir * pairwise_sum(terms);
}

inline cplx t3(const ScatteringModel& m, std::span<const double> y0, std::span<const double> y3) {
  const auto& P = m.potential;
  const double s2 = P.width * P.width, d = P.d;
  const cplx eps = 0.5 * norm2(y0) + I * m.gamma;
  const double s4 = s2 * s2;
  const double b11 = s4 * norm2(y0), b22 = s4 * norm2(y3), b12 = s4 * dot(y0, y3);
  const double c0 =
      std::pow(P.amplitude, 3) * std::pow(P.width, 3 * d) * std::exp(-pi * s2 * (norm2(y0) + norm2(y3)));
  const ThetaRay ray = theta_ray(eps, s2);
  const double theta = required_theta(m, ray, s2, pi * (b11 + b22 + 2 * std::abs(b12)));
  const QuadGrid g = theta_grid(theta, s2, ray.kappa, m.quad.per_decade);
  const std::size_t n = g.x.size();
  std::vector<cplx> rows(n);
  std::vector<cplx> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    const cplx th1 = ray.dir * g.x[i];
    const cplx M11 = 2 * s2 + I * th1;
    for (std::size_t j = 0; j < n; ++j) {
      const cplx th2 = ray.dir * g.x[j];
      const cplx M22 = 2 * s2 + I * th2;
      const cplx det = M11 * M22 - s4;
      const cplx form = (M22 * b11 + 2 * s2 * b12 + M11 * b22) / det;
      const cplx sq = sqrt_det3(th1, th2, s2);
      row[j] = g.w[j] * std::exp(-d * std::log(sq) + pi * form + 2 * pi * I * (th1 + th2) * eps);
    }
    rows[i] = g.w[i] * pairwise_sum(row);
  }
  return -4.0 * pi * pi * c0 * ray.dir * ray.dir * pairwise_sum(rows);
}

}  // namespace detail

// T_n^γ(y0, yn) for n = 1, 2, 3 (θ-representation, Gaussian inner integrals in closed form).
inline cplx t_term(const ScatteringModel& m, int n, std::span<const double> y0, std::span<const double> yn) {
  detail::check_dims(m, y0, yn);
  std::vector<double> diff(y0.size());
  switch (n) {
    case 1:
      for (std::size_t i = 0; i < y0.size(); ++i) diff[i] = y0[i] - yn[i];
      return m.potential.hat_r2(norm2(diff));
    case 2: return detail::t2(m, y0, yn);
    case 3: return detail::t3(m, y0, yn);
    default: throw InvalidInput("Born terms are available for n = 1, 2, 3");
  }
}

// Σ_{n<=N} λ^n T_n^γ(y, y')
inline cplx t_born(const ScatteringModel& m, std::span<const double> y, std::span<const double> yp) {
  cplx s = 0, lam = 1;
  for (int n = 1; n <= m.born_order; ++n) {
    lam *= m.lambda;
    s += lam * t_term(m, n, y, yp);
  }
  return s;
}

namespace detail {

// Out momentum p·(c, sqrt(1-c^2), 0, ...), in momentum p·e_1.
inline cplx on_shell_direct(const ScatteringModel& m, double p, double c) {
  Vec out(static_cast<std::size_t>(m.d()), 0.0), in(static_cast<std::size_t>(m.d()), 0.0);
  c = std::clamp(c, -1.0, 1.0);
  out[0] = p * c;
  out[1] = p * std::sqrt(std::max(0.0, 1 - c * c));
  in[0] = p;
  ScatteringModel on = m;
  on.gamma = 0.0;
  return t_born(on, out, in);
}

inline double sphere_area(int dim) {  // |S^{dim-1}|
  return 2 * std::pow(pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

// Composite Gauss-Legendre panels in the polar angle; the kernel narrows like 1/(s p).
inline QuadGrid polar_grid(double s, double p) {
  const int panels = 16 + static_cast<int>(std::ceil(8 * s * p));
  return uniform_grid(0.0, pi, panels);
}

}  // namespace detail

inline cplx ScatteringModel::on_shell_t(double p, double c) const {
  if (born_order == 1) {
    const double s2 = potential.width * potential.width;
    return lambda * potential.amplitude * std::pow(potential.width, potential.d) *
           std::exp(-2 * pi * s2 * p * p * (1 - c));
  }
  const auto k = key(p);
  auto& store = *cache_;
  auto table = detail::cached(store.mu, store.tables, k, [&] {
    const double pq = detail::speed_of_key(k.speed);
    return std::make_shared<const OnShellTable>([&](double x) { return detail::on_shell_direct(*this, pq, x); },
                                                1e-12);
  });
  return (*table)(std::clamp(c, -1.0, 1.0));
}

// σ(p e -> p ω) = 4π^2 |T(p ω, p e)|^2 p^{d-2}
inline double ScatteringModel::sigma(double p, double c) const {
  return 4 * pi * pi * std::norm(on_shell_t(p, c)) * std::pow(p, potential.d - 2);
}

inline double ScatteringModel::sigma_tot(double p) const {
  if (!(p > 0)) throw DomainError("cross section needs non-zero momentum");
  const auto k = key(p);
  auto& store = *cache_;
  return detail::cached(store.mu, store.sigma_tot, k, [&] {
    const double pq = detail::speed_of_key(k.speed);
    const QuadGrid g = detail::polar_grid(potential.width, pq);
    std::vector<double> terms(g.x.size());
    for (std::size_t i = 0; i < g.x.size(); ++i)
      terms[i] = g.w[i] * sigma(pq, std::cos(g.x[i])) * std::pow(std::sin(g.x[i]), potential.d - 2);
    return detail::sphere_area(potential.d - 1) * pairwise_sum(terms);
  });
}

inline double ScatteringModel::sigma_max(double p) const {
  const auto k = key(p);
  auto& store = *cache_;
  return detail::cached(store.mu, store.sigma_max, k, [&] {
    const double pq = detail::speed_of_key(k.speed);
    double mx = 0;
    for (int i = 0; i <= 1024; ++i) mx = std::max(mx, sigma(pq, std::cos(pi * i / 1024)));
    return mx;
  });
}

// σ(y, ω) for outgoing direction ω (unit vector); energy delta integrated out.
inline double sigma_kernel(const ScatteringModel& m, std::span<const double> y, std::span<const double> omega) {
  detail::check_dims(m, y, omega);
  const double p = std::sqrt(norm2(y));
  if (!(p > 0)) throw DomainError("collision kernel needs non-zero momentum");
  if (std::abs(norm2(omega) - 1.0) > 1e-9) throw InvalidInput("direction must be a unit vector");
  return m.sigma(p, dot(y, omega) / p);
}

inline double sigma_tot(const ScatteringModel& m, std::span<const double> y) {
  if (static_cast<int>(y.size()) != m.d()) throw InvalidInput("momentum has wrong dimension");
  return m.sigma_tot(std::sqrt(norm2(y)));
}

// Im T(y, y) + Σ_tot(y)/(4π) truncated at λ^2: λ^2 Im T_2 against first-Born Σ_tot.
// With `third_order_one_side`, λ^3 Im T_3 is added on the T side only.
inline double optical_residual(const ScatteringModel& m, std::span<const double> y, bool third_order_one_side = false) {
  if (m.gamma != cplx(0.0)) throw InvalidInput("optical theorem needs gamma = 0");
  if (m.born_order < 2) throw InvalidInput("optical residual needs born_order >= 2 for a consistent truncation");
  if (third_order_one_side && m.born_order < 3) throw InvalidInput("third-order term requested with born_order < 3");
  if (m.lambda == 0.0) return 0.0;
  const double p = std::sqrt(norm2(y));
  ScatteringModel first = m;
  first.born_order = 1;
  double im = m.lambda * m.lambda * t_term(m, 2, y, y).imag();
  if (third_order_one_side) im += m.lambda * m.lambda * m.lambda * t_term(m, 3, y, y).imag();
  return im + first.sigma_tot(p) / (4 * pi);
}

// ---------------------------------------------------------------------------
// Schwartz norm ||W||_{M,N,1} = sup_{|α|<=M, |β|<=N} ||x^β D^α W||_{L^1}, D = (2πi)^{-1} ∂.

namespace detail {

// Coefficients of the probabilists' Hermite polynomial He_m.
inline std::vector<double> hermite_he(int m) {
  std::vector<double> a{1.0}, b{0.0, 1.0};
  if (m == 0) return a;
  for (int k = 1; k < m; ++k) {
    std::vector<double> c(static_cast<std::size_t>(k) + 2, 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) c[i + 1] += b[i];
    for (std::size_t i = 0; i < a.size(); ++i) c[i] -= k * a[i];
    a = std::move(b);
    b = std::move(c);
  }
  return b;
}

inline std::vector<double> hermite_roots(int m) {
  if (m == 0) return {};
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i + 1 < m; ++i) J(i, i + 1) = J(i + 1, i) = std::sqrt(static_cast<double>(i + 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  std::vector<double> r(es.eigenvalues().data(), es.eigenvalues().data() + m);
  std::sort(r.begin(), r.end());
  return r;
}

// I_j(a, c) = ∫_a^c u^j e^{-u^2/2} du for j = 0..jmax; infinite ends allowed.
inline std::vector<double> gauss_moments(double a, double c, int jmax) {
  auto e = [](double x) { return std::isinf(x) ? 0.0 : std::exp(-0.5 * x * x); };
  auto pw = [](double x, int k) { return k == 0 ? 1.0 : std::pow(x, k); };
  auto edge = [&](double x, int k) { return std::isinf(x) ? 0.0 : pw(x, k) * e(x); };
  auto erf_ = [](double x) { return std::isinf(x) ? (x > 0 ? 1.0 : -1.0) : std::erf(x / std::sqrt(2.0)); };
  std::vector<double> I(static_cast<std::size_t>(jmax) + 1, 0.0);
  I[0] = std::sqrt(pi / 2) * (erf_(c) - erf_(a));
  if (jmax >= 1) I[1] = e(a) - e(c);
  for (int j = 2; j <= jmax; ++j)
    I[static_cast<std::size_t>(j)] = edge(a, j - 1) - edge(c, j - 1) + (j - 1) * I[static_cast<std::size_t>(j) - 2];
  return I;
}

// ∫ |u^b He_m(u)| e^{-u^2/2} du, exactly by sign-constant pieces.
inline double abs_hermite_moment(int m, int b) {
  const auto he = hermite_he(m);
  std::vector<double> poly(static_cast<std::size_t>(b) + he.size(), 0.0);
  for (std::size_t i = 0; i < he.size(); ++i) poly[i + static_cast<std::size_t>(b)] = he[i];
  auto eval = [&](double x) {
    double s = 0;
    for (std::size_t i = poly.size(); i-- > 0;) s = s * x + poly[i];
    return s;
  };
  std::vector<double> cuts = hermite_roots(m);
  if (b % 2 == 1) cuts.push_back(0.0);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double x, double y) { return std::abs(x - y) < 1e-12; }),
             cuts.end());
  std::vector<double> edges{-INFINITY};
  edges.insert(edges.end(), cuts.begin(), cuts.end());
  edges.push_back(INFINITY);
  double total = 0;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double a = edges[k], c = edges[k + 1];
    const double mid = std::isinf(a) ? (std::isinf(c) ? 0.0 : c - 1) : (std::isinf(c) ? a + 1 : 0.5 * (a + c));
    const auto I = gauss_moments(a, c, static_cast<int>(poly.size()) - 1);
    double v = 0;
    for (std::size_t j = 0; j < poly.size(); ++j) v += poly[j] * I[j];
    total += eval(mid) >= 0 ? v : -v;
  }
  return total;
}

// ||x^b D^m exp(-π x^2/s^2)||_{L^1(R)}
inline double axis_norm(double s, int m, int b) {
  const double k = std::sqrt(2 * pi) / s;  // u = k x
  return std::pow(2 * pi, -m) * std::pow(k, m) * std::pow(1 / k, b + 1) * abs_hermite_moment(m, b);
}

inline void for_each_multi(int d, int max_total, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> a(static_cast<std::size_t>(d), 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == d) {
      f(a);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      a[static_cast<std::size_t>(i)] = v;
      rec(i + 1, left - v);
    }
  };
  rec(0, max_total);
}

}  // namespace detail

inline double schwartz_norm(const GaussianPotential& pot, int M, int N, int p = 1) {
  pot.validate();
  if (p != 1) throw InvalidInput("only the L^1 Schwartz norm (p = 1) is supported");
  if (M < 0 || N < 0) throw InvalidInput("norm orders must be non-negative");
  std::vector<std::vector<double>> v(static_cast<std::size_t>(M) + 1, std::vector<double>(static_cast<std::size_t>(N) + 1));
  for (int a = 0; a <= M; ++a)
    for (int b = 0; b <= N; ++b) v[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = detail::axis_norm(pot.width, a, b);
  double best = 0;
  detail::for_each_multi(pot.d, M, [&](const std::vector<int>& alpha) {
    detail::for_each_multi(pot.d, N, [&](const std::vector<int>& beta) {
      double prod = std::abs(pot.amplitude);
      for (int i = 0; i < pot.d; ++i)
        prod *= v[static_cast<std::size_t>(alpha[static_cast<std::size_t>(i)])][static_cast<std::size_t>(beta[static_cast<std::size_t>(i)])];
      best = std::max(best, prod);
    });
  });
  return best;
}

// ∫_R <θ>^{-d/2} dθ with <θ> = sqrt(1 + θ^2)
inline double bracket_integral(int d) {
  if (d < 3) throw InvalidInput("the bracket integral diverges for d < 3");
  return std::sqrt(pi) * std::tgamma((d - 2) / 4.0) / std::tgamma(d / 4.0);
}

struct RadiusEstimate {
  double value = 0;
  double constant = 1.0;  // the existential constant, set to 1
  bool modulo_constant = true;
};

// R = (2π C <t> ||W||_{2d+2,d+1,1} max{1, ∫<θ>^{-d/2}})^{-1}, reported with C = 1.
inline RadiusEstimate radius_R(double t, double norm, int d) {
  if (!(t >= 0) || !(norm > 0)) throw InvalidInput("radius needs t >= 0 and a positive norm");
  RadiusEstimate r;
  r.value = 1.0 / (2 * pi * r.constant * std::sqrt(1 + t * t) * norm * std::max(1.0, bracket_integral(d)));
  return r;
}

inline RadiusEstimate radius_R(double t, const GaussianPotential& pot) {
  return radius_R(t, schwartz_norm(pot, 2 * pot.d + 2, pot.d + 1), pot.d);
}

}  // namespace bgq
