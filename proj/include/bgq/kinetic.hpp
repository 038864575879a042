#pragma once

// Collision series of the linear Boltzmann equation (LB) and of the limit
// process (NEW): collision densities, the partition-sum oracle, the LB chain
// sampler, Monte Carlo pairings <b, f^(k)> and deterministic quadratures.
//
// Leg labels follow the collision series: y_1 is the final momentum and y_k
// the initial one. Chains produced by the sampler are stored in time order
// (initial leg first). Energy-shell deltas are integrated out: every kernel
// carries the surface factor p^{d-2}, and densities are angular densities.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bgq/errors.hpp"
#include "bgq/gmatrix.hpp"
#include "bgq/numeric.hpp"
#include "bgq/parallel.hpp"
#include "bgq/partitions.hpp"
#include "bgq/rng.hpp"
#include "bgq/scattering.hpp"
#include "bgq/stats.hpp"

namespace bgq {

enum class Series { LB, NEW };

inline const char* to_string(Series s) { return s == Series::LB ? "LB" : "NEW"; }

// a(x, y) = A exp(-|x - x0|^2 / (2 σx^2) - |y - y0|^2 / (2 σy^2))
struct PhaseSpaceSymbol {
  Vec x0, y0;
  double sigma_x = 1.0, sigma_y = 1.0, amplitude = 1.0;

  int d() const { return static_cast<int>(x0.size()); }
  void validate(int dim) const {
    if (static_cast<int>(x0.size()) != dim || static_cast<int>(y0.size()) != dim)
      throw InvalidInput("symbol centre has wrong dimension");
    if (!(sigma_x > 0) || !(sigma_y > 0)) throw InvalidInput("symbol widths must be positive");
    if (!std::isfinite(amplitude)) throw InvalidInput("symbol amplitude must be finite");
  }
  double x_factor(std::span<const double> x) const {
    double r2 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) r2 += (x[i] - x0[i]) * (x[i] - x0[i]);
    return std::exp(-0.5 * r2 / (sigma_x * sigma_x));
  }
  double y_factor(std::span<const double> y) const {
    double r2 = 0;
    for (std::size_t i = 0; i < y.size(); ++i) r2 += (y[i] - y0[i]) * (y[i] - y0[i]);
    return std::exp(-0.5 * r2 / (sigma_y * sigma_y));
  }
  double operator()(std::span<const double> x, std::span<const double> y) const {
    return amplitude * x_factor(x) * y_factor(y);
  }
  // ∫|a| dx dy
  double l1_norm() const {
    return std::abs(amplitude) * std::pow(2 * pi * sigma_x * sigma_x, 0.5 * d()) *
           std::pow(2 * pi * sigma_y * sigma_y, 0.5 * d());
  }
  // Draws (x, y) with density |a| / ||a||.
  void sample(Rng& rng, Vec& x, Vec& y) const {
    x.resize(x0.size());
    y.resize(y0.size());
    for (std::size_t i = 0; i < x0.size(); ++i) x[i] = x0[i] + sigma_x * rng.normal();
    for (std::size_t i = 0; i < y0.size(); ++i) y[i] = y0[i] + sigma_y * rng.normal();
  }
};

// ∫ exp(-|x|^2/(2 sa^2)) exp(-|x - c|^2/(2 sb^2)) dx over R^d, with |c|^2 = dist2.
inline double gauss_overlap(int d, double sa, double sb, double dist2) {
  const double s2 = sa * sa + sb * sb;
  return std::pow(2 * pi * sa * sa * sb * sb / s2, 0.5 * d) * std::exp(-0.5 * dist2 / s2);
}

// <b, a> = ∫ a b dx dy
inline double pairing(const PhaseSpaceSymbol& a, const PhaseSpaceSymbol& b) {
  double dx = 0, dy = 0;
  for (int i = 0; i < a.d(); ++i) {
    dx += (a.x0[i] - b.x0[i]) * (a.x0[i] - b.x0[i]);
    dy += (a.y0[i] - b.y0[i]) * (a.y0[i] - b.y0[i]);
  }
  return a.amplitude * b.amplitude * gauss_overlap(a.d(), a.sigma_x, b.sigma_x, dx) *
         gauss_overlap(a.d(), a.sigma_y, b.sigma_y, dy);
}

struct DensityValue {
  double value = 0;
  double g_abs2 = 1;        // |g_lm|^2 (NEW) or 1 (LB)
  double damping = 1;       // prod exp(-u_i Σ_tot)
  double kernel = 1;        // prod 4π^2 |T|^2 (LB) or 1 (NEW)
  double shell_weight = 1;  // p^{(d-2)(k-1)}
};

struct CollisionChain {
  double speed = 0;
  Vec x_start;
  std::vector<Vec> momenta;  // time order: momenta[0] is the initial leg
  std::vector<double> times;  // flight time of each leg; sums to t
  std::size_t proposals = 0;  // direction proposals drawn by the rejection sampler

  // Series labels: the final leg is y_ℓ with ℓ = 1, the initial leg is y_m with m = k.
  int final_label() const { return 1; }
  int initial_label() const { return legs(); }
  // momenta in series order y_1 (final) ... y_k (initial)
  std::vector<Vec> series_order() const { return {momenta.rbegin(), momenta.rend()}; }

  int legs() const { return static_cast<int>(momenta.size()); }
  int collisions() const { return legs() - 1; }
  Vec position() const {
    Vec x = x_start;
    for (std::size_t i = 0; i < momenta.size(); ++i)
      for (std::size_t c = 0; c < x.size(); ++c) x[c] += times[i] * momenta[i][c];
    return x;
  }
};

namespace detail {

inline double shell_speed(const std::vector<Vec>& y, int d) {
  if (y.empty()) throw InvalidInput("need at least one momentum");
  double p = 0;
  for (const auto& v : y) {
    if (static_cast<int>(v.size()) != d) throw InvalidInput("momentum has wrong dimension");
    const double q = std::sqrt(norm2(v));
    if (&v == &y.front()) p = q;
    else if (std::abs(q - p) > 1e-9 * std::max(1.0, p)) throw InvalidInput("off-shell input: momenta differ in norm");
  }
  if (!(p > 0)) throw DomainError("momenta must be non-zero");
  return p;
}

inline void check_times(std::span<const double> u, std::size_t k) {
  if (u.size() != k) throw InvalidInput("need one flight time per leg");
  for (double x : u)
    if (!(x >= 0) || !std::isfinite(x)) throw InvalidInput("flight times must be finite and non-negative");
}

inline CMatrix w_from_t(const CMatrix& T) {
  CMatrix W = -2.0 * pi * I * T;
  for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, i) = 0.0;
  return W;
}

}  // namespace detail

// T(y_i, y_j) for on-shell momenta; the diagonal is left at zero.
inline CMatrix on_shell_t_matrix(const ScatteringModel& m, const std::vector<Vec>& y) {
  const double p = detail::shell_speed(y, m.d());
  const auto k = static_cast<Eigen::Index>(y.size());
  CMatrix T = CMatrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      if (i != j) T(i, j) = m.on_shell_t(p, dot(y[static_cast<std::size_t>(i)], y[static_cast<std::size_t>(j)]) / (p * p));
  return T;
}

enum class GChoice {
  Analytic,     // Bessel closed form for k = 2, contour quadrature for k >= 3 (series if the contour estimate is poor)
  SeriesFirst,  // Bessel for k = 2, Borel series for k >= 3 with contour fallback
};

inline GMatrix g_of(const CMatrix& T, std::span<const double> u, GChoice choice = GChoice::Analytic) {
  const int k = static_cast<int>(T.rows());
  if (k == 1) {
    GMatrix g;
    g.g = CMatrix::Ones(1, 1);
    g.method = GMethod::BesselK2;
    return g;
  }
  WeightedCollisionGraph gr(detail::w_from_t(T), std::vector<double>(u.begin(), u.end()));
  if (k == 2) return g_bessel_k2(gr);
  auto series = [&]() -> std::optional<GMatrix> {
    try {
      auto s = g_series(gr);
      if (s.converged) return s;
    } catch (const CapacityError&) {
    }
    return std::nullopt;
  };
  if (choice == GChoice::SeriesFirst)
    if (auto s = series()) return *s;
  GMatrix c = g_contour(gr);
  // Rounding on the circles grows like exp(Σ u_i ρ_i); a poor self-estimate hands over to the series.
  if (choice == GChoice::Analytic && !(c.error_estimate <= 1e-10 * std::max(1.0, c.g.cwiseAbs().maxCoeff())))
    if (auto s = series()) return *s;
  return c;
}

// ---------------------------------------------------------------------------
// Densities from raw on-shell data: T (k x k, T(y_i, y_j)) and Σ_tot per leg.

inline DensityValue rho_lb_raw(std::span<const double> u, const CMatrix& T, std::span<const double> sig_tot) {
  const auto k = static_cast<std::size_t>(T.rows());
  detail::check_times(u, k);
  DensityValue r;
  double e = 0;
  for (std::size_t i = 0; i < k; ++i) e += u[i] * sig_tot[i];
  r.damping = std::exp(-e);
  for (std::size_t j = 0; j + 1 < k; ++j)
    r.kernel *= 4 * pi * pi * std::norm(T(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j + 1)));
  r.value = r.damping * r.kernel;
  return r;
}

// ℓ, m are 1-based leg labels.
inline DensityValue rho_new_raw(int l, int m, std::span<const double> u, const CMatrix& T,
                                std::span<const double> sig_tot, GChoice choice = GChoice::Analytic) {
  const int k = static_cast<int>(T.rows());
  if (l < 1 || l > k || m < 1 || m > k) throw InvalidInput("leg labels must lie in 1..k");
  detail::check_times(u, static_cast<std::size_t>(k));
  DensityValue r;
  double e = 0;
  for (int i = 0; i < k; ++i) e += u[static_cast<std::size_t>(i)] * sig_tot[static_cast<std::size_t>(i)];
  r.damping = std::exp(-e);
  r.g_abs2 = std::norm(g_of(T, u, choice)(l - 1, m - 1));
  r.value = r.damping * r.g_abs2;
  return r;
}

inline DensityValue rho_lb(int k, std::span<const double> u, const std::vector<Vec>& y, const ScatteringModel& model) {
  if (k < 1 || static_cast<int>(y.size()) != k) throw InvalidInput("need k momenta");
  const double p = detail::shell_speed(y, model.d());
  std::vector<double> sig(static_cast<std::size_t>(k), model.sigma_tot(p));
  DensityValue r = rho_lb_raw(u, on_shell_t_matrix(model, y), sig);
  r.shell_weight = std::pow(p, (model.d() - 2) * (k - 1));
  r.value *= r.shell_weight;
  return r;
}

inline DensityValue rho_new(int l, int m, int k, std::span<const double> u, const std::vector<Vec>& y,
                            const ScatteringModel& model, GChoice choice = GChoice::Analytic) {
  if (k < 1 || static_cast<int>(y.size()) != k) throw InvalidInput("need k momenta");
  const double p = detail::shell_speed(y, model.d());
  std::vector<double> sig(static_cast<std::size_t>(k), model.sigma_tot(p));
  DensityValue r = rho_new_raw(l, m, u, on_shell_t_matrix(model, y), sig, choice);
  r.shell_weight = std::pow(p, (model.d() - 2) * (k - 1));
  r.value *= r.shell_weight;
  return r;
}

// ---------------------------------------------------------------------------
// Partition-sum oracle:
//   ρ = prod e^{-u_i Σ_i} · | Σ_{n<=n_max} Σ_F T_n(ι_F(y)) prod u_i^{|F_i|-1}/(|F_i|-1)! |^2
// over non-consecutive ordered partitions with 0, n in F_1 (DIAG) or 0 in F_1, n in F_k (OFF).

enum class DensityClass { DIAG, OFF };

struct CombinatorialDensity {
  double value = 0;
  cplx amplitude = 0;       // truncated partition sum
  double damping = 1;
  double last_order = 0;    // |contribution of the largest n that has partitions|
  double tail_bound = 0;    // bound on |amplitude - full sum|
  double value_bound = 0;   // bound on |value - full value|
  std::size_t partitions = 0;
  bool tail_ok = true;      // tail_bound below tol * |amplitude|
};

namespace detail {

inline double log_add(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Σ_{n > n_max} (2π t_max)^n · Σ over surjections {0..n} -> {1..k} of prod u_i^{n_i-1}/(n_i-1)!.
// Every ordered partition in the sum is such a surjection and |T_n| <= (2π t_max)^n.
inline double partition_tail_bound(std::span<const double> u, double t_max, int n_max, int extra = 400) {
  const int k = static_cast<int>(u.size());
  const int top = n_max + extra + 1;  // largest block-size total
  // log of per-block series u^{j-1}/(j!(j-1)!), j >= 1
  std::vector<double> conv(static_cast<std::size_t>(top) + 1, -INFINITY);
  conv[0] = 0;
  for (int i = 0; i < k; ++i) {
    const double lu = std::log(std::max(u[static_cast<std::size_t>(i)], 1e-300));
    std::vector<double> next(conv.size(), -INFINITY);
    for (int a = 0; a <= top; ++a) {
      if (conv[static_cast<std::size_t>(a)] == -INFINITY) continue;
      for (int j = 1; a + j <= top; ++j) {
        const double lt = (j - 1) * lu - std::lgamma(j + 1.0) - std::lgamma(static_cast<double>(j));
        next[static_cast<std::size_t>(a + j)] = log_add(next[static_cast<std::size_t>(a + j)], conv[static_cast<std::size_t>(a)] + lt);
      }
    }
    conv = std::move(next);
  }
  const double lt = std::log(std::max(2 * pi * t_max, 1e-300));
  double tail = -INFINITY;
  for (int n = n_max + 1; n + 1 <= top; ++n)
    tail = log_add(tail, n * lt + std::lgamma(n + 2.0) + conv[static_cast<std::size_t>(n) + 1]);
  return std::exp(tail);
}

}  // namespace detail

inline CombinatorialDensity rho_combinatorial(DensityClass cls, int n_max, std::span<const double> u, const CMatrix& T,
                                              std::span<const double> sig_tot, double tol = 1e-12) {
  const int k = static_cast<int>(T.rows());
  if (k < 1 || (cls == DensityClass::OFF && k < 2)) throw InvalidInput("OFF densities need k >= 2");
  detail::check_times(u, static_cast<std::size_t>(k));
  if (n_max < 0) throw InvalidInput("n_max must be non-negative");
  const Family fam = cls == DensityClass::DIAG ? Family::CircNC : Family::BaroNC;
  CombinatorialDensity r;
  const CMatrix W = detail::w_from_t(T);
  std::vector<double> inv_fact;
  for (int j = 0; j <= n_max + 1; ++j) inv_fact.push_back(1.0 / factorial(j));
  for (int n = std::max(0, k - 1); n <= n_max; ++n) {
    cplx shell = 0;
    std::size_t count = 0;
    for_each_ordered_partition(n, k, fam, [&](const OrderedPartition& f) {
      cplx tn = 1.0;
      for (int j = 0; j < n; ++j) tn *= W(f.block_of(j), f.block_of(j + 1));
      double wgt = 1;
      for (int i = 0; i < k; ++i) {
        const int sz = static_cast<int>(f.block(i).size());
        wgt *= std::pow(u[static_cast<std::size_t>(i)], sz - 1) * inv_fact[static_cast<std::size_t>(sz - 1)];
      }
      shell += tn * wgt;
      ++count;
    });
    if (count) {
      r.partitions += count;
      r.last_order = std::abs(shell);
    }
    r.amplitude += shell;
  }
  double e = 0;
  for (int i = 0; i < k; ++i) e += u[static_cast<std::size_t>(i)] * sig_tot[static_cast<std::size_t>(i)];
  r.damping = std::exp(-e);
  r.value = r.damping * std::norm(r.amplitude);
  double tmax = 0;
  for (Eigen::Index i = 0; i < T.rows(); ++i)
    for (Eigen::Index j = 0; j < T.cols(); ++j)
      if (i != j) tmax = std::max(tmax, std::abs(T(i, j)));
  r.tail_bound = detail::partition_tail_bound(u, tmax, n_max);
  r.value_bound = r.damping * (2 * std::abs(r.amplitude) * r.tail_bound + r.tail_bound * r.tail_bound);
  r.tail_ok = r.tail_bound <= tol * std::max(std::abs(r.amplitude), 1e-300);
  return r;
}

inline CombinatorialDensity rho_combinatorial(DensityClass cls, int n_max, std::span<const double> u,
                                              const std::vector<Vec>& y, const ScatteringModel& model,
                                              double tol = 1e-12) {
  const double p = detail::shell_speed(y, model.d());
  std::vector<double> sig(y.size(), model.sigma_tot(p));
  auto r = rho_combinatorial(cls, n_max, u, on_shell_t_matrix(model, y), sig, tol);
  const double shell = std::pow(p, (model.d() - 2) * (static_cast<int>(y.size()) - 1));
  r.value *= shell;
  r.value_bound *= shell;
  return r;
}

// ---------------------------------------------------------------------------
// LB chain sampler

namespace detail {

// Draws an outgoing direction with density σ(p ŷ -> p ω)/Σ_tot by rejection from the uniform sphere.
inline Vec scatter_direction(const ScatteringModel& m, const Vec& y, double p, Rng& rng, std::size_t& proposals) {
  const double bound = 1.05 * m.sigma_max(p);
  if (!(bound > 0)) throw DomainError("collision kernel vanishes identically");
  for (;;) {
    ++proposals;
    Vec w = rng.direction(m.d());
    const double c = dot(w, y) / p;
    if (rng.uniform() * bound < m.sigma(p, c)) {
      for (auto& x : w) x *= p;
      return w;
    }
    if (proposals > 100'000'000) throw DomainError("rejection sampler made no progress");
  }
}

}  // namespace detail

// Markov chain with Exp(Σ_tot) flights and kernel-distributed directions, cut at time t.
// Stops early (returning the chain so far) once more than `max_collisions` occur.
inline CollisionChain sample_lb_chain(double t, const Vec& y0, const ScatteringModel& model, Rng& rng,
                                      int max_collisions = std::numeric_limits<int>::max(), Vec x0 = {}) {
  if (!(t > 0)) throw InvalidInput("t must be positive");
  if (static_cast<int>(y0.size()) != model.d()) throw InvalidInput("momentum has wrong dimension");
  CollisionChain ch;
  ch.speed = std::sqrt(norm2(y0));
  if (!(ch.speed > 0)) throw DomainError("initial momentum must be non-zero");
  ch.x_start = x0.empty() ? Vec(y0.size(), 0.0) : std::move(x0);
  const double rate = model.sigma_tot(ch.speed);
  double left = t;
  ch.momenta.push_back(y0);
  for (;;) {
    const double u = rate > 0 ? rng.exponential(rate) : INFINITY;
    if (u >= left) {
      ch.times.push_back(left);
      break;
    }
    ch.times.push_back(u);
    left -= u;
    if (ch.collisions() >= max_collisions) {
      ch.momenta.push_back(detail::scatter_direction(model, ch.momenta.back(), ch.speed, rng, ch.proposals));
      ch.times.push_back(0.0);  // marks an overflow chain
      break;
    }
    ch.momenta.push_back(detail::scatter_direction(model, ch.momenta.back(), ch.speed, rng, ch.proposals));
  }
  return ch;
}

// ---------------------------------------------------------------------------
// Monte Carlo pairing <b, f^(k)>

struct KTerm {
  int k = 0;
  std::size_t chains = 0;  // chains with exactly k - 1 collisions
  double lb = 0, lb_error = 0;
  double new_ = 0, new_error = 0;
  double return_mass = 0, return_error = 0;  // NEW diagonal term with b = 1
  double mass_lb = 0, mass_new = 0;          // <1, f^(k)>
  double ess_fraction = 1;                   // effective sample size of NEW weights / chains
};

struct PairEstimate {
  Series series = Series::LB;
  double estimate = 0, std_error = 0;
  double mass = 0, mass_error = 0;  // Σ_k <1, f^(k)> for the chosen series
  double acceptance = 1;            // rejection-sampler efficiency
  std::vector<KTerm> terms;
  std::vector<std::string> warnings;
};

struct PairOptions {
  std::uint64_t seed = 1;
  int threads = 1;
  GChoice g_choice = GChoice::SeriesFirst;
};

inline PairEstimate pair_estimate(Series series, const PhaseSpaceSymbol& a, const PhaseSpaceSymbol& b, double t,
                                  int k_max, std::size_t n_samples, const ScatteringModel& model,
                                  const PairOptions& opt = {}) {
  const int d = model.d();
  a.validate(d);
  b.validate(d);
  if (k_max < 1 || k_max > 4) throw InvalidInput("k_max must lie in 1..4");
  if (!(t > 0)) throw InvalidInput("t must be positive");
  if (n_samples < 2) throw InvalidInput("need at least two samples");
  const double norm_a = a.l1_norm() * (a.amplitude < 0 ? -1.0 : 1.0);
  const auto K = static_cast<std::size_t>(k_max);
  // per sample, per k: LB value, NEW value, NEW diagonal with b = 1, masses, NEW weight
  enum Slot { LBv, NEWv, RET, MLB, MNEW, WGT, SLOTS };
  std::vector<double> store(n_samples * K * SLOTS, 0.0);
  std::vector<int> leg_count(n_samples, 0);
  std::vector<std::size_t> proposals(n_samples, 0), collisions(n_samples, 0);
  parallel_for(n_samples, resolve_threads(opt.threads), [&](std::size_t i) {
    Rng rng(opt.seed, i);
    Vec x0, y0;
    a.sample(rng, x0, y0);
    CollisionChain ch = sample_lb_chain(t, y0, model, rng, k_max - 1, x0);
    proposals[i] = ch.proposals;
    collisions[i] = static_cast<std::size_t>(ch.collisions());
    const int k = ch.legs();
    if (k > k_max) return;  // overflow chain: no contribution at k <= k_max
    leg_count[i] = k;
    double* s = &store[(i * K + static_cast<std::size_t>(k - 1)) * SLOTS];
    const Vec xt = ch.position();
    const double b_final = b(xt, ch.momenta.back());
    s[LBv] = norm_a * b_final;
    s[MLB] = norm_a;
    if (k == 1) {
      s[NEWv] = s[LBv];
      s[MNEW] = norm_a;
      s[WGT] = 1;
      return;
    }
    // time-ordered legs; G_time(k-1, 0) = g_1k and G_time(0, 0) = g_11 after relabelling
    const CMatrix T = on_shell_t_matrix(model, ch.momenta);
    double kernel = 1;
    for (int j = 1; j < k; ++j) kernel *= 4 * pi * pi * std::norm(T(j, j - 1));
    const GMatrix G = g_of(T, ch.times, opt.g_choice);
    const double w_off = std::norm(G(k - 1, 0)) / kernel / factorial(k - 2);
    const double w_diag = std::norm(G(0, 0)) / kernel / factorial(k - 1);
    const double b_initial = b(xt, ch.momenta.front());
    s[NEWv] = norm_a * (w_off * b_final + w_diag * b_initial);
    s[RET] = norm_a * w_diag;
    s[MNEW] = norm_a * (w_off + w_diag);
    s[WGT] = w_off + w_diag;
  });

  PairEstimate out;
  out.series = series;
  std::vector<double> col(n_samples), tot(n_samples, 0.0), mass(n_samples, 0.0);
  auto column = [&](std::size_t kk, int slot) {
    for (std::size_t i = 0; i < n_samples; ++i) col[i] = store[(i * K + kk) * SLOTS + static_cast<std::size_t>(slot)];
    return mean_stderr(col);
  };
  for (std::size_t kk = 0; kk < K; ++kk) {
    KTerm term;
    term.k = static_cast<int>(kk) + 1;
    for (int c : leg_count) term.chains += c == term.k ? 1 : 0;
    const auto lb = column(kk, LBv), nw = column(kk, NEWv), ret = column(kk, RET);
    term.lb = lb.mean;
    term.lb_error = lb.std_error;
    term.new_ = nw.mean;
    term.new_error = nw.std_error;
    term.return_mass = ret.mean;
    term.return_error = ret.std_error;
    term.mass_lb = column(kk, MLB).mean;
    term.mass_new = column(kk, MNEW).mean;
    double sw = 0, sw2 = 0;
    for (std::size_t i = 0; i < n_samples; ++i) {
      const double w = store[(i * K + kk) * SLOTS + WGT];
      sw += w;
      sw2 += w * w;
    }
    if (term.chains > 0 && sw2 > 0) term.ess_fraction = sw * sw / sw2 / static_cast<double>(term.chains);
    if (series == Series::NEW && term.k >= 2 && term.chains > 0 && term.ess_fraction < 0.05)
      out.warnings.push_back("weight degeneracy at k=" + std::to_string(term.k) + ": effective sample size " +
                             std::to_string(term.ess_fraction * 100) + "% of chains");
    for (std::size_t i = 0; i < n_samples; ++i) {
      tot[i] += store[(i * K + kk) * SLOTS + (series == Series::LB ? LBv : NEWv)];
      mass[i] += store[(i * K + kk) * SLOTS + (series == Series::LB ? MLB : MNEW)];
    }
    out.terms.push_back(term);
  }
  const auto te = mean_stderr(tot), me = mean_stderr(mass);
  out.estimate = te.mean;
  out.std_error = te.std_error;
  out.mass = me.mean;
  out.mass_error = me.std_error;
  double prop = 0, acc = 0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    prop += static_cast<double>(proposals[i]);
    acc += static_cast<double>(collisions[i]);
  }
  out.acceptance = prop > 0 ? acc / prop : 1.0;
  if (prop > 0 && out.acceptance < 0.01)
    out.warnings.push_back("rejection efficiency " + std::to_string(out.acceptance * 100) + "% is below 1%");
  return out;
}

// ---------------------------------------------------------------------------
// Deterministic quadratures

// Nodes and weights on S^{d-1}; the first polar angle is measured from `pole`.
struct SphereRule {
  std::vector<Vec> nodes;
  std::vector<double> weights;
};

namespace detail {

inline void sphere_coords(int dim, int polar_panels, int azimuth, std::vector<Vec>& pts, std::vector<double>& w) {
  pts.clear();
  w.clear();
  if (dim == 2) {
    for (int j = 0; j < azimuth; ++j) {
      const double phi = 2 * pi * j / azimuth;
      pts.push_back({std::cos(phi), std::sin(phi)});
      w.push_back(2 * pi / azimuth);
    }
    return;
  }
  std::vector<Vec> sub;
  std::vector<double> subw;
  sphere_coords(dim - 1, std::max(2, polar_panels / 2), azimuth, sub, subw);
  const QuadGrid g = uniform_grid(0.0, pi, polar_panels);
  for (std::size_t q = 0; q < g.x.size(); ++q) {
    const double c = std::cos(g.x[q]), s = std::sin(g.x[q]);
    const double ws = g.w[q] * std::pow(s, dim - 2);
    for (std::size_t r = 0; r < sub.size(); ++r) {
      Vec v(static_cast<std::size_t>(dim));
      v[0] = c;
      for (int i = 1; i < dim; ++i) v[static_cast<std::size_t>(i)] = s * sub[r][static_cast<std::size_t>(i) - 1];
      pts.push_back(std::move(v));
      w.push_back(ws * subw[r]);
    }
  }
}

}  // namespace detail

inline SphereRule sphere_rule(int d, const Vec& pole, int polar_panels, int azimuth) {
  if (d < 2) throw InvalidInput("sphere rule needs d >= 2");
  SphereRule r;
  detail::sphere_coords(d, polar_panels, azimuth, r.nodes, r.weights);
  // Householder reflection mapping e_1 to the pole
  Vec e(pole);
  const double n = std::sqrt(norm2(e));
  if (n == 0) return r;
  for (auto& x : e) x /= n;
  Vec v = e;
  v[0] -= 1.0;
  const double vv = norm2(v);
  if (vv < 1e-30) return r;
  for (auto& pt : r.nodes) {
    // H x = x - 2 v (v.(x')) / |v|^2 applied to x' = pt maps e_1 -> -(...); use H = I - 2vv^T/|v|^2 with v = e - e_1
    const double f = 2 * dot(v, pt) / vv;
    for (std::size_t i = 0; i < pt.size(); ++i) pt[i] -= f * v[i];
  }
  return r;
}

struct QuadratureOptions {
  int u_panels = 4;       // flight-time panels on [0, t]
  int polar_panels = 0;   // 0 = 16 + 8 s p
  int azimuth = 64;
  int p_panels = 10;      // speed panels (pairing quadrature)
};

// f^(k)(t, x, y) for k = 1, 2.
inline double f_term(Series series, int k, double t, const Vec& x, const Vec& y, const PhaseSpaceSymbol& a,
                     const ScatteringModel& model, const QuadratureOptions& opt = {}) {
  const int d = model.d();
  a.validate(d);
  if (!(t > 0)) throw InvalidInput("t must be positive");
  if (static_cast<int>(x.size()) != d || static_cast<int>(y.size()) != d) throw InvalidInput("wrong dimension");
  const double p = std::sqrt(norm2(y));
  if (!(p > 0)) throw DomainError("momentum must be non-zero");
  const double damp = std::exp(-t * model.sigma_tot(p));
  if (k == 1) {
    Vec xs(x);
    for (int i = 0; i < d; ++i) xs[static_cast<std::size_t>(i)] -= t * y[static_cast<std::size_t>(i)];
    return a(xs, y) * damp;
  }
  if (k != 2) throw InvalidInput("f_term supports k = 1, 2; use pair_estimate for higher k");
  const int panels = opt.polar_panels > 0 ? opt.polar_panels : 16 + static_cast<int>(std::ceil(8 * model.potential.width * p));
  const SphereRule sph = sphere_rule(d, y, panels, opt.azimuth);
  const QuadGrid ug = uniform_grid(0.0, t, opt.u_panels);
  const double shell = std::pow(p, d - 2);
  std::vector<double> terms;
  terms.reserve(sph.nodes.size());
  Vec yp(static_cast<std::size_t>(d)), xs(static_cast<std::size_t>(d));
  for (std::size_t q = 0; q < sph.nodes.size(); ++q) {
    for (int i = 0; i < d; ++i) yp[static_cast<std::size_t>(i)] = p * sph.nodes[q][static_cast<std::size_t>(i)];
    const cplx tv = model.on_shell_t(p, dot(sph.nodes[q], y) / p);  // T(y, y') = T(y', y) for radial W
    const cplx w = -2.0 * pi * I * tv;
    double inner = 0;
    for (std::size_t r = 0; r < ug.x.size(); ++r) {
      const double u1 = ug.x[r], u2 = t - u1;
      for (int i = 0; i < d; ++i)
        xs[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] - u1 * y[static_cast<std::size_t>(i)] - u2 * yp[static_cast<std::size_t>(i)];
      const double ax = a.amplitude * a.x_factor(xs);
      double val;
      if (series == Series::LB) {
        val = ax * a.y_factor(yp) * 4 * pi * pi * std::norm(tv);
      } else {
        const GMatrix g = g_bessel_k2(u1, u2, w, w);
        val = ax * (a.y_factor(y) * std::norm(g(0, 0)) + a.y_factor(yp) * std::norm(g(0, 1)));
      }
      inner += ug.w[r] * val;
    }
    terms.push_back(sph.weights[q] * inner);
  }
  return damp * shell * pairwise_sum(terms);
}

// <b, f^(k)> for k = 1, 2 by deterministic quadrature. Requires isotropic
// symbols sharing one position centre with momentum centres at 0, so that
// the integrand depends only on the speed, one scattering angle and u_1.
inline double pair_quadrature(Series series, int k, const PhaseSpaceSymbol& a, const PhaseSpaceSymbol& b, double t,
                              const ScatteringModel& model, const QuadratureOptions& opt = {}) {
  const int d = model.d();
  a.validate(d);
  b.validate(d);
  if (!(t > 0)) throw InvalidInput("t must be positive");
  if (k != 1 && k != 2) throw InvalidInput("pair_quadrature supports k = 1, 2");
  for (int i = 0; i < d; ++i)
    if (a.y0[static_cast<std::size_t>(i)] != 0 || b.y0[static_cast<std::size_t>(i)] != 0 ||
        a.x0[static_cast<std::size_t>(i)] != b.x0[static_cast<std::size_t>(i)])
      throw InvalidInput("pair_quadrature needs momentum-centred symbols with a common position centre");
  const double ky = 0.5 / (a.sigma_y * a.sigma_y) + 0.5 / (b.sigma_y * b.sigma_y);
  const double pmax = std::sqrt(46.0 / ky);
  const QuadGrid pg = uniform_grid(0.0, pmax, opt.p_panels);
  const QuadGrid ug = uniform_grid(0.0, t, opt.u_panels);
  const double amp = a.amplitude * b.amplitude;
  const double area_d = detail::sphere_area(d), area_dm1 = detail::sphere_area(d - 1);
  std::vector<double> outer(pg.x.size());
  for (std::size_t ip = 0; ip < pg.x.size(); ++ip) {
    const double p = pg.x[ip];
    const double radial = area_d * std::pow(p, d - 1) * amp * std::exp(-ky * p * p);
    const double damp = std::exp(-t * model.sigma_tot(p));
    if (k == 1) {
      outer[ip] = pg.w[ip] * radial * damp * gauss_overlap(d, a.sigma_x, b.sigma_x, t * t * p * p);
      continue;
    }
    const int panels = opt.polar_panels > 0 ? opt.polar_panels : 16 + static_cast<int>(std::ceil(8 * model.potential.width * p));
    const QuadGrid ag = uniform_grid(0.0, pi, panels);
    std::vector<double> mid(ag.x.size());
    for (std::size_t ia = 0; ia < ag.x.size(); ++ia) {
      const double c = std::cos(ag.x[ia]);
      const double jac = area_dm1 * std::pow(std::sin(ag.x[ia]), d - 2) * std::pow(p, d - 2);
      const cplx tv = model.on_shell_t(p, c);
      const cplx w = -2.0 * pi * I * tv;
      double inner = 0;
      for (std::size_t r = 0; r < ug.x.size(); ++r) {
        const double u1 = ug.x[r], u2 = t - u1;
        const double dist2 = p * p * (u1 * u1 + u2 * u2 + 2 * u1 * u2 * c);
        double dens;
        if (series == Series::LB) {
          dens = 4 * pi * pi * std::norm(tv);
        } else {
          const GMatrix g = g_bessel_k2(u1, u2, w, w);
          dens = std::norm(g(0, 0)) + std::norm(g(0, 1));
        }
        inner += ug.w[r] * dens * gauss_overlap(d, a.sigma_x, b.sigma_x, dist2);
      }
      mid[ia] = ag.w[ia] * jac * inner;
    }
    outer[ip] = pg.w[ip] * radial * damp * pairwise_sum(mid);
  }
  return pairwise_sum(outer);
}

}  // namespace bgq
