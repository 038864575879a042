#pragma once

// G(u; W) = (2 pi i)^{-k} ∮...∮ (D(z) - W)^{-1} exp(u.z) dz
//         = L( sum_n [D(u) W]^n D(u) ),
// computed by the truncated Borel series, by trapezoidal contour
// quadrature, and (k = 2) by the Bessel closed form.

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "bgq/bessel.hpp"
#include "bgq/errors.hpp"
#include "bgq/numeric.hpp"
#include "bgq/paths_borel.hpp"

namespace bgq {

enum class GMethod { Series, Contour, BesselK2 };

inline const char* to_string(GMethod m) {
  switch (m) {
    case GMethod::Series: return "SERIES";
    case GMethod::Contour: return "CONTOUR";
    case GMethod::BesselK2: return "BESSEL_K2";
  }
  return "?";
}

struct GMatrix {
  CMatrix g;
  GMethod method = GMethod::Series;
  double error_estimate = 0;  // series: size of the last retained orders; contour: |G_N - G_{N/2}|
  int order = 0;              // series: last order used; contour: nodes per circle
  bool converged = true;

  int k() const { return static_cast<int>(g.rows()); }
  cplx operator()(int l, int m) const { return g(l, m); }
};

struct SeriesOptions {
  int max_order = 80;
  double rel_tol = 1e-16;
  std::size_t max_cells = 60'000'000;  // complex cells across both work buffers
};

inline GMatrix g_series(const WeightedCollisionGraph& gr, const SeriesOptions& opt = {}) {
  const int k = gr.k();
  const int dmax = opt.max_order + 1;  // highest total degree
  const int dims = k - 1;              // exponent of the last variable is implied
  const std::size_t side = static_cast<std::size_t>(dmax) + 1;
  std::size_t size = 1;
  for (int i = 0; i < dims; ++i) {
    size *= side;
    if (size * static_cast<std::size_t>(2 * k * k) > opt.max_cells)
      throw CapacityError("series table for k=" + std::to_string(k) + " at order " + std::to_string(opt.max_order));
  }
  std::vector<std::size_t> stride(static_cast<std::size_t>(std::max(dims, 1)), 1);
  for (int i = 1; i < dims; ++i) stride[static_cast<std::size_t>(i)] = stride[static_cast<std::size_t>(i - 1)] * side;

  // Multi-indices (first k-1 exponents) of total degree <= dmax, in flat order.
  std::vector<std::size_t> flat;
  std::vector<std::vector<int>> expo;
  {
    std::vector<int> e(static_cast<std::size_t>(dims), 0);
    for (std::size_t idx = 0; idx < size; ++idx) {
      std::size_t r = idx;
      int s = 0;
      for (int i = 0; i < dims; ++i) {
        e[static_cast<std::size_t>(i)] = static_cast<int>(r % side);
        r /= side;
        s += e[static_cast<std::size_t>(i)];
      }
      if (s <= dmax) {
        flat.push_back(idx);
        expo.push_back(e);
      }
    }
  }
  std::vector<int> esum(expo.size());
  for (std::size_t c = 0; c < expo.size(); ++c)
    for (int v : expo[c]) esum[c] += v;

  // p[i][m] = u_i^m / m!
  std::vector<std::vector<double>> p(static_cast<std::size_t>(k), std::vector<double>(side + 1, 1.0));
  for (int i = 0; i < k; ++i)
    for (std::size_t m = 1; m <= side; ++m)
      p[static_cast<std::size_t>(i)][m] = p[static_cast<std::size_t>(i)][m - 1] * gr.u[static_cast<std::size_t>(i)] / static_cast<double>(m);

  auto cell = [&](std::vector<cplx>& buf, int i, int j) { return buf.data() + (static_cast<std::size_t>(i * k + j)) * size; };
  std::vector<cplx> cur(static_cast<std::size_t>(k * k) * size, 0.0), nxt(cur.size(), 0.0);
  for (int i = 0; i < k; ++i) {
    std::size_t idx = i < dims ? stride[static_cast<std::size_t>(i)] : 0;
    cell(cur, i, i)[idx] = 1.0;
  }

  GMatrix out;
  out.method = GMethod::Series;
  out.g = CMatrix::Zero(k, k);
  double prev_term = 0, term = 0;
  bool stopped = false;
  int n = 0;
  for (;; ++n) {
    const int deg = n + 1;
    // Borel-evaluate the homogeneous degree-`deg` part.
    CMatrix contrib = CMatrix::Zero(k, k);
    if (deg >= k) {
      for (std::size_t c = 0; c < flat.size(); ++c) {
        const int last = deg - esum[c];
        if (last < 1) continue;
        const auto& e = expo[c];
        bool ok = true;
        double w = p[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(last - 1)];
        for (int i = 0; i < dims && ok; ++i) {
          if (e[static_cast<std::size_t>(i)] < 1) ok = false;
          else w *= p[static_cast<std::size_t>(i)][static_cast<std::size_t>(e[static_cast<std::size_t>(i)] - 1)];
        }
        if (!ok) continue;
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) contrib(i, j) += w * cell(cur, i, j)[flat[c]];
      }
    }
    out.g += contrib;
    prev_term = term;
    term = contrib.cwiseAbs().maxCoeff();
    const double scale = std::max(out.g.cwiseAbs().maxCoeff(), 1e-300);
    if (n >= k && term <= opt.rel_tol * scale && prev_term <= opt.rel_tol * scale) {
      stopped = true;
      break;
    }
    if (n == opt.max_order) break;
    // F_{n+1}(i,j) = u_i * sum_l W(i,l) F_n(l,j)
    std::fill(nxt.begin(), nxt.end(), cplx(0.0));
    for (int i = 0; i < k; ++i) {
      const std::size_t shift = i < dims ? stride[static_cast<std::size_t>(i)] : 0;
      for (int l = 0; l < k; ++l) {
        const cplx w = gr.W(i, l);
        if (w == cplx(0.0)) continue;
        for (int j = 0; j < k; ++j) {
          const cplx* src = cell(cur, l, j);
          cplx* dst = cell(nxt, i, j);
          for (std::size_t c = 0; c < flat.size(); ++c) {
            if (esum[c] > deg) continue;
            const cplx v = src[flat[c]];
            if (v != cplx(0.0)) dst[flat[c] + shift] += w * v;
          }
        }
      }
    }
    std::swap(cur, nxt);
  }
  out.order = n;
  out.error_estimate = term + prev_term;
  out.converged = stopped;
  return out;
}

inline GMatrix g_series(const WeightedCollisionGraph& gr, int max_order) {
  SeriesOptions o;
  o.max_order = max_order;
  return g_series(gr, o);
}

// ---------------------------------------------------------------------------

struct ContourSpec {
  std::vector<double> radius;  // per coordinate; empty -> 1 + 1.1 r0
  int nodes = 0;               // per circle; 0 -> automatic
  int threads = 1;
  std::size_t max_total_nodes = std::size_t{1} << 28;
};

namespace detail {

inline int next_pow2(double x) {
  int n = 1;
  while (n < x) n *= 2;
  return n;
}

// Smallest power-of-two node count whose aliasing bound for both the
// Taylor part of exp(u z) and the Laurent part of the resolvent is < 1e-17.
inline int auto_nodes(const WeightedCollisionGraph& gr, const std::vector<double>& rho) {
  double rowsum = 0;
  for (int i = 0; i < gr.k(); ++i) rowsum = std::max(rowsum, gr.W.row(i).cwiseAbs().sum());
  const double umax = *std::max_element(gr.u.begin(), gr.u.end());
  const double lim = std::log(1e-17);
  int best = 32;
  for (int i = 0; i < gr.k(); ++i) {
    const double x = gr.u[static_cast<std::size_t>(i)] * rho[static_cast<std::size_t>(i)];
    const double q = rowsum / rho[static_cast<std::size_t>(i)];
    int n = 32;
    auto ok = [&](int N) {
      const double pos = x > 0 ? N * std::log(x) - std::lgamma(N + 1.0) + x : -1e300;
      const double neg = q > 0 ? N * std::log(q) + umax * rowsum : -1e300;
      return pos < lim && neg < lim;
    };
    while (!ok(n) && n < (1 << 16)) n *= 2;
    best = std::max(best, n);
  }
  return best;
}

template <int K>
inline bool small_inverse(const cplx (&a)[K][K], cplx (&inv)[K][K]);

template <>
inline bool small_inverse<2>(const cplx (&a)[2][2], cplx (&inv)[2][2]) {
  const cplx det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
  if (!(std::abs(det) > 1e-300)) return false;
  const cplx r = 1.0 / det;
  inv[0][0] = a[1][1] * r;
  inv[0][1] = -a[0][1] * r;
  inv[1][0] = -a[1][0] * r;
  inv[1][1] = a[0][0] * r;
  return true;
}

template <>
inline bool small_inverse<3>(const cplx (&a)[3][3], cplx (&inv)[3][3]) {
  const cplx c00 = a[1][1] * a[2][2] - a[1][2] * a[2][1];
  const cplx c01 = a[1][2] * a[2][0] - a[1][0] * a[2][2];
  const cplx c02 = a[1][0] * a[2][1] - a[1][1] * a[2][0];
  const cplx det = a[0][0] * c00 + a[0][1] * c01 + a[0][2] * c02;
  if (!(std::abs(det) > 1e-300)) return false;
  const cplx r = 1.0 / det;
  inv[0][0] = c00 * r;
  inv[1][0] = c01 * r;
  inv[2][0] = c02 * r;
  inv[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) * r;
  inv[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) * r;
  inv[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) * r;
  inv[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) * r;
  inv[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) * r;
  inv[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) * r;
  return true;
}

struct ContourPartial {
  std::vector<cplx> full, coarse;  // row-major k*k
};

// Accumulates trapezoid sums for all nodes whose first coordinate index is i0.
template <int K>
void contour_slice_fixed(const WeightedCollisionGraph& gr, const std::vector<std::vector<cplx>>& z,
                         const std::vector<std::vector<cplx>>& fac, int N, int i0, ContourPartial& out) {
  cplx a[K][K], inv[K][K];
  for (int r = 0; r < K; ++r)
    for (int c = 0; c < K; ++c) a[r][c] = -gr.W(r, c);
  int idx[K] = {};
  idx[0] = i0;
  while (true) {
    cplx f = 1.0;
    bool even = true;
    for (int j = 0; j < K; ++j) {
      a[j][j] = z[static_cast<std::size_t>(j)][static_cast<std::size_t>(idx[j])];
      f *= fac[static_cast<std::size_t>(j)][static_cast<std::size_t>(idx[j])];
      even = even && (idx[j] % 2 == 0);
    }
    if (!small_inverse<K>(a, inv)) throw SingularMatrix("D(z) - W is singular on the contour; increase the radius");
    for (int r = 0; r < K; ++r)
      for (int c = 0; c < K; ++c) {
        const cplx v = inv[r][c] * f;
        out.full[static_cast<std::size_t>(r * K + c)] += v;
        if (even) out.coarse[static_cast<std::size_t>(r * K + c)] += v;
      }
    int j = K - 1;
    while (j >= 1 && ++idx[j] == N) idx[j--] = 0;
    if (j < 1) break;
  }
}

inline void contour_slice_dynamic(const WeightedCollisionGraph& gr, const std::vector<std::vector<cplx>>& z,
                                  const std::vector<std::vector<cplx>>& fac, int N, int i0, ContourPartial& out) {
  const int k = gr.k();
  using Small = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, 0, 16, 16>;
  Small a = -gr.W;
  std::vector<int> idx(static_cast<std::size_t>(k), 0);
  idx[0] = i0;
  while (true) {
    cplx f = 1.0;
    bool even = true;
    for (int j = 0; j < k; ++j) {
      a(j, j) = z[static_cast<std::size_t>(j)][static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
      f *= fac[static_cast<std::size_t>(j)][static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
      even = even && (idx[static_cast<std::size_t>(j)] % 2 == 0);
    }
    Eigen::PartialPivLU<Small> lu(a);
    if (!(std::abs(lu.determinant()) > 1e-300)) throw SingularMatrix("D(z) - W is singular on the contour; increase the radius");
    const Small inv = lu.inverse();
    for (int r = 0; r < k; ++r)
      for (int c = 0; c < k; ++c) {
        const cplx v = inv(r, c) * f;
        out.full[static_cast<std::size_t>(r * k + c)] += v;
        if (even) out.coarse[static_cast<std::size_t>(r * k + c)] += v;
      }
    int j = k - 1;
    while (j >= 1 && ++idx[static_cast<std::size_t>(j)] == N) idx[static_cast<std::size_t>(j--)] = 0;
    if (j < 1) break;
  }
}

}  // namespace detail

inline GMatrix g_contour(const WeightedCollisionGraph& gr, const ContourSpec& spec = {}) {
  const int k = gr.k();
  if (k > 16) throw InvalidInput("contour quadrature supports k <= 16");
  const double r0 = gr.r0();
  std::vector<double> rho = spec.radius;
  if (rho.empty()) rho.assign(static_cast<std::size_t>(k), 1.0 + 1.1 * r0);
  if (static_cast<int>(rho.size()) != k) throw InvalidInput("contour radius needs one entry per coordinate");
  for (double r : rho)
    if (!(r > r0)) throw InvalidInput("contour radius must exceed r0 = k max|w_ij|");
  int N = spec.nodes;
  if (N <= 0) N = std::max(k <= 2 ? 256 : 32, detail::auto_nodes(gr, rho));
  if (N % 2) ++N;
  if (std::pow(static_cast<double>(N), k) > static_cast<double>(spec.max_total_nodes))
    throw CapacityError("contour grid of " + std::to_string(N) + "^" + std::to_string(k) + " nodes");

  // z_j on circle j and the per-coordinate factor z_j exp(u_j z_j) / N.
  std::vector<std::vector<cplx>> z(static_cast<std::size_t>(k)), fac(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j)
    for (int m = 0; m < N; ++m) {
      const cplx zz = std::polar(rho[static_cast<std::size_t>(j)], 2.0 * pi * m / N);
      z[static_cast<std::size_t>(j)].push_back(zz);
      fac[static_cast<std::size_t>(j)].push_back(zz * std::exp(gr.u[static_cast<std::size_t>(j)] * zz) / static_cast<double>(N));
    }

  std::vector<detail::ContourPartial> parts(static_cast<std::size_t>(N));
  auto work = [&](int i0) {
    auto& p = parts[static_cast<std::size_t>(i0)];
    p.full.assign(static_cast<std::size_t>(k * k), 0.0);
    p.coarse.assign(static_cast<std::size_t>(k * k), 0.0);
    if (k == 2) detail::contour_slice_fixed<2>(gr, z, fac, N, i0, p);
    else if (k == 3) detail::contour_slice_fixed<3>(gr, z, fac, N, i0, p);
    else detail::contour_slice_dynamic(gr, z, fac, N, i0, p);
  };
  const int threads = std::max(1, std::min(spec.threads, N));
  if (threads == 1) {
    for (int i0 = 0; i0 < N; ++i0) work(i0);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex mu;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        try {
          for (int i0 = t; i0 < N; i0 += threads) work(i0);
        } catch (...) {
          std::lock_guard<std::mutex> lk(mu);
          err = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
  }

  GMatrix out;
  out.method = GMethod::Contour;
  out.order = N;
  out.g = CMatrix::Zero(k, k);
  CMatrix coarse = CMatrix::Zero(k, k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) {
      std::vector<cplx> f(static_cast<std::size_t>(N)), g(static_cast<std::size_t>(N));
      for (int i0 = 0; i0 < N; ++i0) {
        f[static_cast<std::size_t>(i0)] = parts[static_cast<std::size_t>(i0)].full[static_cast<std::size_t>(r * k + c)];
        g[static_cast<std::size_t>(i0)] = parts[static_cast<std::size_t>(i0)].coarse[static_cast<std::size_t>(r * k + c)];
      }
      out.g(r, c) = pairwise_sum(f);
      coarse(r, c) = std::pow(2.0, k) * pairwise_sum(g);
    }
  out.error_estimate = (out.g - coarse).cwiseAbs().maxCoeff();
  out.converged = true;
  return out;
}

// ---------------------------------------------------------------------------

// k = 2 closed form, written through J_n(x)/(x/2)^n as functions of
// q = x^2/4 = -u1 u2 w12 w21 so that no square-root branch enters:
//   g11 = u1 w12 w21 S1(q),  g12 = w12 S0(q),  g21 = w21 S0(q),  g22 = u2 w12 w21 S1(q).
inline GMatrix g_bessel_k2(double u1, double u2, cplx w12, cplx w21) {
  if (!(u1 >= 0) || !(u2 >= 0)) throw InvalidInput("vertex times must be non-negative");
  const cplx ww = w12 * w21;
  const cplx q = -u1 * u2 * ww;
  const cplx s0 = bessel_j_scaled(0, q);
  const cplx s1 = bessel_j_scaled(1, q);
  GMatrix out;
  out.method = GMethod::BesselK2;
  out.g = CMatrix(2, 2);
  out.g(0, 0) = u1 * ww * s1;
  out.g(0, 1) = w12 * s0;
  out.g(1, 0) = w21 * s0;
  out.g(1, 1) = u2 * ww * s1;
  return out;
}

inline GMatrix g_bessel_k2(const WeightedCollisionGraph& gr) {
  if (gr.k() != 2) throw InvalidInput("Bessel closed form needs k = 2");
  return g_bessel_k2(gr.u[0], gr.u[1], gr.W(0, 1), gr.W(1, 0));
}

inline GMatrix g_matrix(const WeightedCollisionGraph& gr, GMethod m) {
  switch (m) {
    case GMethod::Series: return g_series(gr);
    case GMethod::Contour: return g_contour(gr);
    case GMethod::BesselK2: return g_bessel_k2(gr);
  }
  throw InvalidInput("unknown method");
}

}  // namespace bgq
