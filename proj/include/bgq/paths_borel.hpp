#pragma once

// Paths on the complete graph K_k, their weights, and the Borel-type
// operator L acting on Taylor tables in the vertex times u.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bgq/errors.hpp"
#include "bgq/numeric.hpp"
#include "bgq/partitions.hpp"

namespace bgq {

using CMatrix = Eigen::MatrixXcd;

struct WeightedCollisionGraph {
  CMatrix W;              // zero diagonal
  std::vector<double> u;  // vertex times, u_i >= 0

  WeightedCollisionGraph() = default;
  WeightedCollisionGraph(CMatrix w, std::vector<double> times) : W(std::move(w)), u(std::move(times)) {
    if (W.rows() != W.cols()) throw InvalidInput("edge matrix must be square");
    if (W.rows() < 2) throw InvalidInput("collision graph needs k >= 2");
    if (static_cast<Eigen::Index>(u.size()) != W.rows()) throw InvalidInput("u must have k entries");
    for (Eigen::Index i = 0; i < W.rows(); ++i)
      if (W(i, i) != cplx(0.0)) throw InvalidInput("edge matrix must have a zero diagonal");
    for (double t : u)
      if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidInput("vertex times must be finite and non-negative");
  }

  int k() const { return static_cast<int>(W.rows()); }
  double r0() const { return k() * W.cwiseAbs().maxCoeff(); }
};

// Vertex sequence i_0..i_n (0-based labels) with no immediate repetition.
class GraphPath {
 public:
  GraphPath() = default;
  explicit GraphPath(std::vector<int> v) : v_(std::move(v)) {
    if (v_.empty()) throw InvalidInput("a path visits at least one vertex");
    for (std::size_t s = 0; s + 1 < v_.size(); ++s)
      if (v_[s] == v_[s + 1]) throw InvalidInput("path repeats a vertex immediately");
  }
  const std::vector<int>& vertices() const { return v_; }
  int length() const { return static_cast<int>(v_.size()) - 1; }
  int operator[](int s) const { return v_[static_cast<std::size_t>(s)]; }
  bool surjective(int k) const {
    std::vector<char> seen(static_cast<std::size_t>(k), 0);
    for (int x : v_) seen.at(static_cast<std::size_t>(x)) = 1;
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  }
  // 1-based rendering, e.g. "121" (dot-separated when some label exceeds 9).
  std::string str() const {
    const bool wide = *std::max_element(v_.begin(), v_.end()) >= 9;
    std::string s;
    for (std::size_t i = 0; i < v_.size(); ++i) {
      if (wide && i) s += '.';
      s += std::to_string(v_[i] + 1);
    }
    return s;
  }
  friend bool operator==(const GraphPath& a, const GraphPath& b) { return a.v_ == b.v_; }
  friend bool operator<(const GraphPath& a, const GraphPath& b) { return a.v_ < b.v_; }

 private:
  std::vector<int> v_;
};

// Visits every path of length n from i to j on K_k in lexicographic order.
inline void for_each_path(int k, int n, int i, int j, bool surjective,
                          const std::function<void(const GraphPath&)>& visit) {
  if (k < 2 || n < 0) throw InvalidInput("paths need k >= 2 and n >= 0");
  if (i < 0 || i >= k || j < 0 || j >= k) throw InvalidInput("endpoint out of range");
  std::vector<int> v(static_cast<std::size_t>(n) + 1);
  std::vector<int> visits(static_cast<std::size_t>(k), 0);
  int distinct = 0;
  v[0] = i;
  visits[static_cast<std::size_t>(i)] = 1;
  distinct = 1;
  std::function<void(int)> rec = [&](int s) {
    if (s == n) {
      if (v[static_cast<std::size_t>(n)] != j) return;
      if (surjective && distinct < k) return;
      visit(GraphPath(v));
      return;
    }
    for (int x = 0; x < k; ++x) {
      if (x == v[static_cast<std::size_t>(s)]) continue;
      if (s + 1 == n && x != j) continue;
      // remaining steps cannot reach every missing vertex
      const int after = distinct + (visits[static_cast<std::size_t>(x)] == 0 ? 1 : 0);
      if (surjective && k - after > n - (s + 1)) continue;
      v[static_cast<std::size_t>(s + 1)] = x;
      if (visits[static_cast<std::size_t>(x)]++ == 0) ++distinct;
      rec(s + 1);
      if (--visits[static_cast<std::size_t>(x)] == 0) --distinct;
    }
  };
  if (n == 0) {
    if (i == j && (!surjective || k == 1)) visit(GraphPath(v));
    return;
  }
  rec(0);
}

inline std::vector<GraphPath> enumerate_paths(int k, int n, int i, int j, bool surjective,
                                              std::size_t cap = kDefaultEnumerationCap) {
  std::vector<GraphPath> out;
  for_each_path(k, n, i, j, surjective, [&](const GraphPath& p) {
    if (out.size() + 1 > cap) throw CapacityError("path enumeration exceeds cap of " + std::to_string(cap));
    out.push_back(p);
  });
  return out;
}

// i_s = i iff s ∈ F_i.
inline GraphPath partition_to_path(const OrderedPartition& f) {
  if (!f.non_consecutive()) throw InvalidInput("consecutive indices share a block");
  std::vector<int> v(static_cast<std::size_t>(f.n()) + 1);
  for (int s = 0; s <= f.n(); ++s) v[static_cast<std::size_t>(s)] = f.block_of(s);
  return GraphPath(std::move(v));
}

inline OrderedPartition path_to_partition(const GraphPath& p, int k) {
  if (!p.surjective(k)) throw InvalidInput("only surjective paths correspond to partitions into k blocks");
  std::vector<Block> b(static_cast<std::size_t>(k));
  for (int s = 0; s <= p.length(); ++s) b[static_cast<std::size_t>(p[s])].push_back(s);
  return OrderedPartition(std::move(b));
}

// u_{i0} w_{i0 i1} u_{i1} ... w_{i(n-1) in} u_{in}
inline cplx total_weight(const GraphPath& p, const WeightedCollisionGraph& g) {
  cplx w = g.u.at(static_cast<std::size_t>(p[0]));
  for (int s = 0; s < p.length(); ++s)
    w *= g.W(p[s], p[s + 1]) * g.u.at(static_cast<std::size_t>(p[s + 1]));
  return w;
}

// ---------------------------------------------------------------------------

using MultiIndex = std::vector<int>;

class TaylorTable {
 public:
  TaylorTable() = default;
  explicit TaylorTable(int k) : k_(k) {}

  int k() const { return k_; }
  const std::map<MultiIndex, cplx>& terms() const { return c_; }

  void add(const MultiIndex& nu, cplx v) {
    if (static_cast<int>(nu.size()) != k_) throw InvalidInput("multi-index arity mismatch");
    c_[nu] += v;
  }
  cplx coeff(const MultiIndex& nu) const {
    auto it = c_.find(nu);
    return it == c_.end() ? cplx(0.0) : it->second;
  }
  TaylorTable truncated(int max_degree) const {
    TaylorTable t(k_);
    for (const auto& [nu, v] : c_) {
      int deg = 0;
      for (int e : nu) deg += e;
      if (deg <= max_degree) t.c_[nu] = v;
    }
    return t;
  }
  cplx evaluate(const std::vector<double>& u) const {
    cplx s = 0;
    for (const auto& [nu, v] : c_) {
      double m = 1;
      for (int i = 0; i < k_; ++i) m *= std::pow(u[static_cast<std::size_t>(i)], nu[static_cast<std::size_t>(i)]);
      s += v * m;
    }
    return s;
  }
  TaylorTable& operator+=(const TaylorTable& o) {
    for (const auto& [nu, v] : o.c_) c_[nu] += v;
    return *this;
  }
  TaylorTable& operator*=(cplx a) {
    for (auto& [nu, v] : c_) v *= a;
    return *this;
  }
  friend TaylorTable operator-(TaylorTable a, const TaylorTable& b) {
    for (const auto& [nu, v] : b.c_) a.c_[nu] -= v;
    return a;
  }
  double max_abs() const {
    double m = 0;
    for (const auto& [nu, v] : c_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  int k_ = 0;
  std::map<MultiIndex, cplx> c_;
};

// L: coefficient C_nu of u^nu moves to u^(nu-1) divided by prod (nu_i - 1)!;
// monomials missing some variable are dropped.
inline TaylorTable borel_L(const TaylorTable& t) {
  TaylorTable out(t.k());
  for (const auto& [nu, v] : t.terms()) {
    if (std::any_of(nu.begin(), nu.end(), [](int e) { return e == 0; })) continue;
    MultiIndex m(nu.size());
    double den = 1;
    for (std::size_t i = 0; i < nu.size(); ++i) {
      m[i] = nu[i] - 1;
      den *= factorial(m[i]);
    }
    out.add(m, v / den);
  }
  return out;
}

// Sum over paths of length n from i to j of u^{visits} * prod w, symbolic in u.
inline TaylorTable path_sum_table(const CMatrix& W, int n, int i, int j, bool surjective) {
  const int k = static_cast<int>(W.rows());
  TaylorTable t(k);
  for_each_path(k, n, i, j, surjective, [&](const GraphPath& p) {
    MultiIndex nu(static_cast<std::size_t>(k), 0);
    cplx w = 1;
    for (int s = 0; s <= p.length(); ++s) {
      ++nu[static_cast<std::size_t>(p[s])];
      if (s < p.length()) w *= W(p[s], p[s + 1]);
    }
    t.add(nu, w);
  });
  return t;
}

// Entries of [D(u) W]^n D(u) as Taylor tables.
inline std::vector<std::vector<TaylorTable>> matrix_power_tables(const CMatrix& W, int n) {
  const int k = static_cast<int>(W.rows());
  std::vector<std::vector<TaylorTable>> F(static_cast<std::size_t>(k), std::vector<TaylorTable>(static_cast<std::size_t>(k), TaylorTable(k)));
  for (int i = 0; i < k; ++i) {
    MultiIndex e(static_cast<std::size_t>(k), 0);
    e[static_cast<std::size_t>(i)] = 1;
    F[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)].add(e, 1.0);
  }
  for (int step = 0; step < n; ++step) {
    std::vector<std::vector<TaylorTable>> G(static_cast<std::size_t>(k), std::vector<TaylorTable>(static_cast<std::size_t>(k), TaylorTable(k)));
    for (int i = 0; i < k; ++i)
      for (int l = 0; l < k; ++l) {
        if (W(i, l) == cplx(0.0)) continue;
        for (int j = 0; j < k; ++j)
          for (const auto& [nu, v] : F[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)].terms()) {
            MultiIndex m = nu;
            ++m[static_cast<std::size_t>(i)];
            G[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].add(m, W(i, l) * v);
          }
      }
    F = std::move(G);
  }
  return F;
}

// max |coefficient| of L(sum over surjective paths) - L([D(u)W]^n D(u))_ij.
inline double path_sum_identity_check(const WeightedCollisionGraph& g, int n, int i, int j) {
  if (n < 1) throw InvalidInput("identity check needs n >= 1");
  const auto lhs = borel_L(path_sum_table(g.W, n, i, j, true));
  const auto F = matrix_power_tables(g.W, n);
  const auto rhs = borel_L(F[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
  return (lhs - rhs).max_abs();
}

}  // namespace bgq
