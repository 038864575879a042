#pragma once

// Shifted-lattice point statistics in thin annular windows:
// λ = π |B n + α|^2, θ = arg(B n + α) / 2π, with B scaled to unit co-volume
// so that a window [R - ΔR, R) holds about ΔR points.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bgq/errors.hpp"
#include "bgq/numeric.hpp"
#include "bgq/parallel.hpp"
#include "bgq/rng.hpp"
#include "bgq/stats.hpp"

namespace bgq {

struct LatticeWindow {
  Eigen::Matrix2d basis = Eigen::Matrix2d::Identity();  // columns are basis vectors
  std::array<double, 2> alpha{std::sqrt(2.0), std::sqrt(3.0)};
  double R = pi * 500.0 * 500.0;
  double dR = 1e4;
  std::size_t max_points = 50'000'000;
  int threads = 1;

  void validate() const {
    if (!(R >= dR) || !(dR > 0)) throw InvalidInput("lattice window needs R >= dR > 0");
    const double det = basis.determinant();
    if (!(std::abs(det) > 1e-12 * basis.cwiseAbs().maxCoeff() * basis.cwiseAbs().maxCoeff()))
      throw InvalidInput("lattice basis must have full rank");
    if (!std::isfinite(alpha[0]) || !std::isfinite(alpha[1])) throw InvalidInput("shift must be finite");
    if (dR > 1.2 * static_cast<double>(max_points)) throw CapacityError("window would exceed the point cap");
  }
  Eigen::Matrix2d unit_basis() const { return basis / std::sqrt(std::abs(basis.determinant())); }
};

struct PointSample {
  std::vector<double> lambda;  // increasing
  std::vector<double> theta;   // in [0, 1)
  std::size_t size() const { return lambda.size(); }
};

inline double angle_fraction(double x, double y) {
  double t = std::atan2(y, x) / (2 * pi);
  if (t < 0) t += 1.0;
  if (t >= 1.0) t = 0.0;
  return t;
}

// Exact enumeration row by row: for fixed n2 the condition on n1 is a pair of quadratic inequalities.
inline PointSample generate(const LatticeWindow& w) {
  w.validate();
  const Eigen::Matrix2d B = w.unit_basis();
  const Eigen::Vector2d b1 = B.col(0), b2 = B.col(1), al(w.alpha[0], w.alpha[1]);
  const double lo2 = (w.R - w.dR) / pi, hi2 = w.R / pi;
  const double r_hi = std::sqrt(hi2);
  // |v| >= |v . e| with e ⟂ b1 bounds n2.
  const Eigen::Vector2d e = Eigen::Vector2d(-b1.y(), b1.x()).normalized();
  const double s2 = b2.dot(e), s0 = al.dot(e);
  const long long n2_min = static_cast<long long>(std::floor(std::min((-r_hi - s0) / s2, (r_hi - s0) / s2))) - 1;
  const long long n2_max = static_cast<long long>(std::ceil(std::max((-r_hi - s0) / s2, (r_hi - s0) / s2))) + 1;
  const auto rows = static_cast<std::size_t>(n2_max - n2_min + 1);
  std::vector<std::vector<std::array<double, 2>>> per_row(rows);
  const double a = b1.squaredNorm();
  parallel_for(rows, resolve_threads(w.threads), [&](std::size_t r) {
    const long long n2 = n2_min + static_cast<long long>(r);
    const Eigen::Vector2d c = static_cast<double>(n2) * b2 + al;
    const double bq = 2 * b1.dot(c), cq = c.squaredNorm();
    auto roots = [&](double rad2, double& x1, double& x2) {
      const double disc = bq * bq - 4 * a * (cq - rad2);
      if (disc < 0) return false;
      const double sq = std::sqrt(disc);
      x1 = (-bq - sq) / (2 * a);
      x2 = (-bq + sq) / (2 * a);
      return true;
    };
    double o1, o2;
    if (!roots(hi2, o1, o2)) return;
    double i1 = 0, i2 = -1;
    const bool inner = lo2 > 0 && roots(lo2, i1, i2);
    auto scan = [&](double from, double to) {
      for (auto n1 = static_cast<long long>(std::floor(from)) - 1; n1 <= static_cast<long long>(std::ceil(to)) + 1; ++n1) {
        const Eigen::Vector2d v = static_cast<double>(n1) * b1 + c;
        const double q = v.squaredNorm();
        if (q >= lo2 && q < hi2) per_row[r].push_back({pi * q, angle_fraction(v.x(), v.y())});
      }
    };
    if (!inner) {
      scan(o1, o2);
    } else {
      scan(o1, std::min(i1, o2));
      scan(std::max(i2, o1), o2);
    }
  });
  std::size_t total = 0;
  for (const auto& row : per_row) total += row.size();
  if (total > w.max_points) throw CapacityError("lattice window exceeds the point cap");
  std::vector<std::array<double, 2>> pts;
  pts.reserve(total);
  for (auto& row : per_row) pts.insert(pts.end(), row.begin(), row.end());
  // a scan over overlapping ranges can repeat a point; the sort makes repeats adjacent
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  PointSample s;
  s.lambda.reserve(pts.size());
  s.theta.reserve(pts.size());
  for (const auto& p : pts) {
    s.lambda.push_back(p[0]);
    s.theta.push_back(p[1]);
  }
  return s;
}

struct GapSample {
  std::vector<double> gap;    // λ_{i+1} - λ_i
  std::vector<double> theta;  // θ_i of the left point
};

inline GapSample gaps(const PointSample& s) {
  if (s.size() < 2) throw InvalidInput("need at least two points for gaps");
  GapSample g;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    g.gap.push_back(s.lambda[i + 1] - s.lambda[i]);
    g.theta.push_back(s.theta[i]);
  }
  return g;
}

struct JointReport {
  std::size_t points = 0;
  double mean_gap = 0;
  double ks_distance = 0, ks_p = 0;  // gaps vs Exp(1)
  ChiSquared theta_uniform;          // θ vs Uniform[0,1)
  ChiSquared independence;           // gap bin x θ bin contingency
  std::vector<std::vector<std::size_t>> counts;  // [gap bin][θ bin], gap bins equiprobable under Exp(1)
  std::vector<std::string> warnings;

  bool pass(double alpha = 0.01) const {
    return ks_p >= alpha && theta_uniform.p_value >= alpha && independence.p_value >= alpha;
  }
};

inline JointReport joint_test(const PointSample& s, int gap_bins = 10, int theta_bins = 10) {
  if (s.size() < 1000) throw InvalidInput("joint_test needs at least 1000 points");
  if (gap_bins < 2 || theta_bins < 2) throw InvalidInput("need at least two bins per axis");
  const GapSample g = gaps(s);
  JointReport r;
  r.points = s.size();
  const auto n = g.gap.size();
  r.mean_gap = pairwise_sum(g.gap) / static_cast<double>(n);
  r.ks_distance = ks_statistic(g.gap, [](double x) { return x <= 0 ? 0.0 : -std::expm1(-x); });
  r.ks_p = ks_pvalue(r.ks_distance, n);

  std::vector<std::size_t> tcount(static_cast<std::size_t>(theta_bins), 0);
  for (double t : s.theta) ++tcount[std::min(static_cast<std::size_t>(t * theta_bins), tcount.size() - 1)];
  const double et = static_cast<double>(s.size()) / theta_bins;
  double chi = 0;
  for (auto c : tcount) chi += (static_cast<double>(c) - et) * (static_cast<double>(c) - et) / et;
  r.theta_uniform = {chi, theta_bins - 1, chi_squared_pvalue(chi, theta_bins - 1)};

  r.counts.assign(static_cast<std::size_t>(gap_bins), std::vector<std::size_t>(static_cast<std::size_t>(theta_bins), 0));
  for (std::size_t i = 0; i < n; ++i) {
    // Exp(1) CDF maps gaps to equiprobable bins
    const double u = -std::expm1(-std::max(g.gap[i], 0.0));
    const auto gb = std::min(static_cast<std::size_t>(u * gap_bins), static_cast<std::size_t>(gap_bins) - 1);
    const auto tb = std::min(static_cast<std::size_t>(g.theta[i] * theta_bins), static_cast<std::size_t>(theta_bins) - 1);
    ++r.counts[gb][tb];
  }
  std::vector<double> row(static_cast<std::size_t>(gap_bins), 0.0), col(static_cast<std::size_t>(theta_bins), 0.0);
  for (std::size_t i = 0; i < row.size(); ++i)
    for (std::size_t j = 0; j < col.size(); ++j) {
      row[i] += static_cast<double>(r.counts[i][j]);
      col[j] += static_cast<double>(r.counts[i][j]);
    }
  chi = 0;
  int used_rows = 0, used_cols = 0;
  bool sparse = false;
  for (double v : row) used_rows += v > 0;
  for (double v : col) used_cols += v > 0;
  for (std::size_t i = 0; i < row.size(); ++i)
    for (std::size_t j = 0; j < col.size(); ++j) {
      const double e = row[i] * col[j] / static_cast<double>(n);
      if (e <= 0) continue;
      sparse |= e < 5;
      const double o = static_cast<double>(r.counts[i][j]);
      chi += (o - e) * (o - e) / e;
    }
  const int dof = std::max(1, (used_rows - 1) * (used_cols - 1));
  r.independence = {chi, dof, chi_squared_pvalue(chi, dof)};
  if (sparse || et < 5) r.warnings.push_back("some bins expect fewer than 5 counts; chi-squared p-values are approximate");
  return r;
}

// Density histogram on uniform bins, gap in [0, gap_max) by θ in [0,1); rows are gap bins.
inline std::vector<std::vector<double>> gap_angle_histogram(const GapSample& g, double gap_max, int gap_bins, int theta_bins) {
  std::vector<std::vector<double>> h(static_cast<std::size_t>(gap_bins), std::vector<double>(static_cast<std::size_t>(theta_bins), 0.0));
  const double cell = (gap_max / gap_bins) * (1.0 / theta_bins);
  const double unit = 1.0 / (static_cast<double>(g.gap.size()) * cell);
  for (std::size_t i = 0; i < g.gap.size(); ++i) {
    if (g.gap[i] < 0 || g.gap[i] >= gap_max) continue;
    const auto gb = static_cast<std::size_t>(g.gap[i] / gap_max * gap_bins);
    const auto tb = std::min(static_cast<std::size_t>(g.theta[i] * theta_bins), static_cast<std::size_t>(theta_bins) - 1);
    h[std::min(gb, h.size() - 1)][tb] += unit;
  }
  return h;
}

// Poisson process on [0, ∞) with uniform marks: exponential gaps of rate `intensity`.
inline PointSample poisson_reference(double intensity, std::size_t count, Rng& rng) {
  if (count < 1) throw InvalidInput("count must be at least 1");
  if (!(intensity > 0)) throw InvalidInput("intensity must be positive");
  PointSample s;
  double x = 0;
  for (std::size_t i = 0; i < count; ++i) {
    x += rng.exponential(intensity);
    s.lambda.push_back(x);
    double t = rng.uniform();
    if (t >= 1.0) t = 0.0;
    s.theta.push_back(t);
  }
  return s;
}

}  // namespace bgq
