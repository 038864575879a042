#include <gtest/gtest.h>

#include "bgq/lattice_stats.hpp"

using namespace bgq;

namespace {

// O(area) double loop over a box that certainly covers the window
std::vector<double> naive_lambdas(const LatticeWindow& w) {
  const Eigen::Matrix2d B = w.unit_basis();
  const double r = std::sqrt(w.R / pi);
  const double inv = B.inverse().cwiseAbs().rowwise().sum().maxCoeff();
  const int n = static_cast<int>(std::ceil(inv * (r + std::abs(w.alpha[0]) + std::abs(w.alpha[1])))) + 2;
  std::vector<double> out;
  for (int a = -n; a <= n; ++a)
    for (int b = -n; b <= n; ++b) {
      const Eigen::Vector2d v = a * B.col(0) + b * B.col(1) + Eigen::Vector2d(w.alpha[0], w.alpha[1]);
      const double lam = pi * v.squaredNorm();
      if (v.squaredNorm() >= (w.R - w.dR) / pi && v.squaredNorm() < w.R / pi) out.push_back(lam);
    }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(Lattice, MatchesNaiveEnumeration) {
  LatticeWindow w;
  w.R = pi * 30 * 30;
  w.dR = 800;
  for (const Eigen::Matrix2d& B : {Eigen::Matrix2d::Identity().eval(), (Eigen::Matrix2d() << 2.0, 0.7, 0.3, 1.1).finished()}) {
    w.basis = B;
    const auto s = generate(w);
    const auto ref = naive_lambdas(w);
    ASSERT_EQ(s.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_DOUBLE_EQ(s.lambda[i], ref[i]);
    for (double t : s.theta) {
      EXPECT_GE(t, 0.0);
      EXPECT_LT(t, 1.0);
    }
  }
}

TEST(Lattice, UnshiftedWindowAtZeroContainsOrigin) {
  LatticeWindow w;
  w.alpha = {0, 0};
  w.R = 0.5;
  w.dR = 0.5;
  const auto s = generate(w);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.lambda[0], 0.0);
}

TEST(Lattice, CountTracksWindowWidth) {
  for (double r : {100.0, 300.0}) {
    LatticeWindow w;
    w.R = pi * r * r;
    const auto s = generate(w);
    EXPECT_NEAR(static_cast<double>(s.size()) / w.dR, 1.0, 0.03) << r;
  }
}

TEST(Lattice, ThreadCountDoesNotChangeSample) {
  LatticeWindow w;
  w.R = pi * 200 * 200;
  const auto a = generate(w);
  w.threads = 2;
  const auto b = generate(w);
  EXPECT_EQ(a.lambda, b.lambda);
  EXPECT_EQ(a.theta, b.theta);
}

TEST(Lattice, GapsLookPoissonian) {
  LatticeWindow w;
  w.R = pi * 300 * 300;
  const auto rep = joint_test(generate(w));
  EXPECT_NEAR(rep.mean_gap, 1.0, 0.05);
  EXPECT_TRUE(rep.pass(0.01)) << rep.ks_p << " " << rep.theta_uniform.p_value << " " << rep.independence.p_value;
}

TEST(Lattice, CapacityAndValidation) {
  LatticeWindow w;
  w.max_points = 100;
  EXPECT_THROW(generate(w), CapacityError);
  w = LatticeWindow{};
  w.dR = -1;
  EXPECT_THROW(generate(w), InvalidInput);
  w = LatticeWindow{};
  w.basis << 1, 2, 2, 4;
  EXPECT_THROW(generate(w), InvalidInput);
}

TEST(PoissonReference, SelfTest) {
  Rng rng(41);
  const auto s = poisson_reference(1.0, 10000, rng);
  const auto rep = joint_test(s);
  EXPECT_NEAR(rep.mean_gap, 1.0, 0.05);
  EXPECT_TRUE(rep.pass(0.01));
}

TEST(PoissonReference, MeanGapIsInverseIntensity) {
  Rng rng(42);
  const auto s = poisson_reference(4.0, 20000, rng);
  EXPECT_NEAR(s.lambda.back() / static_cast<double>(s.size()), 0.25, 0.01);
}

TEST(PoissonReference, Reproducible) {
  Rng a(43), b(43), c(44);
  const auto sa = poisson_reference(1.0, 500, a), sb = poisson_reference(1.0, 500, b), sc = poisson_reference(1.0, 500, c);
  EXPECT_EQ(sa.lambda, sb.lambda);
  EXPECT_EQ(sa.theta, sb.theta);
  EXPECT_NE(sa.lambda, sc.lambda);
}

TEST(JointTest, RigidSequenceIsRejected) {
  PointSample s;
  Rng rng(45);
  for (int i = 0; i < 5000; ++i) {
    s.lambda.push_back(i);
    s.theta.push_back(rng.uniform());
  }
  const auto rep = joint_test(s);
  EXPECT_LT(rep.ks_p, 1e-6);
  EXPECT_FALSE(rep.pass(0.01));
}

TEST(JointTest, Histogram) {
  Rng rng(46);
  const auto g = gaps(poisson_reference(1.0, 5000, rng));
  const auto h = gap_angle_histogram(g, 5.0, 10, 4);
  double mass = 0;
  for (const auto& row : h)
    for (double v : row) mass += v * 0.5 * 0.25;
  EXPECT_NEAR(mass, 1.0 - std::exp(-5.0), 0.02);
  EXPECT_THROW(joint_test(PointSample{}), InvalidInput);
}
