#include <gtest/gtest.h>

#include "bgq/bessel.hpp"
#include "bgq/kinetic.hpp"

using namespace bgq;

namespace {

ScatteringModel model(double lambda, int order = 1) { return ScatteringModel(GaussianPotential{}, lambda, order); }

CMatrix random_t(int k, Rng& rng, double scale) {
  CMatrix T = CMatrix::Zero(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      if (a != b) T(a, b) = std::polar(scale * rng.uniform(), 2 * pi * rng.uniform());
  return T;
}

PhaseSpaceSymbol symbol(double sx, double sy) {
  PhaseSpaceSymbol s;
  s.x0 = {0, 0, 0};
  s.y0 = {0, 0, 0};
  s.sigma_x = sx;
  s.sigma_y = sy;
  return s;
}

}  // namespace

TEST(Densities, SingleLeg) {
  const auto m = model(0.3, 2);
  const std::vector<Vec> y{{0, 1.2, 0}};
  const std::vector<double> u{0.7};
  const double expected = std::exp(-0.7 * m.sigma_tot(1.2));
  EXPECT_NEAR(rho_lb(1, u, y, m).value, expected, 1e-15);
  EXPECT_NEAR(rho_new(1, 1, 1, u, y, m).value, expected, 1e-15);
  EXPECT_NEAR(rho_combinatorial(DensityClass::DIAG, 10, u, y, m).value, expected, 1e-15);
}

TEST(Densities, LbFactorizes) {
  const auto m = model(0.3, 2);
  const std::vector<Vec> y{{1, 0, 0}, {0.6, 0.8, 0}};
  const std::vector<double> u{0.4, 1.3};
  const double leg1 = rho_lb(1, std::vector<double>{0.4}, {y[0]}, m).value;
  const double leg2 = rho_lb(1, std::vector<double>{1.3}, {y[1]}, m).value;
  EXPECT_NEAR(rho_lb(2, u, y, m).value, leg1 * m.sigma(1.0, 0.6) * leg2, 1e-14);
}

TEST(Densities, OffShellRejected) {
  const auto m = model(0.3);
  const std::vector<Vec> y{{1, 0, 0}, {0.5, 0, 0}};
  EXPECT_THROW(rho_lb(2, std::vector<double>{1, 1}, y, m), InvalidInput);
  EXPECT_THROW(rho_new(0, 1, 2, std::vector<double>{1, 1}, {{1, 0, 0}, {0, 1, 0}}, m), InvalidInput);
}

TEST(Densities, BesselFormsForTwoLegs) {
  Rng rng(21);
  for (int t = 0; t < 40; ++t) {
    const CMatrix T = random_t(2, rng, 0.3);
    const std::vector<double> u{2 * rng.uniform(), 2 * rng.uniform()}, sig{rng.uniform(), rng.uniform()};
    const double lb = rho_lb_raw(u, T, sig).value;
    const cplx z = 4 * pi * std::sqrt(u[0] * u[1] * T(0, 1) * T(1, 0));
    const double r11 = lb * std::abs(u[0] * T(1, 0) / (u[1] * T(0, 1))) * std::norm(bessel_j(1, z));
    const double r12 = lb * std::norm(bessel_j(0, z));
    EXPECT_NEAR(rho_new_raw(1, 1, u, T, sig).value, r11, 1e-12 * std::max(r11, 1e-3));
    EXPECT_NEAR(rho_new_raw(1, 2, u, T, sig).value, r12, 1e-12 * std::max(r12, 1e-3));
  }
}

TEST(Densities, IndexSwapIdentities) {
  Rng rng(22);
  for (int t = 0; t < 20; ++t) {
    const CMatrix T = random_t(2, rng, 0.3);
    CMatrix S(2, 2);
    S << 0, T(1, 0), T(0, 1), 0;
    const std::vector<double> u{rng.uniform(), rng.uniform()}, us{u[1], u[0]}, sig{0.2, 0.2};
    EXPECT_NEAR(rho_new_raw(2, 2, u, T, sig).value, rho_new_raw(1, 1, us, S, sig).value, 1e-13);
    EXPECT_NEAR(rho_new_raw(2, 1, u, T, sig).value, rho_new_raw(1, 2, us, S, sig).value, 1e-13);
  }
}

TEST(Densities, PositiveForThreeLegs) {
  Rng rng(23);
  for (int t = 0; t < 200; ++t) {
    const CMatrix T = random_t(3, rng, 0.3);
    const std::vector<double> u{rng.uniform(), rng.uniform(), rng.uniform()}, sig{0.1, 0.1, 0.1};
    for (int l = 1; l <= 3; ++l)
      for (int mm = 1; mm <= 3; ++mm) EXPECT_GE(rho_new_raw(l, mm, u, T, sig, GChoice::SeriesFirst).value, 0.0);
  }
}

TEST(Combinatorial, MatchesBesselDiagonal) {
  Rng rng(24);
  for (int t = 0; t < 10; ++t) {
    const CMatrix T = random_t(2, rng, 0.2);
    const std::vector<double> u{rng.uniform(), rng.uniform()}, sig{0.3, 0.3};
    const auto c = rho_combinatorial(DensityClass::DIAG, 20, u, T, sig);
    const double d11 = std::abs(c.value - rho_new_raw(1, 1, u, T, sig).value);
    EXPECT_LE(d11, 1e-10);
    EXPECT_LE(d11, c.value_bound + 1e-15);
    const auto o = rho_combinatorial(DensityClass::OFF, 20, u, T, sig);
    EXPECT_NEAR(o.value, rho_new_raw(1, 2, u, T, sig).value, 1e-10);
  }
  EXPECT_THROW(rho_combinatorial(DensityClass::OFF, 5, std::vector<double>{1}, CMatrix::Zero(1, 1), std::vector<double>{0}),
               InvalidInput);
}

TEST(Combinatorial, ThreeLegsWithinTailBound) {
  Rng rng(25);
  for (int t = 0; t < 2; ++t) {
    const CMatrix T = random_t(3, rng, 0.1);
    const std::vector<double> u{rng.uniform(), rng.uniform(), rng.uniform()}, sig{0.1, 0.1, 0.1};
    const auto c = rho_combinatorial(DensityClass::DIAG, 12, u, T, sig);
    const double analytic = rho_new_raw(1, 1, u, T, sig).value;
    EXPECT_LE(std::abs(c.value - analytic), c.value_bound + 1e-12 * analytic);
  }
}

TEST(FTerm, FreeTransportClosedForm) {
  const auto m = model(0.2);
  PhaseSpaceSymbol a = symbol(1.0, 0.7);
  a.x0 = {0.3, -0.1, 0.2};
  a.y0 = {0.5, 0, 0};
  const Vec x{0.4, 0.2, -0.3}, y{0.9, 0.1, 0.0};
  const double t = 0.8;
  const Vec xs{x[0] - t * y[0], x[1] - t * y[1], x[2] - t * y[2]};
  const double expected = a(xs, y) * std::exp(-t * m.sigma_tot(std::sqrt(norm2(y))));
  EXPECT_DOUBLE_EQ(f_term(Series::LB, 1, t, x, y, a, m), expected);
  EXPECT_DOUBLE_EQ(f_term(Series::NEW, 1, t, x, y, a, m), expected);
  EXPECT_THROW(f_term(Series::LB, 3, t, x, y, a, m), InvalidInput);
}

TEST(FTerm, SecondTermIsOrderCouplingSquared) {
  const PhaseSpaceSymbol a = symbol(1.0, 0.8);
  const Vec x{0.2, 0, 0}, y{0.8, 0.2, 0};
  const double r1 = f_term(Series::LB, 2, 1.0, x, y, a, model(1e-2)) / 1e-4;
  const double r2 = f_term(Series::LB, 2, 1.0, x, y, a, model(1e-3)) / 1e-6;
  EXPECT_GT(r1, 0);
  // the remaining difference is the O(λ^2) damping correction
  EXPECT_NEAR(r1, r2, 1e-2 * r1);
  const double n1 = f_term(Series::NEW, 2, 1.0, x, y, a, model(1e-3)) / 1e-6;
  EXPECT_NEAR(n1, r2, 1e-2 * r2);
}

TEST(Sampler, ConservesSpeedAndTime) {
  const auto m = model(0.5);
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    const auto ch = sample_lb_chain(3.0, Vec{0, 1.1, 0}, m, rng);
    double tt = 0;
    for (double s : ch.times) tt += s;
    EXPECT_NEAR(tt, 3.0, 1e-12);
    for (const auto& v : ch.momenta) EXPECT_NEAR(std::sqrt(norm2(v)), 1.1, 1e-12);
    EXPECT_EQ(ch.times.size(), ch.momenta.size());
  }
  EXPECT_THROW(sample_lb_chain(1.0, Vec{0, 0, 0}, m, rng), DomainError);
}

TEST(Sampler, ZeroCollisionFrequency) {
  const auto m = model(0.3);
  Rng rng(32);
  const int n = 20000;
  const double t = 1.0, p0 = std::exp(-t * m.sigma_tot(1.0));
  int free = 0;
  for (int i = 0; i < n; ++i) free += sample_lb_chain(t, Vec{1, 0, 0}, m, rng).collisions() == 0;
  const double sd = std::sqrt(p0 * (1 - p0) / n);
  EXPECT_LT(std::abs(free / static_cast<double>(n) - p0), 4 * sd);
}

TEST(PairEstimate, ShortTimeGivesPairing) {
  const auto m = model(0.2);
  PhaseSpaceSymbol a = symbol(1.0, 0.6), b = symbol(1.5, 0.8);
  b.x0 = {0.2, 0, 0};
  const double exact = pairing(a, b);
  for (Series s : {Series::LB, Series::NEW}) {
    const auto e = pair_estimate(s, a, b, 1e-6, 2, 20000, m);
    EXPECT_LT(std::abs(e.estimate - exact), 4 * e.std_error + 1e-6 * exact) << to_string(s);
  }
}

TEST(PairEstimate, DeterministicAcrossThreads) {
  const auto m = model(0.3);
  const auto a = symbol(1.0, 0.6), b = symbol(1.5, 0.8);
  const auto e1 = pair_estimate(Series::NEW, a, b, 1.0, 3, 2000, m, {77, 1});
  const auto e2 = pair_estimate(Series::NEW, a, b, 1.0, 3, 2000, m, {77, 2});
  const auto e3 = pair_estimate(Series::NEW, a, b, 1.0, 3, 2000, m, {78, 1});
  EXPECT_EQ(e1.estimate, e2.estimate);
  EXPECT_EQ(e1.std_error, e2.std_error);
  EXPECT_NE(e1.estimate, e3.estimate);
}

TEST(PairEstimate, FreeTermMatchesQuadrature) {
  const auto m = model(0.3);
  const auto a = symbol(1.0, 0.6), b = symbol(1.5, 0.8);
  const auto e = pair_estimate(Series::LB, a, b, 1.0, 2, 40000, m);
  const double q = pair_quadrature(Series::LB, 1, a, b, 1.0, m);
  EXPECT_LT(std::abs(e.terms[0].lb - q), 4 * e.terms[0].lb_error);
  EXPECT_EQ(e.terms[0].lb, e.terms[0].new_);
}

TEST(PairEstimate, RejectsBadArguments) {
  const auto m = model(0.3);
  const auto a = symbol(1.0, 0.6);
  EXPECT_THROW(pair_estimate(Series::LB, a, a, 1.0, 5, 100, m), InvalidInput);
  EXPECT_THROW(pair_estimate(Series::LB, a, a, 0.0, 2, 100, m), InvalidInput);
  PhaseSpaceSymbol off = a;
  off.y0 = {0.1, 0, 0};
  EXPECT_THROW(pair_quadrature(Series::LB, 1, off, a, 1.0, m), InvalidInput);
}

TEST(SphereRule, IntegratesPolynomials) {
  const auto r = sphere_rule(3, Vec{0.3, 0.4, 0.5}, 12, 32);
  double area = 0, z2 = 0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    area += r.weights[i];
    z2 += r.weights[i] * r.nodes[i][2] * r.nodes[i][2];
  }
  EXPECT_NEAR(area, 4 * pi, 1e-12);
  EXPECT_NEAR(z2, 4 * pi / 3, 1e-12);
}
