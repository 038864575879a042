#include <gtest/gtest.h>

#include "bgq/scattering.hpp"

using namespace bgq;

namespace {

ScatteringModel unit_model(double lambda, int order) { return ScatteringModel(GaussianPotential{}, lambda, order); }

// Tensor-product quadrature of ∫ W(x) e(-x.y) dx for the unit-width Gaussian; the integrand factorizes per axis.
double w_hat_quadrature(const Vec& y) {
  const auto& r = gauss20();
  double total = 1.0;
  for (double yi : y) {
    // 1-D factor ∫ exp(-π x^2) cos(2π x y) dx on [-6, 6] with composite Gauss-Legendre
    double s = 0;
    const int panels = 24;
    const double a = -6, h = 12.0 / panels;
    for (int p = 0; p < panels; ++p)
      for (std::size_t q = 0; q < r.x.size(); ++q) {
        const double x = a + h * (p + 0.5 * (r.x[q] + 1));
        s += 0.5 * h * r.w[q] * std::exp(-pi * x * x) * std::cos(2 * pi * x * yi);
      }
    total *= s;
  }
  return total;
}

}  // namespace

TEST(Potential, FourierTransform) {
  const GaussianPotential p;
  EXPECT_DOUBLE_EQ(w_hat(p, Vec{0, 0, 0}), 1.0);
  double prev = 2;
  for (double r = 0; r < 3; r += 0.25) {
    const double v = w_hat(p, Vec{r, 0, 0});
    EXPECT_GT(v, 0);
    EXPECT_LT(v, prev);
    prev = v;
  }
  for (const Vec& y : {Vec{0.3, -0.2, 0.5}, Vec{1.1, 0.0, 0.4}})
    EXPECT_NEAR(w_hat(p, y), w_hat_quadrature(y), 1e-8);
}

TEST(Potential, Validation) {
  EXPECT_THROW((ScatteringModel(GaussianPotential{1, -1, 3}, 0.1, 1)), InvalidInput);
  EXPECT_THROW((ScatteringModel(GaussianPotential{1, 1, 2}, 0.1, 1)), InvalidInput);
  EXPECT_THROW(unit_model(0.1, 4), InvalidInput);
  EXPECT_THROW((ScatteringModel(GaussianPotential{}, 0.1, 1, cplx(-1, 0))), InvalidInput);
}

TEST(TMatrix, FirstBorn) {
  const auto m = unit_model(0.3, 1);
  EXPECT_NEAR(std::abs(t_born(m, Vec{1, 0, 0}, Vec{1, 0, 0}) - 0.3), 0, 1e-15);
  const Vec y{0.2, 0.4, -0.1}, yp{-0.5, 0.1, 0.3};
  Vec diff{0.7, 0.3, -0.4};
  EXPECT_NEAR(std::abs(t_born(m, y, yp) - 0.3 * w_hat(m.potential, diff)), 0, 1e-15);
}

TEST(TMatrix, SecondOrderImaginaryPartOnShell) {
  // Im T_2(y,y) = -π |y|^{d-2} ∫_{S^2} Ŵ(y - |y|ω)^2 dω; the sphere integral reduces to one polar integral
  const auto m = unit_model(1.0, 2);
  for (double p : {0.5, 1.0, 1.7}) {
    const Vec y{p, 0, 0};
    const auto& r = gauss20();
    double s = 0;
    const int panels = 16;
    for (int k = 0; k < panels; ++k)
      for (std::size_t q = 0; q < r.x.size(); ++q) {
        const double c = -1 + (2.0 / panels) * (k + 0.5 * (r.x[q] + 1));
        const double w = m.potential.hat_r2(2 * p * p * (1 - c));
        s += (1.0 / panels) * r.w[q] * 2 * pi * w * w;
      }
    const double expected = -pi * p * s;
    EXPECT_NEAR(t_term(m, 2, y, y).imag(), expected, 1e-8 * std::abs(expected)) << p;
  }
}

TEST(TMatrix, ThirdOrderIsFinite) {
  const auto m = unit_model(0.1, 3);
  const cplx v = t_term(m, 3, Vec{0.8, 0, 0}, Vec{0, 0.8, 0});
  EXPECT_TRUE(std::isfinite(v.real()) && std::isfinite(v.imag()));
  EXPECT_THROW(t_term(m, 4, Vec{1, 0, 0}, Vec{1, 0, 0}), InvalidInput);
}

TEST(CrossSection, ForwardFirstBorn) {
  const auto m = unit_model(0.1, 1);
  EXPECT_NEAR(sigma_kernel(m, Vec{1, 0, 0}, Vec{1, 0, 0}), 4 * pi * pi * 0.01, 1e-14);
}

TEST(CrossSection, TotalScalesWithCouplingSquared) {
  const double a = sigma_tot(unit_model(1e-2, 1), Vec{1, 0, 0}) / 1e-4;
  const double b = sigma_tot(unit_model(1e-3, 1), Vec{1, 0, 0}) / 1e-6;
  EXPECT_GT(a, 0);
  EXPECT_NEAR(a, b, 1e-10 * a);
}

TEST(CrossSection, TotalIsSphereIntegral) {
  const auto m = unit_model(0.2, 2);
  const double p = 1.3;
  const auto& r = gauss20();
  double s = 0;
  const int panels = 16;
  for (int k = 0; k < panels; ++k)
    for (std::size_t q = 0; q < r.x.size(); ++q) {
      const double c = -1 + (2.0 / panels) * (k + 0.5 * (r.x[q] + 1));
      s += (1.0 / panels) * r.w[q] * 2 * pi * m.sigma(p, c);
    }
  EXPECT_NEAR(m.sigma_tot(p), s, 1e-9 * s);
  EXPECT_GE(m.sigma_max(p), m.sigma(p, 1.0) * (1 - 1e-12));
}

TEST(OpticalTheorem, ZeroCoupling) { EXPECT_EQ(optical_residual(unit_model(0.0, 2), Vec{1, 0, 0}), 0.0); }

TEST(OpticalTheorem, SecondOrderResidual) {
  const auto m = unit_model(0.05, 2);
  EXPECT_LE(std::abs(optical_residual(m, Vec{1, 0, 0})) / (0.05 * 0.05), 1e-3);
  EXPECT_THROW(optical_residual(unit_model(0.05, 1), Vec{1, 0, 0}), InvalidInput);
}

TEST(OnShell, TableMatchesDirectEvaluation) {
  const auto m = unit_model(0.3, 2);
  for (double c : {-1.0, -0.3, 0.2, 0.95}) {
    const cplx direct = detail::on_shell_direct(m, 1.1, c);
    EXPECT_LT(std::abs(m.on_shell_t(1.1, c) - direct), 1e-9 * std::abs(direct)) << c;
  }
}
