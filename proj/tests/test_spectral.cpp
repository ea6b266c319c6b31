#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "casimir/spectral.hpp"

using namespace casimir;

TEST(Spectral, GaussLegendreExactForPolynomials) {
  for (int n : {4, 7, 16, 64}) {
    const auto r = gauss_legendre(n);
    for (int p = 0; p < 2 * n; ++p) {
      double s = 0;
      for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], p);
      EXPECT_NEAR(s, 1.0 / (p + 1), 1e-13) << "n=" << n << " p=" << p;
    }
    for (std::size_t i = 1; i < r.size(); ++i) EXPECT_LT(r.nodes[i - 1], r.nodes[i]);
  }
}

TEST(Spectral, ExponentialCutoffIntegral) {
  const double a = 0.1;
  const auto g = make_grid(a, 64, 64);
  const auto e = integrate_xi(g, [&](double xi) { return std::exp(-2 * xi * a); });
  EXPECT_NEAR(e.value, 1 / (2 * a), 1e-8 / (2 * a));
  EXPECT_LT(e.error, 1e-3);
}

TEST(Spectral, AgreesWithFineReference) {
  const double a = 0.25;
  auto f = [&](double xi, double k) { return k * std::exp(-2 * a * std::sqrt(xi * xi + k * k)) / (1 + xi); };
  const auto coarse = integrate(make_grid(a, 64, 64), f);
  const auto fine = integrate(make_grid(a, 4096, 64), f);
  EXPECT_NEAR(coarse.value, fine.value, 1e-6 * std::abs(fine.value));
}

TEST(Spectral, TensorIntegral) {
  const double a = 0.3;
  const auto e = integrate(make_grid(a, 48, 48), [&](double x, double y) { return std::exp(-2 * a * (x + y)); });
  EXPECT_NEAR(e.value, 1 / (4 * a * a), 1e-9);
}

TEST(Spectral, RejectsBadGrids) {
  EXPECT_THROW(make_grid(0.1, 3, 16), DomainError);
  EXPECT_THROW(make_grid(0.1, 16, 2), DomainError);
  EXPECT_THROW(make_grid(0.0, 16, 16), DomainError);
  EXPECT_THROW(make_grid(-1.0, 16, 16), DomainError);
}

TEST(Spectral, NonFiniteIntegrandNamesTheNode) {
  const auto g = make_grid(1.0, 8, 8);
  try {
    integrate(g, [](double xi, double) { return xi > 1 ? std::numeric_limits<double>::quiet_NaN() : 1.0; });
    FAIL() << "expected IntegrandError";
  } catch (const IntegrandError& e) {
    EXPECT_GT(e.xi(), 1.0);
  }
}

TEST(Spectral, WorkerCountDoesNotChangeBits) {
  const auto g = make_grid(0.1, 32, 32);
  auto f = [](double xi, double k) { return std::sin(xi) * std::exp(-0.2 * (xi + k)) / (1 + k); };
  const auto one = integrate(g, f, {1, true});
  const auto four = integrate(g, f, {4, true});
  EXPECT_EQ(one.value, four.value);
  EXPECT_EQ(one.error, four.error);
}

TEST(Spectral, VectorIntegrand) {
  const auto g = make_grid(0.5, 32, 32);
  const auto e = integrate(g, [](double x, double y) {
    return Eigen::Vector2d(std::exp(-x - y), 2 * std::exp(-x - y));
  });
  EXPECT_NEAR(e.value[0], 1.0, 1e-9);
  EXPECT_NEAR(e.value[1], 2.0, 1e-9);
}

TEST(Spectral, CompensatedSummation) {
  CompensatedSum<double> s(0.0);
  for (double x : {1.0, 1e100, 1.0, -1e100}) s.add(x);
  EXPECT_EQ(s.value(), 2.0);
}
