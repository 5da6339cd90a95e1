#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "betalab/numeric.hpp"
#include "betalab/stats.hpp"

using namespace betalab;

TEST(Quadrature, GaussLegendreIsExactForPolynomials) {
  const auto q = gauss_legendre(10, {-1.0, 3.0});
  // int_{-1}^{3} x^k dx = (3^{k+1} - (-1)^{k+1}) / (k+1)
  for (int k = 0; k <= 19; ++k) {
    const double exact = (std::pow(3.0, k + 1) - std::pow(-1.0, k + 1)) / (k + 1);
    EXPECT_NEAR(q.integrate([&](double x) { return std::pow(x, k); }), exact, 1e-11 * std::max(1.0, std::abs(exact))) << k;
  }
}

TEST(Quadrature, GaussHermiteMoments) {
  const auto q = gauss_hermite(30);
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  EXPECT_NEAR(q.integrate([](double) { return 1.0; }), sqrt_pi, 1e-13);
  EXPECT_NEAR(q.integrate([](double x) { return x * x; }), sqrt_pi / 2, 1e-13);
  EXPECT_NEAR(q.integrate([](double x) { return x * x * x * x; }), 3 * sqrt_pi / 4, 1e-12);
  // int exp(-x^2) cos(x) = sqrt(pi) exp(-1/4)
  EXPECT_NEAR(q.integrate([](double x) { return std::cos(x); }), sqrt_pi * std::exp(-0.25), 1e-13);
}

TEST(Quadrature, ChebyshevRulesAbsorbWeights) {
  // int_{-2}^{2} x^2 / sqrt(4 - x^2) = 2 pi ; int x^2 sqrt(4 - x^2) = 2 pi
  const auto t = chebyshev_gauss_t(32);
  const auto u = chebyshev_gauss_u(32);
  EXPECT_NEAR(t.integrate([](double x) { return x * x; }), 2 * std::numbers::pi, 1e-12);
  EXPECT_NEAR(u.integrate([](double x) { return x * x; }), 2 * std::numbers::pi, 1e-12);
  EXPECT_NEAR(u.integrate([](double) { return 1.0; }), 2 * std::numbers::pi, 1e-12);
}

TEST(Quadrature, FejerRuleOnInterval) {
  const auto q = fejer1(40, {-2.2, 2.2});
  double w = 0.0;
  for (double v : q.weights) {
    EXPECT_GT(v, 0.0);
    w += v;
  }
  EXPECT_NEAR(w, 4.4, 1e-13);
  EXPECT_NEAR(q.integrate([](double x) { return std::exp(x); }), std::exp(2.2) - std::exp(-2.2), 1e-12);
  for (std::size_t i = 1; i < q.size(); ++i) EXPECT_LT(q.nodes[i - 1], q.nodes[i]);
}

TEST(ChebSeries, InterpolatesAndDifferentiates) {
  const Interval d{-2.2, 2.2};
  const auto s = ChebSeries::interpolate([](double x) { return std::sin(x) * std::exp(0.3 * x); }, d, 40);
  const auto ds = s.derivative();
  for (double x = -2.2; x <= 2.2; x += 0.173) {
    EXPECT_NEAR(s(x), std::sin(x) * std::exp(0.3 * x), 1e-13);
    EXPECT_NEAR(ds(x), (std::cos(x) + 0.3 * std::sin(x)) * std::exp(0.3 * x), 1e-11);
  }
  EXPECT_LT(s.chopped(1e-14).coeffs().size(), 40u);
}

TEST(PowerSeries, ArithmeticMatchesClosedForms) {
  // sqrt(1 + x) = 1 + x/2 - x^2/8 + x^3/16
  const auto r = series::sqrt({1.0, 1.0}, 4);
  EXPECT_NEAR(r[1], 0.5, 1e-15);
  EXPECT_NEAR(r[2], -0.125, 1e-15);
  EXPECT_NEAR(r[3], 0.0625, 1e-15);
  // (1 + y)^2 with y = x + x^2 -> 1 + 2x + 3x^2 + 2x^3 + x^4
  const auto c = series::compose({1.0, 2.0, 1.0}, {0.0, 1.0, 1.0}, 5);
  const double expect[] = {1, 2, 3, 2, 1};
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(c[k], expect[k], 1e-15);
  EXPECT_NEAR(series::evaluate({1.0, 2.0, 3.0}, 0.5), 1.0 + 1.0 + 0.75, 1e-15);
}

TEST(RootFinding, FindsBracketedRoot) {
  EXPECT_NEAR(find_root([](double x) { return std::cos(x) - x; }, 0.0, 1.0), 0.7390851332151607, 1e-14);
  EXPECT_THROW(find_root([](double x) { return x * x + 1.0; }, -1.0, 1.0), Error);
}

TEST(Stats, MomentsAndStandardErrors) {
  std::vector<double> x{1, 2, 3, 4, 5, 6, 7, 8};
  const auto m = stats::moments(x);
  EXPECT_DOUBLE_EQ(m.mean, 4.5);
  EXPECT_DOUBLE_EQ(m.variance, 6.0);
  EXPECT_NEAR(m.mean_se, std::sqrt(6.0 / 8.0), 1e-15);
  EXPECT_GT(m.variance_se, 0.0);
}

TEST(Stats, KolmogorovTailKnownValues) {
  // Standard critical values of the Kolmogorov distribution.
  EXPECT_NEAR(stats::kolmogorov_tail(1.3581), 0.05, 2e-4);
  EXPECT_NEAR(stats::kolmogorov_tail(1.6276), 0.01, 2e-4);
  EXPECT_DOUBLE_EQ(stats::kolmogorov_tail(0.0), 1.0);
}

TEST(Stats, KsDistancesOnSimpleSamples) {
  std::vector<double> u;
  for (int i = 0; i < 100; ++i) u.push_back((i + 0.5) / 100.0);
  EXPECT_NEAR(stats::ks_one_sample(u, [](double x) { return x; }).distance, 0.005, 1e-12);
  std::vector<double> a{0.1, 0.2, 0.3}, b{0.7, 0.8, 0.9};
  EXPECT_DOUBLE_EQ(stats::ks_two_sample(a, b).distance, 1.0);
  EXPECT_DOUBLE_EQ(stats::ks_two_sample(a, a).distance, 0.0);
}

TEST(Stats, ShapiroFranciaSeparatesNormalFromSkewed) {
  std::vector<double> normal, skewed;
  for (int i = 1; i <= 500; ++i) {
    const double p = (i - 0.5) / 500.0;
    // normal quantiles via the inverse error function surrogate: bisection on erfc
    const double z = find_root([&](double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)) - p; }, -10.0, 10.0);
    normal.push_back(z);
    skewed.push_back(-std::log(1.0 - p));
  }
  EXPECT_GT(stats::shapiro_francia(normal).p_value, 0.5);
  EXPECT_LT(stats::shapiro_francia(skewed).p_value, 1e-6);
  EXPECT_THROW(stats::shapiro_francia({1.0, 2.0}), Error);
}

TEST(Stats, AutocorrelationOfAr1) {
  // AR(1) with coefficient a has tau = (1 + a) / (1 - a).
  const double a = 0.8;
  std::vector<double> x(200000);
  std::uint64_t s = 12345;
  double prev = 0.0;
  for (auto& v : x) {
    double u = 0.0;
    for (int k = 0; k < 12; ++k) {
      s = s * 6364136223846793005ULL + 1442695040888963407ULL;
      u += static_cast<double>(s >> 11) / 9007199254740992.0;
    }
    prev = a * prev + (u - 6.0);
    v = prev;
  }
  EXPECT_NEAR(stats::integrated_autocorrelation(x), 9.0, 0.6);
}
