#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "betalab/stats.hpp"
#include "betalab/transport.hpp"

using namespace betalab;
using boost::math::quadrature::gauss_kronrod;

namespace {

constexpr double pi = std::numbers::pi;

EquilibriumData quartic_eq(double g) {
  PotentialSpec s;
  s.kind = PotentialKind::even_quartic;
  s.g = g;
  return compute_P(make_potential(s));
}

double semicircle_cdf(double x) { return 0.5 + (x * std::sqrt(4 - x * x) / 2 + 2 * std::asin(x / 2)) / (2 * pi); }

// CDF of (g x^2 + 1 - g) sqrt(4 - x^2) / (2 pi) by adaptive quadrature in the angle.
double quartic_cdf(double g, double x) {
  if (x <= -2) return 0.0;
  if (x >= 2) return 1.0;
  const double t0 = std::acos(x / 2);
  return gauss_kronrod<double, 61>::integrate(
      [&](double t) {
        const double y = 2 * std::cos(t);
        return (g * y * y + 1 - g) * 4 * std::sin(t) * std::sin(t) / (2 * pi);
      },
      t0, pi);
}

double bisect(const std::function<double(double)>& f, double lo, double hi) {
  boost::math::tools::eps_tolerance<double> tol(52);
  const auto r = boost::math::tools::bisect(f, lo, hi, tol);
  return 0.5 * (r.first + r.second);
}

}  // namespace

TEST(Transport, GaussianIsIdentity) {
  const auto e = compute_P(make_potential({}));
  const auto t = solve_transport(e);
  for (int i = 0; i <= 440; ++i) {
    const double x = -2.2 + 4.4 * i / 440.0;
    EXPECT_NEAR(t.zeta(x), x, 1e-8);
    EXPECT_NEAR(t.zeta_prime(x), 1.0, 1e-8);
  }
  EXPECT_NEAR(t.zeta(0.7), 0.7, 1e-12);
  for (double c : t.left().coeffs) EXPECT_NEAR(c, 0.0, 1e-10);
  EXPECT_NEAR(t.left().leading, 1.0, 1e-12);
}

TEST(Transport, QuarticMatchesCdfOracle) {
  const double g = 0.1;
  const auto e = quartic_eq(g);
  const auto t = solve_transport(e);
  for (double x : {-1.99, -1.5, -0.7, 0.0, 0.3, 1.2, 1.95, 1.999}) {
    const double target = semicircle_cdf(x);
    const double z = bisect([&](double y) { return quartic_cdf(g, y) - target; }, -2.0, 2.0);
    EXPECT_NEAR(t.zeta(x), z, 1e-9) << x;
  }
  EXPECT_NEAR(t.zeta(-2.0), -2.0, 1e-8);
  EXPECT_NEAR(t.zeta(2.0), 2.0, 1e-8);
  EXPECT_LT(transport_residual(t), 1e-7);
}

TEST(Transport, MonotoneOnWholeDomain) {
  const auto e = quartic_eq(0.2);
  const auto t = solve_transport(e);
  const Interval d = t.domain();
  for (int i = 0; i < 1024; ++i) {
    const double x = d.lo + d.length() * i / 1023.0;
    EXPECT_GT(t.zeta_prime(x), 0.0) << x;
  }
}

TEST(Transport, EdgeSeriesAgreesWithInteriorOnOverlap) {
  const auto e = quartic_eq(0.1);
  const auto t = solve_transport(e);
  const double de = t.delta_e();
  for (int i = 0; i <= 20; ++i) {
    const double x = 2.0 - de - 0.05 + 0.1 * de * i / 20.0;
    if (x > 2.0 - de / 2.0) continue;
    EXPECT_NEAR(t.interior()(-x), -2.0 + t.left().offset(2.0 - x), 1e-8);
    EXPECT_NEAR(t.interior()(x), 2.0 - t.right().offset(2.0 - x), 1e-8);
  }
  EXPECT_LT(overlap_discrepancy(t), 1e-8);
}

TEST(Transport, EdgeExponent) {
  const auto e = quartic_eq(0.1);
  const auto t = solve_transport(e);
  const double expected = std::pow(1.3, -2.0 / 3.0);
  EXPECT_NEAR(t.left().leading, expected, 1e-10);
  const double x = 1e-4;
  EXPECT_NEAR((t.zeta(x - 2.0) + 2.0) / x, expected, 1e-5);
  EXPECT_NEAR((2.0 - t.zeta(2.0 - x)) / x, expected, 1e-5);
}

TEST(Transport, MassConservation) {
  const auto e = quartic_eq(0.1);
  const auto t = solve_transport(e);
  const double m = gauss_kronrod<double, 61>::integrate(
      [&](double th) {
        const double x = 2 * std::cos(th);
        return e.rho(t.zeta(x)) * t.zeta_prime(x) * 2 * std::sin(th);
      },
      0.0, pi);
  EXPECT_NEAR(m, 1.0, 1e-7);
}

TEST(Transport, PushforwardOfSemicircle) {
  const double g = 0.1;
  const auto e = quartic_eq(g);
  const auto t = solve_transport(e);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> z;
  for (int i = 0; i < 100000; ++i) {
    const double p = u(rng);
    const double x = bisect([&](double y) { return semicircle_cdf(y) - p; }, -2.0, 2.0);
    z.push_back(t.zeta(x));
  }
  // Tabulate the oracle CDF once and interpolate linearly.
  std::vector<double> grid(2001), cdf(2001);
  for (int i = 0; i <= 2000; ++i) {
    grid[i] = -2.0 + 4.0 * i / 2000.0;
    cdf[i] = quartic_cdf(g, grid[i]);
  }
  auto f = [&](double x) {
    if (x <= -2) return 0.0;
    if (x >= 2) return 1.0;
    const double s = (x + 2.0) / 4.0 * 2000.0;
    const auto i = std::min<std::size_t>(1999, static_cast<std::size_t>(s));
    return cdf[i] + (cdf[i + 1] - cdf[i]) * (s - static_cast<double>(i));
  };
  EXPECT_LT(stats::ks_one_sample(z, f).distance, 0.01);
}

TEST(Transport, OutOfDomain) {
  const auto e = quartic_eq(0.1);
  const auto t = solve_transport(e);
  try {
    t.zeta(2.5);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::out_of_domain);
  }
  EXPECT_THROW(t.zeta_prime(-2.3), Error);
}

TEST(EdgeSeries, GaussianCoefficientsVanish) {
  const auto e = compute_P(make_potential({}));
  const auto s = edge_series(e, Edge::right, 32);
  EXPECT_NEAR(s.leading, 1.0, 1e-12);
  for (double c : s.coeffs) EXPECT_NEAR(c, 0.0, 1e-12);
}

TEST(EdgeSeries, ZeroLeadingPRejected) {
  try {
    edge_series_from_taylor({0.0, 1.0}, 16);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::zero_leading_p);
  }
  EXPECT_THROW(edge_series_from_taylor({1.0}, 65), Error);
}

TEST(EdgeSeries, SolvesTheEdgeEquation) {
  // For P(t - 2) = 1.3 - 0.4 t + 0.1 t^2 (the quartic g = 0.1 at the left edge), y = a x (1 + u(x))
  // must satisfy P(y - 2) sqrt(y (4 - y)) y' = sqrt(x (4 - x)).
  const auto s = edge_series_from_taylor({1.3, -0.4, 0.1}, 40);
  for (double x : {0.01, 0.05, 0.1, 0.2}) {
    const double y = s.offset(x);
    const double dy = s.offset_prime(x);
    const double p = 1.3 - 0.4 * y + 0.1 * y * y;
    EXPECT_NEAR(p * std::sqrt(y * (4 - y)) * dy, std::sqrt(x * (4 - x)), 1e-12) << x;
  }
  EXPECT_GT(s.radius, 1.0);
}

TEST(Transport, ValidMarginIsReported) {
  const auto e = quartic_eq(0.1);
  const auto t = solve_transport(e);
  EXPECT_GE(max_valid_margin(t), 0.2);
}

TEST(Transport, ViewOutlivesMap) {
  MapView v;
  double expected = 0.0;
  {
    const auto t = solve_transport(quartic_eq(0.1));
    v = t.view();
    expected = t.zeta(1.3);
  }
  EXPECT_EQ(v.zeta(1.3), expected);
  EXPECT_GT(v.zeta_prime(-2.1), 0.0);
}
