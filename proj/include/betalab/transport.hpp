#pragma once

// The increasing map zeta with rho(zeta(x)) zeta'(x) = rho_sc(x): an ODE solution on
// the interior glued to power series at the two soft edges.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <limits>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "betalab/equilibrium.hpp"
#include "betalab/error.hpp"
#include "betalab/numeric.hpp"

namespace betalab {

enum class Edge { left, right };

inline std::string to_string(Edge e) { return e == Edge::left ? "left" : "right"; }

struct TransportOptions {
  double delta_e = 0.1;
  std::size_t series_order = 32;
  std::size_t interior_nodes = 96;
  double ode_tolerance = 1e-14;
  /// Radius of the circle used to read off Taylor coefficients of P at an edge.
  double taylor_radius = 0.25;
};

/// Local form of the map at an edge. With x the distance from the edge
/// (x = lambda + 2 on the left, x = 2 - lambda on the right)
///   |zeta - edge| = leading * x * (1 + sum_{k>=1} coeffs[k] x^k).
struct EdgeSeries {
  Edge edge = Edge::left;
  double leading = 1.0;
  std::vector<double> coeffs;  ///< coeffs[0] == 0
  double radius = std::numeric_limits<double>::infinity();

  /// leading * x * (1 + u(x))
  double offset(double x) const { return leading * x * (1.0 + series::evaluate(coeffs, x)); }
  /// d/dx of offset
  double offset_prime(double x) const {
    double s = 1.0, xk = 1.0;
    for (std::size_t k = 1; k < coeffs.size(); ++k) {
      xk *= x;
      s += static_cast<double>(k + 1) * coeffs[k] * xk;
    }
    return leading * s;
  }
};

namespace detail {

/// Taylor coefficients of f at `center` by the trapezoid rule on a circle.
template <class F>
std::vector<double> taylor_coefficients(F&& f, double center, double radius, std::size_t count, double noise = 1e-13) {
  const std::size_t m = std::max<std::size_t>(64, 2 * count + 2);
  std::vector<std::complex<double>> vals(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double t = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(m);
    vals[j] = f(std::complex<double>(center, 0.0) + std::polar(radius, t));
  }
  double top = 0.0;
  for (const auto& v : vals) top = std::max(top, std::abs(v));
  std::vector<double> c(count);
  double rk = 1.0;
  for (std::size_t k = 0; k < count; ++k) {
    std::complex<double> s = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      s += vals[j] * std::polar(1.0, -2.0 * kPi * static_cast<double>(k * j % m) / static_cast<double>(m));
    const double a = s.real() / static_cast<double>(m);
    // Rounding noise is amplified by radius^-k; drop what it cannot resolve.
    c[k] = std::abs(a) > noise * top ? a / rk : 0.0;
    rk *= radius;
  }
  return c;
}

inline double series_radius(const std::vector<double>& u) {
  double r = std::numeric_limits<double>::infinity();
  const std::size_t k_max = u.size() - 1;
  for (std::size_t k = std::max<std::size_t>(1, k_max / 2); k <= k_max; ++k) {
    const double a = std::abs(u[k]);
    if (a > 1e-300) r = std::min(r, std::pow(a, -1.0 / static_cast<double>(k)));
  }
  return r;
}

}  // namespace detail

/// Solves the edge recursion from Taylor coefficients p[j] of P(edge + t) in the
/// orientation where the edge sits at -2 (for the right edge pass those of P(-z)).
/// sqrt(a) P(y - 2) sqrt((1 + u)(4 - y)) y' = sqrt(4 - x), y = a x (1 + u), a = p0^{-2/3};
/// the order-k coefficient of u enters linearly with weight (2k + 3).
inline EdgeSeries edge_series_from_taylor(const std::vector<double>& p, std::size_t order, Edge edge = Edge::left) {
  if (order > 64) fail(Errc::precondition, "edge series order must be <= 64");
  if (p.empty() || std::abs(p[0]) < 1e-12) fail(Errc::zero_leading_p, "P vanishes at the " + to_string(edge) + " edge");
  if (p[0] < 0.0) fail(Errc::not_generic, "P is negative at the " + to_string(edge) + " edge");
  EdgeSeries s;
  s.edge = edge;
  s.leading = std::pow(p[0], -2.0 / 3.0);
  const double a = s.leading;
  const double sa = std::sqrt(a);
  s.coeffs.assign(order + 1, 0.0);
  const auto rhs = series::sqrt({4.0, -1.0}, order + 1);
  for (std::size_t k = 1; k <= order; ++k) {
    const std::size_t len = k + 1;
    series::Series u(s.coeffs.begin(), s.coeffs.begin() + static_cast<std::ptrdiff_t>(len));
    // y to order len (for y') and its truncation to order len - 1 (for composition).
    series::Series y_full(len + 1, 0.0);
    for (std::size_t j = 0; j < len; ++j) y_full[j + 1] = a * ((j == 0 ? 1.0 : 0.0) + u[j]);
    const auto dy = series::derivative(y_full);
    const series::Series y(y_full.begin(), y_full.begin() + static_cast<std::ptrdiff_t>(len));
    const auto pc = series::compose(p, y, len);
    series::Series one_u = u;
    one_u[0] += 1.0;
    series::Series four_y(len, 0.0);
    for (std::size_t j = 0; j < len; ++j) four_y[j] = -y[j];
    four_y[0] += 4.0;
    const auto root = series::sqrt(series::multiply(one_u, four_y, len), len);
    const auto lhs = series::multiply(series::multiply(pc, root, len), dy, len);
    const double residual = rhs[k] - sa * lhs[k];
    s.coeffs[k] = residual / (2.0 * static_cast<double>(k) + 3.0);
  }
  s.radius = detail::series_radius(s.coeffs);
  return s;
}

/// Edge series of the transport map for an equilibrium density.
inline EdgeSeries edge_series(const EquilibriumData& e, Edge edge, std::size_t order = 32, double taylor_radius = 0.25) {
  const ChebSeries pc = e.p_series().chopped(1e-13);
  std::vector<double> p;
  if (edge == Edge::left) {
    p = detail::taylor_coefficients([&](std::complex<double> z) { return pc(z); }, -2.0, taylor_radius, order + 1);
  } else {
    p = detail::taylor_coefficients([&](std::complex<double> z) { return pc(z); }, 2.0, taylor_radius, order + 1);
    for (std::size_t j = 1; j < p.size(); j += 2) p[j] = -p[j];
  }
  return edge_series_from_taylor(p, order, edge);
}

/// A map and its derivative as plain callables, so that perturbed maps can be
/// pushed through the same operators as solved ones.
struct MapView {
  std::string id;
  Interval domain;
  std::function<double(double)> zeta;
  std::function<double(double)> zeta_prime;
};

inline MapView identity_map(Interval domain) {
  return {"identity", domain, [](double x) { return x; }, [](double) { return 1.0; }};
}

class TransportMap {
 public:
  const EquilibriumData& equilibrium() const { return eq_; }
  const ChebSeries& interior() const { return interior_; }
  const EdgeSeries& left() const { return left_; }
  const EdgeSeries& right() const { return right_; }
  double delta_e() const { return delta_e_; }
  double zeta_at_zero() const { return zeta0_; }
  /// sigma_epsilon, where evaluation is allowed.
  Interval domain() const { return domain_; }

  double zeta(double x) const {
    check(x);
    return zeta_unchecked(x);
  }

  /// zeta' from the defining relation on the interior, from the edge series near the edges.
  double zeta_prime(double x) const {
    check(x);
    if (std::abs(x) <= 2.0 - delta_e_) {
      const double z = interior_(x);
      return std::sqrt(4.0 - x * x) / (eq_.P(z) * std::sqrt(4.0 - z * z));
    }
    return zeta_prime_series(x);
  }

  /// Derivative of the stored representation (interpolant or series), used by residual checks.
  double representation_derivative(double x) const {
    if (std::abs(x) <= 2.0 - delta_e_) return dinterior_(x);
    return zeta_prime_series(x);
  }

  /// Evaluates beyond sigma_epsilon; edge series only.
  double zeta_unchecked(double x) const {
    if (x < -(2.0 - delta_e_)) return -2.0 + left_.offset(x + 2.0);
    if (x > 2.0 - delta_e_) return 2.0 - right_.offset(2.0 - x);
    return interior_(x);
  }

  double zeta_prime_series(double x) const {
    if (x < 0.0) return left_.offset_prime(x + 2.0);
    return right_.offset_prime(2.0 - x);
  }

  /// The view owns a copy of the map, so it may outlive this object.
  MapView view() const {
    auto self = std::make_shared<const TransportMap>(*this);
    return {"transport", domain_, [self](double x) { return self->zeta(x); }, [self](double x) { return self->zeta_prime(x); }};
  }

 private:
  friend TransportMap solve_transport(const EquilibriumData& e, const TransportOptions& opts);

  void check(double x) const {
    if (!(x >= domain_.lo - 1e-12 && x <= domain_.hi + 1e-12))
      fail(Errc::out_of_domain, "transport map evaluated at " + detail::format_number(x) + " outside its domain");
  }

  EquilibriumData eq_;
  ChebSeries interior_, dinterior_;
  EdgeSeries left_, right_;
  double delta_e_ = 0.1;
  double zeta0_ = 0.0;
  Interval domain_{};
};

inline TransportMap solve_transport(const EquilibriumData& e, const TransportOptions& opts = {}) {
  namespace ode = boost::numeric::odeint;
  if (!(e.genericity_margin() > 0.0)) fail(Errc::not_generic, "transport needs a generic density");
  if (!(opts.delta_e > 0.0 && opts.delta_e < 1.0)) fail(Errc::precondition, "delta_e must lie in (0, 1)");
  TransportMap t;
  t.eq_ = e;
  t.delta_e_ = opts.delta_e;
  t.domain_ = widened_support(e.potential().epsilon());
  t.zeta0_ = e.quantile(0.5);

  // The interpolant reaches half of delta_e past the switch point so both forms overlap.
  const double reach = 2.0 - 0.5 * opts.delta_e;
  const Interval iv{-reach, reach};
  const std::size_t n = opts.interior_nodes;
  std::vector<double> xs(n), values(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < n; ++j) xs[j] = reach * std::cos(kPi * (static_cast<double>(j) + 0.5) / static_cast<double>(n));

  using State = std::array<double, 1>;
  auto rhs = [&e](const State& s, State& ds, double x) {
    const double z = s[0];
    const double denom = e.P(z) * std::sqrt(std::max(0.0, 4.0 - z * z));
    ds[0] = std::sqrt(4.0 - x * x) / denom;
  };

  auto run = [&](bool forward) {
    std::vector<double> times{0.0};
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < n; ++j) {
      if ((forward && xs[j] > 0.0) || (!forward && xs[j] < 0.0)) idx.push_back(j);
    }
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return std::abs(xs[a]) < std::abs(xs[b]); });
    for (std::size_t j : idx) times.push_back(xs[j]);
    State s{t.zeta0_};
    std::size_t hit = 0;
    auto observer = [&](const State& st, double) {
      if (hit > 0) values[idx[hit - 1]] = st[0];
      ++hit;
    };
    auto stepper = ode::make_controlled(opts.ode_tolerance, opts.ode_tolerance, ode::runge_kutta_fehlberg78<State>());
    try {
      ode::integrate_times(stepper, rhs, s, times.begin(), times.end(), forward ? 1e-3 : -1e-3, observer,
                           ode::max_step_checker(5000));
    } catch (const std::exception& ex) {
      fail(Errc::ode_failure, std::string("transport ODE failed: ") + ex.what());
    }
  };
  run(true);
  run(false);
  for (double v : values)
    if (!std::isfinite(v) || std::abs(v) >= 2.0) fail(Errc::ode_failure, "transport ODE left the support");

  t.interior_ = ChebSeries::from_values(values, iv);
  t.dinterior_ = t.interior_.derivative();
  t.left_ = edge_series(e, Edge::left, opts.series_order, opts.taylor_radius);
  t.right_ = edge_series(e, Edge::right, opts.series_order, opts.taylor_radius);

  // Truncated series must converge on the whole edge zone, including the overlap and the
  // stretch beyond the support.
  const double needed = std::max(opts.delta_e, e.potential().epsilon());
  for (const EdgeSeries* s : {&t.left_, &t.right_}) {
    if (!(s->radius > 1.5 * needed))
      fail(Errc::series_divergence, to_string(s->edge) + " edge series radius " + detail::format_number(s->radius) +
                                        " does not cover the edge zone");
  }
  return t;
}

/// rho(zeta) zeta' - rho_sc on the support, with zeta' taken from the stored representation.
inline double transport_residual_at(const TransportMap& t, double x) {
  const double z = t.zeta_unchecked(x);
  const double dz = t.representation_derivative(x);
  const auto& e = t.equilibrium();
  const double lhs = e.P(z) * std::sqrt(std::max(0.0, 4.0 - z * z)) * dz;
  const double rhs = std::sqrt(std::max(0.0, 4.0 - x * x));
  return (lhs - rhs) / (2.0 * kPi);
}

inline double transport_residual(const TransportMap& t, std::size_t grid = 512) {
  double r = 0.0;
  for (std::size_t i = 0; i < grid; ++i) {
    const double x = -2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(grid - 1);
    r = std::max(r, std::abs(transport_residual_at(t, x)));
  }
  return r;
}

/// Largest gap between the interior interpolant and the edge series on the zones where both apply,
/// 2 - delta_e <= |x| <= 2 - delta_e / 2.
inline double overlap_discrepancy(const TransportMap& t, std::size_t points = 64) {
  const double de = t.delta_e();
  double r = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double x = 2.0 - de + 0.5 * de * static_cast<double>(i) / static_cast<double>(points - 1);
    r = std::max(r, std::abs(t.interior()(-x) - (-2.0 + t.left().offset(2.0 - x))));
    r = std::max(r, std::abs(t.interior()(x) - (2.0 - t.right().offset(2.0 - x))));
  }
  return r;
}

/// Largest distance past the support for which the continued relation
/// P(zeta) sqrt(zeta^2 - 4) zeta' = sqrt(x^2 - 4) holds to `tol` with zeta' > 0.
inline double max_valid_margin(const TransportMap& t, double tol = 1e-7, double step = 0.005, double limit = 1.0) {
  const ChebSeries pc = t.equilibrium().p_series().chopped(1e-13);
  const double cap = std::min(limit, 0.9 * std::min(t.left().radius, t.right().radius));
  double best = 0.0;
  for (int i = 1; i * step <= cap + 1e-12; ++i) {
    const double m = i * step;
    bool ok = true;
    for (double x : {-2.0 - m, 2.0 + m}) {
      const double z = t.zeta_unchecked(x);
      const double dz = t.zeta_prime_series(x);
      const double lhs = pc(z) * std::sqrt(std::max(0.0, z * z - 4.0)) * dz;
      const double rhs = std::sqrt(x * x - 4.0);
      if (!(dz > 0.0) || !(std::abs(lhs - rhs) / (2.0 * kPi) < tol)) ok = false;
    }
    if (!ok) break;
    best = m;
  }
  return best;
}

}  // namespace betalab
