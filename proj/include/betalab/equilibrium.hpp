#pragma once

// Equilibrium density rho = P(x) sqrt(4 - x^2) / (2 pi) of a one-cut potential
// normalized to the support [-2, 2].

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "betalab/error.hpp"
#include "betalab/function.hpp"
#include "betalab/numeric.hpp"
#include "betalab/potentials.hpp"

namespace betalab {

struct EquilibriumOptions {
  std::size_t contour_nodes = 512;
  /// Semi-major axis of the contour; 0 selects 2 + min(1, analyticity radius) / 2.
  double contour_radius = 0.0;
  std::size_t cheb_nodes = 64;
  std::size_t check_grid = 512;
  std::size_t outside_probes = 32;
  double v_tolerance = 1e-6;
  double mass_tolerance = 1e-8;
  /// P must exceed this fraction of max |P| on the support.
  double genericity_tolerance = 1e-8;
};

/// The contour used for P: the ellipse w + 1/w, |w| = R, with foci at +-2.
/// Along it dz / X^{1/2}(z) = i dtheta, so the trapezoid rule carries no weight.
inline double contour_parameter(double semi_major) { return 0.5 * (semi_major + std::sqrt(semi_major * semi_major - 4.0)); }

inline double default_contour_radius(const Potential& v) {
  const double a = v.analyticity_radius();
  double r = 2.0 + 0.5 * std::min(1.0, a);
  // Keep the semi-minor axis inside the strip of analyticity.
  if (std::isfinite(a) && std::sqrt(r * r - 4.0) > 0.5 * a) r = std::sqrt(4.0 + 0.25 * a * a);
  return r;
}

/// P(z) = (1 / 2 pi i) \oint (V'(z) - V'(s)) / ((z - s) X^{1/2}(s)) ds by the trapezoid rule.
inline std::complex<double> contour_P(const Potential& v, std::complex<double> z, double semi_major,
                                      std::size_t nodes = 512) {
  if (!(semi_major > 2.0)) fail(Errc::precondition, "contour must enclose [-2, 2]");
  const double big_r = contour_parameter(semi_major);
  const std::complex<double> vz = v.derivative(z);
  std::complex<double> acc = 0.0;
  for (std::size_t m = 0; m < nodes; ++m) {
    const double theta = 2.0 * kPi * static_cast<double>(m) / static_cast<double>(nodes);
    const std::complex<double> w = std::polar(big_r, theta);
    const std::complex<double> s = w + 1.0 / w;
    const std::complex<double> dz = z - s;
    if (std::abs(dz) < 1e-13) fail(Errc::coincident_nodes, "evaluation point on the contour");
    acc += (vz - v.derivative(s)) / dz;
  }
  return acc / static_cast<double>(nodes);
}

/// Logarithmic potential of the density g(y)/sqrt(4 - y^2), g = sum c_k T_k(y/2).
/// Uses int log|x - y| T_k(y/2) / sqrt(4 - y^2) dy = -(pi/k) T_k(x/2) on [-2, 2] (0 for k = 0)
/// and the decaying branch (x/2 - sgn sqrt(x^2/4 - 1))^k outside.
inline double weighted_log_potential(const std::vector<double>& c, double x) {
  if (c.empty()) return 0.0;
  if (std::abs(x) <= 2.0) {
    const double theta = std::acos(std::clamp(x / 2.0, -1.0, 1.0));
    double s = 0.0;
    for (std::size_t k = 1; k < c.size(); ++k)
      s -= kPi / static_cast<double>(k) * c[k] * std::cos(static_cast<double>(k) * theta);
    return s;
  }
  const double t = std::abs(x) / 2.0;
  const double root = std::sqrt(t * t - 1.0);
  const double z = (t - root) * (x < 0 ? -1.0 : 1.0);
  double s = c[0] * kPi * std::log(t + root);
  double zk = 1.0;
  for (std::size_t k = 1; k < c.size(); ++k) {
    zk *= z;
    s -= kPi / static_cast<double>(k) * c[k] * zk;
  }
  return s;
}

/// Moment integrals used to keep a perturbed potential's support at [-2, 2].
struct RecenteringCoeffs {
  double c1 = 0.0;
  double c2 = 0.0;
};

class EquilibriumData {
 public:
  const Potential& potential() const { return potential_; }
  /// Chebyshev coefficients of P on sigma_epsilon.
  const ChebSeries& p_series() const { return p_; }
  /// Chebyshev coefficients (in T_k(x/2)) of rho(x) sqrt(4 - x^2) = P(x)(4 - x^2)/(2 pi) on [-2, 2].
  const ChebSeries& weighted_density() const { return g_; }
  double genericity_margin() const { return margin_; }
  double robin_constant() const { return robin_; }
  double v_residual() const { return v_residual_; }
  /// max over probes outside sigma of v(x) - robin constant (negative for accepted potentials).
  double outside_excess() const { return outside_excess_; }
  double mass() const { return mass_; }
  double contour_radius() const { return contour_radius_; }
  Interval extended_domain() const { return p_.domain(); }

  double P(double x) const { return p_(x); }
  std::complex<double> P(std::complex<double> z) const { return p_(z); }
  double P_prime(double x) const { return dp_(x); }

  double rho(double x) const {
    if (std::abs(x) >= 2.0) return 0.0;
    return p_(x) * std::sqrt(4.0 - x * x) / (2.0 * kPi);
  }

  /// int_{-2}^{x} rho, in closed form from the weighted Chebyshev coefficients.
  double cdf(double x) const {
    if (x <= -2.0) return 0.0;
    if (x >= 2.0) return 1.0;
    const double theta = std::acos(x / 2.0);
    const auto& c = g_.coeffs();
    double f = c[0] * (kPi - theta);
    for (std::size_t k = 1; k < c.size(); ++k) f -= c[k] * std::sin(static_cast<double>(k) * theta) / static_cast<double>(k);
    return f;
  }

  double quantile(double u) const {
    if (u <= 0.0) return -2.0;
    if (u >= 1.0) return 2.0;
    return find_root([&](double x) { return cdf(x) - u; }, -2.0, 2.0, 1e-15);
  }

  /// L[rho](x) = int log|x - y| rho(y) dy, valid on the whole real line.
  double log_potential(double x) const { return weighted_log_potential(g_.coeffs(), x); }

  /// v(x) = 2 L[rho](x) - V(x).
  double effective_potential(double x) const { return 2.0 * log_potential(x) - potential_.value(x); }

  /// int h rho by Chebyshev-Gauss quadrature.
  double expectation(const std::function<double(double)>& h, std::size_t nodes = 256) const {
    const auto q = chebyshev_gauss_t(nodes);
    double s = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) s += q.weights[j] * h(q.nodes[j]) * g_(q.nodes[j]);
    return s;
  }

 private:
  friend EquilibriumData compute_P(const Potential& v, const EquilibriumOptions& opts);

  Potential potential_;
  ChebSeries p_, dp_, g_;
  double margin_ = 0.0;
  double robin_ = 0.0;
  double v_residual_ = 0.0;
  double outside_excess_ = 0.0;
  double mass_ = 0.0;
  double contour_radius_ = 0.0;
};

/// Builds the equilibrium data of a potential whose support is already [-2, 2].
/// Throws not-generic or variational-failure.
inline EquilibriumData compute_P(const Potential& v, const EquilibriumOptions& opts = {}) {
  EquilibriumData e;
  e.potential_ = v;
  e.contour_radius_ = opts.contour_radius > 0.0 ? opts.contour_radius : default_contour_radius(v);
  const Interval ext = widened_support(v.epsilon());
  e.p_ = ChebSeries::interpolate(
      [&](double x) { return contour_P(v, {x, 0.0}, e.contour_radius_, opts.contour_nodes).real(); }, ext,
      opts.cheb_nodes);
  e.dp_ = e.p_.derivative();
  e.g_ = ChebSeries::interpolate([&](double x) { return e.p_(x) * (4.0 - x * x) / (2.0 * kPi); }, kSupport,
                                 opts.cheb_nodes + 2);

  double margin = std::numeric_limits<double>::infinity(), top = 0.0;
  for (std::size_t i = 0; i <= 1024; ++i) {
    const double p = e.p_(-2.0 + 4.0 * static_cast<double>(i) / 1024.0);
    margin = std::min(margin, p);
    top = std::max(top, std::abs(p));
  }
  e.margin_ = margin;
  if (!(margin > opts.genericity_tolerance * top))
    fail(Errc::not_generic, "P is not bounded away from zero on [-2, 2] (inf P = " + detail::format_number(margin) + ")");

  {
    const auto q = chebyshev_gauss_t(256);
    double m = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      const double x = q.nodes[j];
      m += q.weights[j] * e.p_(x) * (4.0 - x * x) / (2.0 * kPi);
    }
    e.mass_ = m;
  }
  if (std::abs(e.mass_ - 1.0) > opts.mass_tolerance)
    fail(Errc::variational_failure, "equilibrium mass " + detail::format_number(e.mass_) +
                                        " differs from 1; is the support normalized to [-2, 2]?");

  std::vector<double> vals(opts.check_grid);
  double mean = 0.0;
  for (std::size_t i = 0; i < opts.check_grid; ++i) {
    const double x = -2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(opts.check_grid - 1);
    vals[i] = e.effective_potential(x);
    mean += vals[i];
  }
  mean /= static_cast<double>(opts.check_grid);
  double res = 0.0;
  for (double val : vals) res = std::max(res, std::abs(val - mean));
  e.robin_ = mean;
  e.v_residual_ = res;
  if (!(res < opts.v_tolerance))
    fail(Errc::variational_failure, "v is not constant on the support (residual " + detail::format_number(res) + ")");

  double excess = -std::numeric_limits<double>::infinity();
  const std::size_t half = opts.outside_probes / 2;
  const double reach = 0.5 * v.epsilon();
  for (std::size_t j = 1; j <= half; ++j) {
    const double d = reach * static_cast<double>(j) / static_cast<double>(half);
    excess = std::max({excess, e.effective_potential(2.0 + d) - mean, e.effective_potential(-2.0 - d) - mean});
  }
  e.outside_excess_ = excess;
  if (!(excess < 0.0))
    fail(Errc::variational_failure, "v exceeds the Robin constant outside the support; potential is not one-cut");
  return e;
}

/// c1 = pi^{-1} int h'/X^{1/2}, c2 = pi^{-1} int x h' / (2 X^{1/2}) over [-2, 2].
inline RecenteringCoeffs recentering_coeffs(const EquilibriumData& /*e*/, const SmoothFunction& h,
                                            std::size_t nodes = 256) {
  const auto q = chebyshev_gauss_t(nodes);
  RecenteringCoeffs r;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double x = q.nodes[j];
    const double d = h.derivative(x);
    r.c1 += q.weights[j] * d;
    r.c2 += q.weights[j] * x * d;
  }
  r.c1 /= kPi;
  r.c2 /= 2.0 * kPi;
  return r;
}

inline double eval_density(const EquilibriumData& e, double x) { return e.rho(x); }

}  // namespace betalab
