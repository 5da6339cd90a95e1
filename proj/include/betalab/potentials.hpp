#pragma once

// Confining potentials V, the support search for their equilibrium measure and
// the affine change that puts the support at [-2, 2].

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "betalab/error.hpp"
#include "betalab/numeric.hpp"

namespace betalab {

enum class PotentialKind { gaussian, even_quartic, polynomial, user_analytic };

inline std::string to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::gaussian: return "gaussian";
    case PotentialKind::even_quartic: return "even-quartic";
    case PotentialKind::polynomial: return "polynomial";
    case PotentialKind::user_analytic: return "user-analytic";
  }
  return "unknown";
}

/// Description of a potential as read from a config.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::gaussian;
  double g = 0.0;                    ///< even-quartic parameter
  std::vector<double> coefficients;  ///< polynomial, ascending powers
  double epsilon = 0.2;              ///< domain margin; the sampling window is sigma_{epsilon/2}

  // user-analytic only
  std::string name = "user";
  std::function<double(double)> v, dv, d2v;
  std::function<std::complex<double>(std::complex<double>)> dv_complex;
  double analyticity_radius = std::numeric_limits<double>::infinity();
};

/// x_normalized = scale * (x_original - shift).
struct AffineChange {
  double scale = 1.0;
  double shift = 0.0;

  double to_normalized(double x) const { return scale * (x - shift); }
  double to_original(double y) const { return shift + y / scale; }
  bool is_identity() const { return scale == 1.0 && shift == 0.0; }
};

/// Immutable evaluator bundle for V, V', V'' plus analyticity and confinement data.
class Potential {
 public:
  PotentialKind kind() const { return kind_; }
  const std::string& id() const { return id_; }
  double epsilon() const { return epsilon_; }
  /// Half-width of the strip around the real axis where V is analytic.
  double analyticity_radius() const { return analyticity_radius_; }
  /// The truncated integration window sigma_{epsilon/2}.
  Interval domain() const { return widened_support(0.5 * epsilon_); }
  /// epsilon_c with V > (1 + epsilon_c) log(1 + x^2) at the domain endpoints.
  double confinement_margin() const { return confinement_margin_; }
  /// Monomial coefficients for polynomial-backed kinds, empty otherwise.
  const std::vector<double>& coefficients() const { return coeffs_; }
  bool is_polynomial() const { return kind_ != PotentialKind::user_analytic; }

  double value(double x) const { return v_(x); }
  double derivative(double x) const { return dv_(x); }
  double second_derivative(double x) const { return d2v_(x); }
  std::complex<double> derivative(std::complex<double> z) const { return dvc_(z); }

  double operator()(double x) const { return v_(x); }

 private:
  friend Potential make_potential(const PotentialSpec& spec);
  friend Potential make_polynomial_potential(PotentialKind kind, std::vector<double> coeffs, double epsilon,
                                             std::string id);

  PotentialKind kind_ = PotentialKind::gaussian;
  std::string id_;
  double epsilon_ = 0.2;
  double analyticity_radius_ = std::numeric_limits<double>::infinity();
  double confinement_margin_ = 0.0;
  std::vector<double> coeffs_;
  std::function<double(double)> v_, dv_, d2v_;
  std::function<std::complex<double>(std::complex<double>)> dvc_;
};

namespace detail {

template <class T>
T horner(const std::vector<double>& c, T x) {
  T r(0.0);
  for (std::size_t k = c.size(); k-- > 0;) r = r * x + c[k];
  return r;
}

inline std::vector<double> differentiate(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t k = 1; k < c.size(); ++k) d.push_back(static_cast<double>(k) * c[k]);
  if (d.empty()) d.push_back(0.0);
  return d;
}

inline std::string format_number(double x) {
  std::ostringstream os;
  os.precision(12);
  os << x;
  return os.str();
}

inline void check_confinement(Potential& p, double& margin) {
  const Interval dom = p.domain();
  margin = std::numeric_limits<double>::infinity();
  for (double x : {dom.lo, dom.hi}) {
    const double l = std::log1p(x * x);
    margin = std::min(margin, p.value(x) / l - 1.0);
  }
  if (!(margin > 0.0))
    fail(Errc::confinement_violation,
         "potential " + p.id() + " is not confining on the window (margin " + format_number(margin) + ")");
}

}  // namespace detail

inline Potential make_polynomial_potential(PotentialKind kind, std::vector<double> coeffs, double epsilon,
                                           std::string id) {
  for (double c : coeffs)
    if (!std::isfinite(c)) fail(Errc::invalid_spec, "polynomial coefficient is not finite");
  while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
  if (coeffs.size() < 3 || (coeffs.size() - 1) % 2 != 0 || coeffs.back() <= 0.0)
    fail(Errc::confinement_violation, "polynomial potential needs even degree >= 2 and a positive leading coefficient");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) fail(Errc::invalid_spec, "epsilon must be positive");

  Potential p;
  p.kind_ = kind;
  p.id_ = std::move(id);
  p.epsilon_ = epsilon;
  p.coeffs_ = coeffs;
  const auto d1 = detail::differentiate(coeffs);
  const auto d2 = detail::differentiate(d1);
  p.v_ = [coeffs](double x) { return detail::horner(coeffs, x); };
  p.dv_ = [d1](double x) { return detail::horner(d1, x); };
  p.d2v_ = [d2](double x) { return detail::horner(d2, x); };
  p.dvc_ = [d1](std::complex<double> z) { return detail::horner(d1, z); };
  detail::check_confinement(p, p.confinement_margin_);
  return p;
}

/// Builds a potential from its description. Throws invalid-spec or confinement-violation.
inline Potential make_potential(const PotentialSpec& spec) {
  if (!(spec.epsilon > 0.0) || !std::isfinite(spec.epsilon)) fail(Errc::invalid_spec, "epsilon must be positive");
  switch (spec.kind) {
    case PotentialKind::gaussian:
      return make_polynomial_potential(PotentialKind::gaussian, {0.0, 0.0, 0.5}, spec.epsilon, "gaussian");
    case PotentialKind::even_quartic: {
      const double g = spec.g;
      if (!std::isfinite(g) || g < 0.0) fail(Errc::invalid_spec, "even-quartic parameter g must be finite and >= 0");
      if (g == 0.0)
        return make_polynomial_potential(PotentialKind::gaussian, {0.0, 0.0, 0.5}, spec.epsilon, "gaussian");
      // V = (1 - 3g)/2 x^2 + g/4 x^4 keeps the support at [-2, 2] for every g.
      return make_polynomial_potential(PotentialKind::even_quartic, {0.0, 0.0, 0.5 * (1.0 - 3.0 * g), 0.0, 0.25 * g},
                                       spec.epsilon, "quartic-g" + detail::format_number(g));
    }
    case PotentialKind::polynomial: {
      if (spec.coefficients.empty()) fail(Errc::invalid_spec, "polynomial potential without coefficients");
      std::string id = "poly";
      for (double c : spec.coefficients) id += "_" + detail::format_number(c);
      return make_polynomial_potential(PotentialKind::polynomial, spec.coefficients, spec.epsilon, id);
    }
    case PotentialKind::user_analytic: {
      if (!spec.v || !spec.dv || !spec.d2v || !spec.dv_complex)
        fail(Errc::invalid_spec, "user-analytic potential needs V, V', V'' and complex V'");
      if (!(spec.analyticity_radius > 0.0)) fail(Errc::invalid_spec, "analyticity radius must be positive");
      Potential p;
      p.kind_ = PotentialKind::user_analytic;
      p.id_ = spec.name;
      p.epsilon_ = spec.epsilon;
      p.analyticity_radius_ = spec.analyticity_radius;
      p.v_ = spec.v;
      p.dv_ = spec.dv;
      p.d2v_ = spec.d2v;
      p.dvc_ = spec.dv_complex;
      detail::check_confinement(p, p.confinement_margin_);
      return p;
    }
  }
  fail(Errc::invalid_spec, "unknown potential kind");
}

/// Residuals of the two one-cut endpoint conditions on [a, b]:
///   (1/pi)  int V'(x) / sqrt((b-x)(x-a)) dx       = 0
///   (1/2pi) int V'(x) x / sqrt((b-x)(x-a)) dx     = 1
inline std::array<double, 2> endpoint_conditions(const Potential& v, Interval iv, std::size_t nodes = 256) {
  const auto q = chebyshev_gauss_t(nodes, iv);
  double m0 = 0.0, m1 = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double x = q.nodes[j];
    const double d = v.derivative(x);
    m0 += q.weights[j] * d;
    m1 += q.weights[j] * d * x;
  }
  return {m0 / kPi, m1 / (2.0 * kPi) - 1.0};
}

/// Solves the endpoint conditions by damped Newton in (center, half-width), starting from [-2, 2].
inline Interval support_endpoints(const Potential& v, double tol = 1e-10, std::size_t nodes = 256) {
  double c = 0.0, s = 2.0;
  const auto q = chebyshev_gauss_t(nodes, {-1.0, 1.0});
  auto eval = [&](double cc, double ss, double jac[2][2]) {
    double f0 = 0.0, f1 = 0.0;
    double j00 = 0.0, j01 = 0.0, j10 = 0.0, j11 = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double t = q.nodes[i];
      const double w = q.weights[i];
      const double x = cc + ss * t;
      const double d1 = v.derivative(x);
      const double d2 = v.second_derivative(x);
      f0 += w * d1;
      f1 += w * d1 * x;
      j00 += w * d2;
      j01 += w * d2 * t;
      j10 += w * (d2 * x + d1);
      j11 += w * (d2 * x + d1) * t;
    }
    if (jac) {
      jac[0][0] = j00 / kPi;
      jac[0][1] = j01 / kPi;
      jac[1][0] = j10 / (2.0 * kPi);
      jac[1][1] = j11 / (2.0 * kPi);
    }
    return std::array<double, 2>{f0 / kPi, f1 / (2.0 * kPi) - 1.0};
  };
  double jac[2][2];
  auto f = eval(c, s, jac);
  auto norm = [](const std::array<double, 2>& r) { return std::hypot(r[0], r[1]); };
  double best = norm(f);
  for (int it = 0; it < 200 && best >= tol; ++it) {
    const double det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    if (!std::isfinite(det) || std::abs(det) < 1e-300) fail(Errc::no_convergence, "singular Jacobian in support search");
    const double dc = (jac[1][1] * f[0] - jac[0][1] * f[1]) / det;
    const double ds = (-jac[1][0] * f[0] + jac[0][0] * f[1]) / det;
    double step = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
      const double cn = c - step * dc, sn = s - step * ds;
      if (!(sn > 0.0)) continue;
      double jn[2][2];
      const auto fn = eval(cn, sn, jn);
      if (norm(fn) < best || norm(fn) < tol) {
        c = cn;
        s = sn;
        f = fn;
        std::copy(&jn[0][0], &jn[0][0] + 4, &jac[0][0]);
        best = norm(fn);
        improved = true;
        break;
      }
    }
    if (!improved) {
      if (best < 1e-6)
        fail(Errc::multi_cut_suspected, "endpoint residual stalls at " + detail::format_number(best));
      fail(Errc::no_convergence, "damped Newton failed in support search");
    }
  }
  if (!(best < tol)) fail(Errc::no_convergence, "support search did not reach the residual tolerance");
  return {c - s, c + s};
}

/// Pulls V back so that `support` becomes [-2, 2]: V_new(y) = V(shift + y / scale).
inline std::pair<Potential, AffineChange> normalize_support(const Potential& v, Interval support) {
  if (!(support.hi - support.lo > 1e-12)) fail(Errc::degenerate_interval, "support interval is degenerate");
  AffineChange change{4.0 / support.length(), support.center()};
  if (std::abs(change.scale - 1.0) < 1e-15 && std::abs(change.shift) < 1e-15) {
    return {v, AffineChange{}};
  }
  if (v.is_polynomial()) {
    // Taylor shift to the center, then rescale.
    std::vector<double> c = v.coefficients();
    const std::size_t n = c.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = n - 1; k > i; --k) c[k - 1] += change.shift * c[k];
    double f = 1.0;
    for (std::size_t k = 0; k < n; ++k, f /= change.scale) c[k] *= f;
    auto p = make_polynomial_potential(PotentialKind::polynomial, std::move(c), v.epsilon(), v.id() + "-normalized");
    return {std::move(p), change};
  }
  PotentialSpec spec;
  spec.kind = PotentialKind::user_analytic;
  spec.name = v.id() + "-normalized";
  spec.epsilon = v.epsilon();
  spec.analyticity_radius = v.analyticity_radius() * change.scale;
  const double a = change.shift, inv = 1.0 / change.scale;
  spec.v = [v, a, inv](double y) { return v.value(a + y * inv); };
  spec.dv = [v, a, inv](double y) { return inv * v.derivative(a + y * inv); };
  spec.d2v = [v, a, inv](double y) { return inv * inv * v.second_derivative(a + y * inv); };
  spec.dv_complex = [v, a, inv](std::complex<double> z) { return inv * v.derivative(a + z * inv); };
  return {make_potential(spec), change};
}

}  // namespace betalab
