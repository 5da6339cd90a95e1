#pragma once

// Quadrature rules, Chebyshev series and truncated power-series arithmetic.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "betalab/error.hpp"

namespace betalab {

inline constexpr double kPi = std::numbers::pi;

struct Interval {
  double lo = -2.0;
  double hi = 2.0;

  double center() const { return 0.5 * (lo + hi); }
  double half_width() const { return 0.5 * (hi - lo); }
  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// The equilibrium support after normalization.
inline constexpr Interval kSupport{-2.0, 2.0};

/// [-2 - margin, 2 + margin].
inline Interval widened_support(double margin) { return {-2.0 - margin, 2.0 + margin}; }

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

/// Chebyshev-Gauss rule for the weight 1/sqrt((b-x)(x-a)); nodes ascending.
inline QuadratureRule chebyshev_gauss_t(std::size_t n, Interval iv = kSupport) {
  QuadratureRule q;
  q.nodes.resize(n);
  q.weights.assign(n, kPi / static_cast<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const double theta = kPi * (static_cast<double>(n - 1 - j) + 0.5) / static_cast<double>(n);
    q.nodes[j] = iv.center() + iv.half_width() * std::cos(theta);
  }
  return q;
}

/// Chebyshev-Gauss rule of the second kind for the weight sqrt((b-x)(x-a)).
inline QuadratureRule chebyshev_gauss_u(std::size_t n, Interval iv = kSupport) {
  QuadratureRule q;
  q.nodes.resize(n);
  q.weights.resize(n);
  const double s = iv.half_width();
  for (std::size_t j = 0; j < n; ++j) {
    const double theta = kPi * static_cast<double>(n - j) / static_cast<double>(n + 1);
    const double sn = std::sin(theta);
    q.nodes[j] = iv.center() + s * std::cos(theta);
    q.weights[j] = kPi / static_cast<double>(n + 1) * sn * sn * s * s;
  }
  return q;
}

/// Fejer's first rule: unweighted integral over Chebyshev-Gauss nodes. Weights positive.
inline QuadratureRule fejer1(std::size_t n, Interval iv) {
  QuadratureRule q;
  q.nodes.resize(n);
  q.weights.resize(n);
  const double dn = static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double theta = kPi * (static_cast<double>(n - 1 - j) + 0.5) / dn;
    double s = 0.0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
      const double dk = static_cast<double>(k);
      s += std::cos(2.0 * dk * theta) / (4.0 * dk * dk - 1.0);
    }
    q.nodes[j] = iv.center() + iv.half_width() * std::cos(theta);
    q.weights[j] = 2.0 / dn * (1.0 - 2.0 * s) * iv.half_width();
  }
  return q;
}

inline QuadratureRule gauss_legendre(std::size_t n, Interval iv = {-1.0, 1.0}) {
  QuadratureRule q;
  q.nodes.resize(n);
  q.weights.resize(n);
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (static_cast<double>(i) + 0.75) / (dn + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double dk = static_cast<double>(k);
        const double p2 = ((2.0 * dk - 1.0) * x * p1 - (dk - 1.0) * p0) / dk;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) { p1 = x; p0 = 1.0; }
      dp = dn * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    q.nodes[i] = -x;
    q.nodes[n - 1 - i] = x;
    q.weights[i] = w;
    q.weights[n - 1 - i] = w;
  }
  for (std::size_t i = 0; i < n; ++i) {
    q.nodes[i] = iv.center() + iv.half_width() * q.nodes[i];
    q.weights[i] *= iv.half_width();
  }
  return q;
}

/// Gauss-Hermite rule for the weight exp(-x^2) (Golub-Welsch).
inline QuadratureRule gauss_hermite(std::size_t n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 1; k < n; ++k) {
    const double b = std::sqrt(static_cast<double>(k) / 2.0);
    jacobi(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(k)) = b;
    jacobi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k - 1)) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  QuadratureRule q;
  q.nodes.resize(n);
  q.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    q.nodes[i] = es.eigenvalues()(ii);
    const double v0 = es.eigenvectors()(0, ii);
    q.weights[i] = std::sqrt(kPi) * v0 * v0;
  }
  return q;
}

/// Truncated Chebyshev expansion sum_k c_k T_k(t), t the affine image of x in [-1, 1].
class ChebSeries {
 public:
  ChebSeries() = default;
  ChebSeries(Interval domain, std::vector<double> coeffs) : domain_(domain), c_(std::move(coeffs)) {}

  /// Interpolates f at n first-kind Chebyshev points of `domain`.
  template <class F>
  static ChebSeries interpolate(F&& f, Interval domain, std::size_t n) {
    std::vector<double> values(n);
    const double dn = static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double theta = kPi * (static_cast<double>(j) + 0.5) / dn;
      values[j] = f(domain.center() + domain.half_width() * std::cos(theta));
    }
    return from_values(values, domain);
  }

  /// Values are given at cos((j + 1/2) pi / n), j = 0..n-1 (descending order).
  static ChebSeries from_values(std::span<const double> values, Interval domain) {
    const std::size_t n = values.size();
    const double dn = static_cast<double>(n);
    std::vector<double> c(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        s += values[j] * std::cos(static_cast<double>(k) * kPi * (static_cast<double>(j) + 0.5) / dn);
      c[k] = 2.0 * s / dn;
    }
    if (n > 0) c[0] *= 0.5;
    return ChebSeries(domain, std::move(c));
  }

  template <class T>
  T evaluate(T x) const {
    if (c_.empty()) return T(0.0);
    const T t = (2.0 * x - (domain_.lo + domain_.hi)) / domain_.length();
    T b1(0.0), b2(0.0);
    for (std::size_t k = c_.size() - 1; k >= 1; --k) {
      const T b0 = 2.0 * t * b1 - b2 + c_[k];
      b2 = b1;
      b1 = b0;
    }
    return t * b1 - b2 + c_[0];
  }

  double operator()(double x) const { return evaluate(x); }
  std::complex<double> operator()(std::complex<double> z) const { return evaluate(z); }

  ChebSeries derivative() const {
    const std::size_t n = c_.size();
    if (n <= 1) return ChebSeries(domain_, {0.0});
    std::vector<double> d(n, 0.0);
    for (std::size_t k = n - 1; k >= 1; --k) {
      const double next = (k + 1 < n) ? d[k + 1] : 0.0;
      d[k - 1] = next + 2.0 * static_cast<double>(k) * c_[k];
    }
    d[0] *= 0.5;
    d.pop_back();
    const double scale = 2.0 / domain_.length();
    for (double& v : d) v *= scale;
    return ChebSeries(domain_, std::move(d));
  }

  /// Drops trailing coefficients below tol * max|c|.
  ChebSeries chopped(double tol) const {
    double mx = 0.0;
    for (double v : c_) mx = std::max(mx, std::abs(v));
    std::size_t len = c_.size();
    while (len > 1 && std::abs(c_[len - 1]) <= tol * mx) --len;
    return ChebSeries(domain_, std::vector<double>(c_.begin(), c_.begin() + static_cast<std::ptrdiff_t>(len)));
  }

  const std::vector<double>& coeffs() const { return c_; }
  Interval domain() const { return domain_; }

 private:
  Interval domain_{};
  std::vector<double> c_;
};

/// Truncated power series in one variable, coefficient k multiplies x^k.
namespace series {

using Series = std::vector<double>;

inline Series multiply(const Series& a, const Series& b, std::size_t len) {
  Series r(len, 0.0);
  for (std::size_t i = 0; i < std::min(a.size(), len); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size() && i + j < len; ++j) r[i + j] += a[i] * b[j];
  }
  return r;
}

/// sqrt of a series with positive constant term.
inline Series sqrt(const Series& c, std::size_t len) {
  Series s(len, 0.0);
  s[0] = std::sqrt(c[0]);
  for (std::size_t k = 1; k < len; ++k) {
    double acc = k < c.size() ? c[k] : 0.0;
    for (std::size_t j = 1; j < k; ++j) acc -= s[j] * s[k - j];
    s[k] = acc / (2.0 * s[0]);
  }
  return s;
}

/// sum_j p[j] * y(x)^j, requires y[0] == 0.
inline Series compose(const Series& p, const Series& y, std::size_t len) {
  Series acc(len, 0.0);
  for (std::size_t j = p.size(); j-- > 0;) {
    acc = multiply(acc, y, len);
    acc[0] += p[j];
  }
  return acc;
}

inline Series derivative(const Series& a) {
  if (a.size() <= 1) return Series{0.0};
  Series d(a.size() - 1);
  for (std::size_t k = 1; k < a.size(); ++k) d[k - 1] = static_cast<double>(k) * a[k];
  return d;
}

inline double evaluate(const Series& a, double x) {
  double r = 0.0;
  for (std::size_t k = a.size(); k-- > 0;) r = r * x + a[k];
  return r;
}

}  // namespace series

/// Bracketed root of a monotone-or-not continuous f by bisection + secant safeguard.
template <class F>
double find_root(F&& f, double lo, double hi, double tol = 1e-15, int max_iter = 200) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) fail(Errc::no_convergence, "root not bracketed");
  for (int it = 0; it < max_iter; ++it) {
    double mid = lo - flo * (hi - lo) / (fhi - flo);
    if (!(mid > lo && mid < hi) || it % 3 == 2) mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
      fhi = fm;
    }
    if (hi - lo < tol * std::max(1.0, std::abs(mid))) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace betalab
