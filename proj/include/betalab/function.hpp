#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "betalab/error.hpp"
#include "betalab/numeric.hpp"

namespace betalab {

/// A real function together with its first derivative. Test functions,
/// deformations and observables are passed around in this form.
struct SmoothFunction {
  std::string id;
  std::function<double(double)> value;
  std::function<double(double)> derivative;

  double operator()(double x) const { return value(x); }
};

inline SmoothFunction constant_function(double c) {
  return {"const", [c](double) { return c; }, [](double) { return 0.0; }};
}

/// sum_k coeffs[k] x^k
inline SmoothFunction polynomial_function(std::vector<double> coeffs, std::string id = "poly") {
  auto d = coeffs;
  std::vector<double> dc;
  for (std::size_t k = 1; k < d.size(); ++k) dc.push_back(static_cast<double>(k) * d[k]);
  return {std::move(id), [c = std::move(coeffs)](double x) { return series::evaluate(c, x); },
          [dc = std::move(dc)](double x) { return dc.empty() ? 0.0 : series::evaluate(dc, x); }};
}

inline SmoothFunction monomial(int power) {
  std::vector<double> c(static_cast<std::size_t>(power) + 1, 0.0);
  c.back() = 1.0;
  return polynomial_function(std::move(c), power == 1 ? "x" : "x^" + std::to_string(power));
}

/// T_k(x/2), the Chebyshev mode on [-2, 2].
inline SmoothFunction chebyshev_mode(int k) {
  return {"T" + std::to_string(k),
          [k](double x) {
            const double t = std::clamp(x / 2.0, -1.0, 1.0);
            return std::abs(x) <= 2.0 ? std::cos(k * std::acos(t))
                                      : std::cosh(k * std::acosh(std::abs(x) / 2.0)) * ((x < 0 && k % 2) ? -1.0 : 1.0);
          },
          [k](double x) {
            // d/dx T_k(x/2) = (k/2) U_{k-1}(x/2)
            const double t = x / 2.0;
            double u0 = 1.0, u1 = 2.0 * t;
            if (k == 0) return 0.0;
            if (k == 1) return 0.5;
            for (int j = 2; j < k; ++j) {
              const double u2 = 2.0 * t * u1 - u0;
              u0 = u1;
              u1 = u2;
            }
            return 0.5 * k * u1;
          }};
}

inline SmoothFunction chebyshev_function(const ChebSeries& s, std::string id = "cheb") {
  return {std::move(id), [s](double x) { return s(x); }, [d = s.derivative()](double x) { return d(x); }};
}

/// Named test functions understood by the CLI: x, x^k, cos, sin, exp, cosh, T<k>.
inline SmoothFunction named_function(const std::string& name) {
  if (name == "x" || name == "lambda") return monomial(1);
  if (name.size() > 2 && (name.rfind("x^", 0) == 0 || name.rfind("lambda^", 0) == 0)) {
    const auto pos = name.find('^');
    const int p = std::stoi(name.substr(pos + 1));
    if (p < 0 || p > 20) fail(Errc::config_error, "unsupported power in test function: " + name);
    return monomial(p);
  }
  if (name == "cos") return {"cos", [](double x) { return std::cos(x); }, [](double x) { return -std::sin(x); }};
  if (name == "sin") return {"sin", [](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }};
  if (name == "exp") return {"exp", [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); }};
  if (name == "cosh") return {"cosh", [](double x) { return std::cosh(x); }, [](double x) { return std::sinh(x); }};
  if (name.size() > 1 && name[0] == 'T') {
    const int k = std::stoi(name.substr(1));
    if (k < 0 || k > 64) fail(Errc::config_error, "unsupported Chebyshev mode: " + name);
    return chebyshev_mode(k);
  }
  fail(Errc::config_error, "unknown test function: " + name);
}

}  // namespace betalab
