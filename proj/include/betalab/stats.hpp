#pragma once

// Sample statistics used by the verification layer.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "betalab/error.hpp"

namespace betalab::stats {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased
  double mean_se = 0.0;
  double variance_se = 0.0;
  std::size_t count = 0;
};

inline Moments moments(std::span<const double> x) {
  Moments m;
  m.count = x.size();
  if (x.size() < 2) return m;
  const double n = static_cast<double>(x.size());
  m.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m4 /= n;
  m.variance = m2 * n / (n - 1.0);
  m.mean_se = std::sqrt(m.variance / n);
  m.variance_se = std::sqrt(std::max(0.0, m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n);
  return m;
}

/// Asymptotic Kolmogorov tail P(K > t).
inline double kolmogorov_tail(double t) {
  if (t <= 0.0) return 1.0;
  if (t < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    s += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

struct KsResult {
  double distance = 0.0;
  double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov against a continuous CDF.
inline KsResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) fail(Errc::insufficient_samples, "empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return {d, kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d)};
}

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) fail(Errc::insufficient_samples, "empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d)};
}

struct NormalityResult {
  double statistic = 0.0;  ///< Shapiro-Francia W'
  double p_value = 1.0;
};

/// Shapiro-Francia test with Royston's log-normal approximation for the null of W'.
inline NormalityResult shapiro_francia(std::vector<double> x) {
  const std::size_t n = x.size();
  if (n < 5 || n > 5000) fail(Errc::insufficient_samples, "Shapiro-Francia needs 5 <= n <= 5000");
  std::sort(x.begin(), x.end());
  const boost::math::normal_distribution<double> z;
  const double dn = static_cast<double>(n);
  std::vector<double> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = boost::math::quantile(z, (static_cast<double>(i + 1) - 0.375) / (dn + 0.25));
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / dn;
  double sxm = 0.0, smm = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxm += m[i] * x[i];
    smm += m[i] * m[i];
    sxx += (x[i] - mean) * (x[i] - mean);
  }
  NormalityResult r;
  r.statistic = sxm * sxm / (smm * sxx);
  const double u = std::log(dn), v = std::log(u);
  const double mu = -1.2725 + 1.0521 * (v - u);
  const double sigma = 1.0308 - 0.26758 * (v + 2.0 / u);
  const double w = std::log(std::max(1e-300, 1.0 - r.statistic));
  r.p_value = boost::math::cdf(boost::math::complement(z, (w - mu) / sigma));
  return r;
}

/// Integrated autocorrelation time with Sokal's automatic window (window >= c * tau).
inline double integrated_autocorrelation(std::span<const double> x, double c = 5.0) {
  const std::size_t n = x.size();
  if (n < 4) return 1.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double c0 = 0.0;
  for (double v : x) c0 += (v - mean) * (v - mean);
  c0 /= static_cast<double>(n);
  if (c0 <= 0.0) return 1.0;
  double tau = 1.0;
  for (std::size_t t = 1; t < n / 2; ++t) {
    double ct = 0.0;
    for (std::size_t i = 0; i + t < n; ++i) ct += (x[i] - mean) * (x[i + t] - mean);
    ct /= static_cast<double>(n);
    tau += 2.0 * ct / c0;
    if (static_cast<double>(t) >= c * tau) break;
  }
  return std::max(tau, 1.0);
}

}  // namespace betalab::stats
