#pragma once

// Predictions checked against samples: fluctuations of linear statistics, local
// gap statistics in the bulk, and the algebraic identities behind the change of variables.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "betalab/ensembles.hpp"
#include "betalab/equilibrium.hpp"
#include "betalab/error.hpp"
#include "betalab/function.hpp"
#include "betalab/numeric.hpp"
#include "betalab/operators.hpp"
#include "betalab/stats.hpp"
#include "betalab/transport.hpp"

namespace betalab {

struct CltReport {
  std::string h_id;
  double beta = 0.0;
  std::size_t n = 0;
  std::size_t samples = 0;
  double empirical_mean = 0.0, mean_se = 0.0;
  double empirical_variance = 0.0, variance_se = 0.0;
  double predicted_mean = 0.0;
  double predicted_variance = 0.0;
  double z_mean = 0.0, z_variance = 0.0;
  double normality_p = 0.0;
};

/// Moments of sum h(x_i) - n (rho, h) against (2/beta)(h, nu_beta) and (1/beta)(Dbar h, h).
inline CltReport clt_report(const EnsembleSample& s, const SmoothFunction& h, const EquilibriumData& e) {
  if (s.count < 100) fail(Errc::insufficient_samples, "CLT report needs at least 100 configurations");
  CltReport r;
  r.h_id = h.id;
  r.beta = s.beta;
  r.n = s.n;
  r.samples = s.count;
  const double center = static_cast<double>(s.n) * e.expectation(h.value);
  auto vals = linear_statistic(s, h.value);
  for (double& v : vals) v -= center;
  const auto m = stats::moments(vals);
  r.empirical_mean = m.mean;
  r.mean_se = m.mean_se;
  r.empirical_variance = m.variance;
  r.variance_se = m.variance_se;
  r.predicted_mean = 2.0 / s.beta * nu_beta_pairing(h, e, s.beta);
  r.predicted_variance = dbar_form(h).pv / s.beta;
  r.z_mean = (r.empirical_mean - r.predicted_mean) / r.mean_se;
  r.z_variance = (r.empirical_variance - r.predicted_variance) / r.variance_se;
  r.normality_p = stats::shapiro_francia(std::vector<double>(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(vals.size(), 5000)))).p_value;
  return r;
}

struct BulkOptions {
  /// Half-width of the window; 0 selects 40 / (n rho(lambda0)).
  double window = 0.0;
  /// Fraction of the window whose gaps are kept.
  double central_fraction = 0.6;
  /// lambda0 must lie in [-2 + margin, 2 - margin].
  double bulk_margin = 0.1;
};

struct GapSample {
  double lambda0 = 0.0;
  double window = 0.0;
  double unfolding = 0.0;  ///< n rho(lambda0)
  std::vector<double> gaps;
  double mean_gap = 0.0;
};

/// Nearest-neighbour spacings near lambda0 rescaled by n rho(lambda0), pooled over configurations.
inline GapSample unfold_and_gaps(const EnsembleSample& s, const EquilibriumData& e, double lambda0,
                                 const BulkOptions& opts = {}) {
  if (!(lambda0 >= -2.0 + opts.bulk_margin && lambda0 <= 2.0 - opts.bulk_margin))
    fail(Errc::precondition, "lambda0 = " + detail::format_number(lambda0) + " is not in the bulk");
  GapSample g;
  g.lambda0 = lambda0;
  g.unfolding = static_cast<double>(s.n) * e.rho(lambda0);
  g.window = opts.window > 0.0 ? opts.window : 40.0 / g.unfolding;
  const double lo = lambda0 - opts.central_fraction * g.window, hi = lambda0 + opts.central_fraction * g.window;
  for (std::size_t k = 0; k < s.count; ++k) {
    const auto c = s.config(k);
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
      const double mid = 0.5 * (c[i] + c[i + 1]);
      if (mid >= lo && mid < hi) g.gaps.push_back(g.unfolding * (c[i + 1] - c[i]));
    }
  }
  if (g.gaps.size() < 2) fail(Errc::empty_window, "no eigenvalue gaps in the window around " + detail::format_number(lambda0));
  g.mean_gap = std::accumulate(g.gaps.begin(), g.gaps.end(), 0.0) / static_cast<double>(g.gaps.size());
  return g;
}

/// Smooth bump supported on [center - half_width, center + half_width] with unit integral.
inline std::function<double(double)> bump(double center, double half_width) {
  static const double mass = [] {
    const auto q = gauss_legendre(200);
    return q.integrate([](double t) { return std::exp(-1.0 / (1.0 - t * t)); });
  }();
  return [=](double u) {
    const double t = (u - center) / half_width;
    if (std::abs(t) >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - t * t)) / (mass * half_width);
  };
}

struct TestFunctionSet {
  std::string id;
  std::vector<std::function<double(double)>> phis;
};

/// Products of bumps used for the k-point statistics.
inline std::vector<TestFunctionSet> default_test_bank() {
  return {
      {"k1-bump2", {bump(0.0, 2.0)}},
      {"k2-pair-0.6", {bump(-0.6, 1.0), bump(0.6, 1.0)}},
      {"k2-same-1.5", {bump(0.0, 1.5), bump(0.0, 1.5)}},
      {"k3-row", {bump(-1.0, 1.0), bump(0.0, 1.0), bump(1.0, 1.0)}},
  };
}

struct PhiEstimate {
  std::string id;
  std::size_t k = 0;
  double value = 0.0;
  double se = 0.0;
};

/// Monte Carlo mean of prod_j sum_i phi_j(n rho(lambda0) (x_i - lambda0)), optionally averaged over
/// `average_points` shifts of lambda0 spread over |t| <= n^{-1 + shift_exponent}.
inline PhiEstimate phi_estimate(const EnsembleSample& s, const EquilibriumData& e, double lambda0,
                                const TestFunctionSet& set, std::size_t average_points = 1,
                                double shift_exponent = 0.5, const BulkOptions& opts = {}) {
  if (!(lambda0 >= -2.0 + opts.bulk_margin && lambda0 <= 2.0 - opts.bulk_margin))
    fail(Errc::precondition, "lambda0 = " + detail::format_number(lambda0) + " is not in the bulk");
  const double dn = static_cast<double>(s.n);
  const double unfold = dn * e.rho(lambda0);
  const double reach = std::pow(dn, -1.0 + shift_exponent);
  std::vector<double> vals(s.count, 0.0);
  for (std::size_t k = 0; k < s.count; ++k) {
    const auto c = s.config(k);
    double acc = 0.0;
    for (std::size_t m = 0; m < average_points; ++m) {
      const double t = average_points == 1 ? 0.0 : -reach + 2.0 * reach * static_cast<double>(m) / static_cast<double>(average_points - 1);
      const double center = lambda0 + t;
      double prod = 1.0;
      for (const auto& phi : set.phis) {
        double sum = 0.0;
        for (double x : c) {
          const double u = unfold * (x - center);
          if (std::abs(u) < 8.0) sum += phi(u);
        }
        prod *= sum;
      }
      acc += prod;
    }
    vals[k] = acc / static_cast<double>(average_points);
  }
  const auto m = stats::moments(vals);
  return {set.id, set.phis.size(), m.mean, m.mean_se};
}

struct UniversalityDistance {
  double ks = 0.0;           ///< pooled gaps of V at lambda0 vs reference at 0
  double noise_floor = 0.0;  ///< split-half KS of the reference at 0
  std::size_t gaps_v = 0, gaps_ref = 0;
  double mean_gap_v = 0.0, mean_gap_ref = 0.0;
  std::vector<PhiEstimate> phi_v, phi_ref;
  std::vector<double> phi_difference;
  std::vector<double> phi_difference_se;
};

inline UniversalityDistance universality_distance(const EnsembleSample& sv, const EnsembleSample& sg, double lambda0,
                                                  const EquilibriumData& ev, const EquilibriumData& eg,
                                                  const std::vector<TestFunctionSet>& bank = default_test_bank(),
                                                  const BulkOptions& opts = {}) {
  if (sv.n != sg.n || sv.beta != sg.beta)
    fail(Errc::mismatched_parameters, "universality comparison needs equal n and beta");
  UniversalityDistance d;
  const auto gv = unfold_and_gaps(sv, ev, lambda0, opts);
  const auto gr = unfold_and_gaps(sg, eg, 0.0, opts);
  d.ks = stats::ks_two_sample(gv.gaps, gr.gaps).distance;
  d.gaps_v = gv.gaps.size();
  d.gaps_ref = gr.gaps.size();
  d.mean_gap_v = gv.mean_gap;
  d.mean_gap_ref = gr.mean_gap;

  EnsembleSample first = sg, second = sg;
  const std::size_t half = sg.count / 2;
  first.count = half;
  first.values.assign(sg.values.begin(), sg.values.begin() + static_cast<std::ptrdiff_t>(half * sg.n));
  second.count = sg.count - half;
  second.values.assign(sg.values.begin() + static_cast<std::ptrdiff_t>(half * sg.n), sg.values.end());
  d.noise_floor = stats::ks_two_sample(unfold_and_gaps(first, eg, 0.0, opts).gaps, unfold_and_gaps(second, eg, 0.0, opts).gaps).distance;

  for (const auto& set : bank) {
    d.phi_v.push_back(phi_estimate(sv, ev, lambda0, set, 1, 0.5, opts));
    d.phi_ref.push_back(phi_estimate(sg, eg, 0.0, set, 1, 0.5, opts));
    d.phi_difference.push_back(std::abs(d.phi_v.back().value - d.phi_ref.back().value));
    d.phi_difference_se.push_back(std::hypot(d.phi_v.back().se, d.phi_ref.back().se));
  }
  return d;
}

/// Projections (phi_k, rho_sc) over [-2, 2].
inline std::vector<double> semicircle_projections(const KernelSpectrum& s, std::size_t modes, std::size_t nodes = 128) {
  const auto q = chebyshev_gauss_u(nodes);
  std::vector<double> r(modes, 0.0);
  for (std::size_t j = 0; j < q.size(); ++j) {
    for (std::size_t k = 0; k < modes; ++k) r[k] += q.weights[j] * s.phi(k, q.nodes[j]);
  }
  for (double& v : r) v /= 2.0 * kPi;
  return r;
}

struct HamiltonianIdentity {
  double residual = 0.0;  ///< max |diff - median diff| over configurations
  double constant = 0.0;  ///< median of the difference
  std::size_t modes = 0;
};

/// Compares -n sum V(zeta_j) + sum_{i != j} log|zeta_i - zeta_j| + (2/beta) sum log zeta'
/// with H*(x) + (2/beta - 1) sum log zeta' + sum_{k < M} eta_k (sum_j phi_k(x_j) - n (phi_k, rho_sc))^2.
inline HamiltonianIdentity hamiltonian_identity_residual(const EquilibriumData& e, const KernelSpectrum& s, double beta,
                                                         const std::vector<std::vector<double>>& configs,
                                                         std::optional<std::size_t> modes = std::nullopt) {
  const MapView& map = s.kernel().map;
  const std::size_t m = std::min(modes.value_or(s.truncation()), s.truncation());
  const auto proj = semicircle_projections(s, m);
  std::vector<double> diffs;
  for (const auto& x : configs) {
    const std::size_t n = x.size();
    const double dn = static_cast<double>(n);
    std::vector<double> z(n), logdz(n);
    for (std::size_t j = 0; j < n; ++j) {
      z[j] = map.zeta(x[j]);
      logdz[j] = std::log(map.zeta_prime(x[j]));
    }
    double lhs = 0.0, rhs = 0.0, sum_logdz = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      lhs -= dn * e.potential().value(z[j]);
      rhs -= dn * 0.5 * x[j] * x[j];
      sum_logdz += logdz[j];
      for (std::size_t i = 0; i < n; ++i) {
        if (i == j) continue;
        lhs += std::log(std::abs(z[i] - z[j]));
        rhs += std::log(std::abs(x[i] - x[j]));
      }
    }
    lhs += 2.0 / beta * sum_logdz;
    rhs += (2.0 / beta - 1.0) * sum_logdz;
    for (std::size_t k = 0; k < m; ++k) {
      double q = -dn * proj[k];
      for (double xj : x) q += s.phi(k, xj);
      rhs += s.etas()[k] * q * q;
    }
    diffs.push_back(lhs - rhs);
  }
  HamiltonianIdentity h;
  h.modes = m;
  auto sorted = diffs;
  std::sort(sorted.begin(), sorted.end());
  h.constant = sorted.size() % 2 ? sorted[sorted.size() / 2] : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
  for (double d : diffs) h.residual = std::max(h.residual, std::abs(d - h.constant));
  return h;
}

/// Uniform random configurations in [-2, 2]^n.
inline std::vector<std::vector<double>> random_configurations(std::size_t n, std::size_t count, std::uint64_t seed) {
  auto rng = stream_rng(seed, 0);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<std::vector<double>> r(count, std::vector<double>(n));
  for (auto& c : r)
    for (double& x : c) x = u(rng);
  return r;
}

struct LinearizationOptions {
  std::size_t modes = 3;
  std::size_t nodes = 96;           ///< Gauss-Legendre nodes per eigenvalue axis
  std::size_t hermite_nodes = 48;   ///< Gauss-Hermite nodes per auxiliary axis
  bool include_log_term = true;     ///< drop (2/beta - 1) log zeta' for the negative control
};

struct LinearizationCheck {
  double left = 0.0;   ///< <f> under V by direct quadrature
  double right = 0.0;  ///< Gaussian-ensemble route through the auxiliary integral
  double discrepancy = 0.0;
  double discarded_mass = 0.0;  ///< sum_{k >= M} |eta_k| / sum |eta_k|
};

/// Both sides of the linearization identity for a symmetric observable f at tiny n.
/// The auxiliary variables u_k carry weight exp(-beta u^2 / 8); for eta_k < 0 the
/// coupling sqrt(eta_k) is imaginary and only real parts survive.
inline LinearizationCheck linearization_check(const EquilibriumData& e, const KernelSpectrum& s, std::size_t n,
                                              double beta, const Observable& f, const LinearizationOptions& opts = {}) {
  if (n > 3) fail(Errc::dimension_too_large, "linearization check is limited to n <= 3");
  const MapView& map = s.kernel().map;
  const Potential& v = e.potential();
  LinearizationCheck r;
  r.left = direct_expectation(v, n, beta, f, opts.nodes);

  const std::size_t m = std::min(opts.modes, s.truncation());
  double total = 0.0, kept = 0.0;
  for (std::size_t k = 0; k < s.etas().size(); ++k) {
    total += std::abs(s.etas()[k]);
    if (k < m) kept += std::abs(s.etas()[k]);
  }
  r.discarded_mass = total > 0.0 ? 1.0 - kept / total : 0.0;

  // Preimage of the sampling window under zeta.
  const Interval w = v.domain();
  const Interval dom = map.domain;
  const double a = find_root([&](double x) { return map.zeta(x) - w.lo; }, dom.lo, 0.0);
  const double b = find_root([&](double x) { return map.zeta(x) - w.hi; }, 0.0, dom.hi);
  const auto q = gauss_legendre(opts.nodes, {a, b});
  const auto proj = semicircle_projections(s, m);
  const std::size_t nn = q.size();
  std::vector<double> zq(nn), logdz(nn);
  std::vector<std::vector<double>> phiq(nn, std::vector<double>(m));
  for (std::size_t i = 0; i < nn; ++i) {
    zq[i] = map.zeta(q.nodes[i]);
    logdz[i] = std::log(map.zeta_prime(q.nodes[i]));
    for (std::size_t k = 0; k < m; ++k) phiq[i][k] = s.phi(k, q.nodes[i]) - proj[k];
  }
  const auto gh = gauss_hermite(opts.hermite_nodes);
  const double u_scale = std::sqrt(8.0 / beta);
  const double log_coef = opts.include_log_term ? 2.0 / beta - 1.0 : 0.0;
  const double dn = static_cast<double>(n);

  std::vector<std::size_t> idx(n, 0);
  std::vector<double> z(n);
  double num = 0.0, den = 0.0;
  std::size_t total_pts = 1;
  for (std::size_t k = 0; k < n; ++k) total_pts *= nn;
  for (std::size_t p = 0; p < total_pts; ++p) {
    std::size_t rem = p;
    for (std::size_t k = 0; k < n; ++k) {
      idx[k] = rem % nn;
      rem /= nn;
    }
    double logw = 0.0, vdm = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double x = q.nodes[idx[j]];
      logw += std::log(q.weights[idx[j]]) - 0.5 * beta * dn * 0.5 * x * x + 0.5 * beta * log_coef * logdz[idx[j]];
      z[j] = zq[idx[j]];
      for (std::size_t i = j + 1; i < n; ++i) vdm *= std::abs(x - q.nodes[idx[i]]);
    }
    if (vdm == 0.0) continue;
    double weight = std::exp(logw + beta * std::log(vdm));
    // prod_k (1/sqrt(pi)) sum_t w_t exp((beta/2) sqrt(eta_k) q_k u_t), u_t = t sqrt(8/beta)
    std::complex<double> factor = 1.0;
    for (std::size_t k = 0; k < m; ++k) {
      double qk = 0.0;
      for (std::size_t j = 0; j < n; ++j) qk += phiq[idx[j]][k];
      const double eta = s.etas()[k];
      const std::complex<double> root = eta >= 0.0 ? std::complex<double>(std::sqrt(eta), 0.0) : std::complex<double>(0.0, std::sqrt(-eta));
      std::complex<double> g = 0.0;
      for (std::size_t t = 0; t < gh.size(); ++t) g += gh.weights[t] * std::exp(0.5 * beta * root * qk * gh.nodes[t] * u_scale);
      factor *= g / std::sqrt(kPi);
    }
    const double wr = weight * factor.real();
    den += wr;
    num += wr * f(z);
  }
  r.right = num / den;
  r.discrepancy = std::abs(r.right - r.left) / std::max(std::abs(r.left), 1e-300);
  return r;
}

}  // namespace betalab
