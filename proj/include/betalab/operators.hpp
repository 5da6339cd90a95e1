#pragma once

// Log-kernel and covariance operators on [-2, 2], the deformation kernel of a
// transport map with its eigendecomposition, and the mean-shift pairing.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "betalab/equilibrium.hpp"
#include "betalab/error.hpp"
#include "betalab/function.hpp"
#include "betalab/numeric.hpp"
#include "betalab/transport.hpp"

namespace betalab {

/// Chebyshev-Gauss points with Fejer weights on an interval.
struct ChebGrid {
  Interval domain;
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

inline ChebGrid make_cheb_grid(std::size_t n, Interval domain) {
  const auto q = fejer1(n, domain);
  return {domain, q.nodes, q.weights};
}

/// h_k = (2/pi) int_0^pi h(2 cos t) cos(kt) dt for k < count, by the midpoint rule at 4 * count points.
inline std::vector<double> cheb_coeffs(const std::function<double(double)>& h, std::size_t count) {
  const std::size_t m = 4 * std::max<std::size_t>(count, 1);
  std::vector<double> vals(m);
  for (std::size_t j = 0; j < m; ++j) vals[j] = h(2.0 * std::cos(kPi * (static_cast<double>(j) + 0.5) / static_cast<double>(m)));
  std::vector<double> c(count, 0.0);
  for (std::size_t k = 0; k < count; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      s += vals[j] * std::cos(static_cast<double>(k) * kPi * (static_cast<double>(j) + 0.5) / static_cast<double>(m));
    c[k] = 2.0 * s / static_cast<double>(m);
  }
  return c;
}

struct OperatorOptions {
  /// Second-kind Chebyshev nodes for the principal-value integrals.
  std::size_t pv_nodes = 128;
  /// First-kind Chebyshev nodes for outer integrals against 1/sqrt(4 - x^2).
  std::size_t outer_nodes = 128;
};

/// sqrt(4 - x^2) * D h(x) = pi^{-2} PV int h'(y) sqrt(4 - y^2) / (x - y) dy.
/// The singular part uses PV int sqrt(4 - y^2) / (x - y) dy = pi x.
inline double apply_D_scaled(const SmoothFunction& h, double x, std::size_t nodes = 128) {
  const auto q = chebyshev_gauss_u(nodes);
  const double hx = h.derivative(x);
  double s = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double y = q.nodes[j];
    const double d = x - y;
    if (std::abs(d) < 1e-13) {
      const double step = 1e-5;
      s -= q.weights[j] * (h.derivative(x + step) - h.derivative(x - step)) / (2.0 * step);
      continue;
    }
    s += q.weights[j] * (h.derivative(y) - hx) / d;
  }
  return (s + hx * kPi * x) / (kPi * kPi);
}

inline double apply_D(const SmoothFunction& h, double x, std::size_t nodes = 128) {
  if (!(std::abs(x) < 2.0)) fail(Errc::edge_evaluation, "D is singular at the edges of [-2, 2]");
  return apply_D_scaled(h, x, nodes) / std::sqrt(4.0 - x * x);
}

/// (D u, v) over [-2, 2] from the principal-value definition.
inline double d_pairing(const SmoothFunction& u, const SmoothFunction& v, const OperatorOptions& opts = {}) {
  const auto q = chebyshev_gauss_t(opts.outer_nodes);
  double s = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) s += q.weights[j] * apply_D_scaled(u, q.nodes[j], opts.pv_nodes) * v(q.nodes[j]);
  return s;
}

/// Matrix of (D T_j, T_i) for the modes T_k(x/2), k < count, by principal-value quadrature.
inline Eigen::MatrixXd d_matrix(std::size_t count, const OperatorOptions& opts = {}) {
  std::vector<SmoothFunction> modes;
  for (std::size_t k = 0; k < count; ++k) modes.push_back(chebyshev_mode(static_cast<int>(k)));
  const auto q = chebyshev_gauss_t(opts.outer_nodes);
  Eigen::MatrixXd scaled(static_cast<Eigen::Index>(q.size()), static_cast<Eigen::Index>(count));
  Eigen::MatrixXd vals(static_cast<Eigen::Index>(q.size()), static_cast<Eigen::Index>(count));
  for (std::size_t j = 0; j < q.size(); ++j)
    for (std::size_t k = 0; k < count; ++k) {
      scaled(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = q.weights[j] * apply_D_scaled(modes[k], q.nodes[j], opts.pv_nodes);
      vals(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = modes[k](q.nodes[j]);
    }
  return vals.transpose() * scaled;
}

struct DbarForm {
  double pv = 0.0;         ///< (D h, h) from the principal-value definition
  double chebyshev = 0.0;  ///< sum_k k (kappa h_k)^2
  double kappa = 0.0;
  double discrepancy = 0.0;  ///< relative difference of the two routes
};

/// kappa such that sum_k k (kappa h_k)^2 reproduces the principal-value form, fixed on h = x.
inline double calibrate_kappa(const OperatorOptions& opts = {}) {
  const auto h = monomial(1);
  const double pv = d_pairing(h, h, opts);
  const auto c = cheb_coeffs(h.value, 4);
  double s = 0.0;
  for (std::size_t k = 1; k < c.size(); ++k) s += static_cast<double>(k) * c[k] * c[k];
  return std::sqrt(pv / s);
}

/// The covariance form (Dbar h, h). D is self-adjoint on [-2, 2], so Dbar = D.
inline DbarForm dbar_form(const SmoothFunction& h, std::size_t modes = 64, const OperatorOptions& opts = {}) {
  static const double kappa = calibrate_kappa();
  DbarForm f;
  f.kappa = kappa;
  f.pv = d_pairing(h, h, opts);
  const auto c = cheb_coeffs(h.value, modes);
  for (std::size_t k = 1; k < c.size(); ++k) f.chebyshev += static_cast<double>(k) * (kappa * c[k]) * (kappa * c[k]);
  const double scale = std::max(std::abs(f.pv), std::abs(f.chebyshev));
  f.discrepancy = scale > 0.0 ? std::abs(f.pv - f.chebyshev) / scale : 0.0;
  return f;
}

/// L[f](x) = int log|x - y| f(y) dy for a density f on [-2, 2], through the expansion of
/// f(y) sqrt(4 - y^2) in T_k(y/2).
inline std::function<double(double)> log_kernel_apply(const std::function<double(double)>& f, std::size_t modes = 64) {
  const auto s = ChebSeries::interpolate([&](double y) { return f(y) * std::sqrt(4.0 - y * y); }, kSupport, modes);
  return [c = s.coeffs()](double x) { return weighted_log_potential(c, x); };
}

/// Same, for a density already given as g(y) / sqrt(4 - y^2) with g smooth.
inline std::function<double(double)> log_kernel_apply_weighted(const std::function<double(double)>& g,
                                                               std::size_t modes = 64) {
  const auto s = ChebSeries::interpolate(g, kSupport, modes);
  return [c = s.coeffs()](double x) { return weighted_log_potential(c, x); };
}

/// max over an interior grid of |L Dbar v + v - pi^{-1} (v, X^{-1/2})|.
inline double identity_rank_one_residual(const SmoothFunction& v, std::size_t grid = 256, const OperatorOptions& opts = {}) {
  const auto ldv = log_kernel_apply_weighted([&](double x) { return apply_D_scaled(v, x, opts.pv_nodes); }, 64);
  const auto q = chebyshev_gauss_t(opts.outer_nodes);
  const double a0 = q.integrate([&](double x) { return v(x); }) / kPi;
  double r = 0.0;
  for (std::size_t i = 0; i < grid; ++i) {
    const double x = -2.0 + 4.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(grid);
    r = std::max(r, std::abs(ldv(x) + v(x) - a0));
  }
  return r;
}

/// log |(zeta(x) - zeta(y)) / (x - y)| given zeta values; diagonal log zeta'.
inline double deformation_kernel(double x, double y, double zx, double zy, double dzx) {
  const double d = x - y;
  if (std::abs(d) < 1e-12) return std::log(dzx);
  return std::log(std::abs((zx - zy) / d));
}

struct KernelMatrix {
  ChebGrid grid;
  MapView map;
  std::vector<double> zeta;        ///< zeta at the grid nodes
  std::vector<double> zeta_prime;  ///< zeta' at the grid nodes
  Eigen::MatrixXd raw;             ///< L(x_i, x_j)
  Eigen::MatrixXd weighted;        ///< W^{1/2} L W^{1/2}
};

inline KernelMatrix kernel_matrix(const MapView& map, const ChebGrid& grid) {
  const std::size_t n = grid.size();
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(grid.nodes[i + 1] - grid.nodes[i] > 1e-14)) fail(Errc::coincident_nodes, "grid nodes are not distinct");
  for (double x : grid.nodes)
    if (!map.domain.contains(x)) fail(Errc::out_of_domain, "grid leaves the domain of the map");
  KernelMatrix k;
  k.grid = grid;
  k.map = map;
  k.zeta.resize(n);
  k.zeta_prime.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    k.zeta[i] = map.zeta(grid.nodes[i]);
    k.zeta_prime[i] = map.zeta_prime(grid.nodes[i]);
  }
  const auto nn = static_cast<Eigen::Index>(n);
  k.raw.resize(nn, nn);
  k.weighted.resize(nn, nn);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = i == j ? std::log(k.zeta_prime[i])
                              : deformation_kernel(grid.nodes[i], grid.nodes[j], k.zeta[i], k.zeta[j], k.zeta_prime[i]);
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      k.raw(ii, jj) = k.raw(jj, ii) = v;
      k.weighted(ii, jj) = k.weighted(jj, ii) = std::sqrt(grid.weights[i] * grid.weights[j]) * v;
    }
  }
  return k;
}

/// Eigenvalues below this size are indistinguishable from rounding in the kernel entries.
inline constexpr double kEtaFloor = 1e-12;

class KernelSpectrum {
 public:
  const std::vector<double>& etas() const { return etas_; }
  /// phis()(i, k) = phi_k at grid node i; orthonormal under the grid weights.
  const Eigen::MatrixXd& phis() const { return phis_; }
  std::size_t truncation() const { return m_; }
  std::optional<double> decay_rate() const { return decay_; }
  double tail_mass() const { return tail_; }
  const ChebGrid& grid() const { return kernel_.grid; }
  const KernelMatrix& kernel() const { return kernel_; }

  /// Nystrom extension phi_k(x) = eta_k^{-1} sum_i w_i L(x, x_i) phi_k(x_i).
  double phi(std::size_t k, double x) const {
    const auto& g = kernel_.grid;
    const double zx = kernel_.map.zeta(x);
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double l = std::abs(x - g.nodes[i]) < 1e-12
                           ? std::log(kernel_.zeta_prime[i])
                           : std::log(std::abs((zx - kernel_.zeta[i]) / (x - g.nodes[i])));
      s += g.weights[i] * l * phis_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }
    return s / etas_[k];
  }

  /// phi_k at every grid node plus extra points, as a row vector per point.
  std::vector<double> phis_at(double x) const {
    std::vector<double> r(m_);
    for (std::size_t k = 0; k < m_; ++k) r[k] = phi(k, x);
    return r;
  }

  /// max |W^{1/2} L W^{1/2} - sum_{k<M} eta_k v_k v_k^T|
  double reconstruction_error_weighted() const {
    Eigen::MatrixXd r = kernel_.weighted;
    for (std::size_t k = 0; k < m_; ++k) r -= etas_[k] * vecs_.col(static_cast<Eigen::Index>(k)) * vecs_.col(static_cast<Eigen::Index>(k)).transpose();
    return r.cwiseAbs().maxCoeff();
  }

  /// max |L - sum_{k<M} eta_k phi_k phi_k^T| on the grid.
  double reconstruction_error() const {
    Eigen::MatrixXd r = kernel_.raw;
    for (std::size_t k = 0; k < m_; ++k) r -= etas_[k] * phis_.col(static_cast<Eigen::Index>(k)) * phis_.col(static_cast<Eigen::Index>(k)).transpose();
    return r.cwiseAbs().maxCoeff();
  }

  double orthonormality_error() const {
    const auto& w = kernel_.grid.weights;
    Eigen::VectorXd wv = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    const Eigen::MatrixXd g = phis_.transpose() * wv.asDiagonal() * phis_;
    return (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
  }

 private:
  friend KernelSpectrum eigendecompose(const KernelMatrix& k, double tail_tolerance);

  KernelMatrix kernel_;
  std::vector<double> etas_;
  Eigen::MatrixXd vecs_, phis_;
  std::size_t m_ = 0;
  std::optional<double> decay_;
  double tail_ = 0.0;
};

/// Full symmetric eigendecomposition, sorted by decreasing |eta|. M is the smallest
/// count whose discarded tail sum |eta_k| is below `tail_tolerance`.
inline KernelSpectrum eigendecompose(const KernelMatrix& k, double tail_tolerance = 1e-12) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k.weighted);
  const auto n = static_cast<std::size_t>(k.weighted.rows());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(es.eigenvalues()(static_cast<Eigen::Index>(a))) > std::abs(es.eigenvalues()(static_cast<Eigen::Index>(b)));
  });
  KernelSpectrum s;
  s.kernel_ = k;
  s.etas_.resize(n);
  s.vecs_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < n; ++c) {
    s.etas_[c] = es.eigenvalues()(static_cast<Eigen::Index>(order[c]));
    s.vecs_.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(static_cast<Eigen::Index>(order[c]));
  }
  // Fix the sign of each eigenvector so results are reproducible.
  for (std::size_t c = 0; c < n; ++c) {
    Eigen::Index arg;
    s.vecs_.col(static_cast<Eigen::Index>(c)).cwiseAbs().maxCoeff(&arg);
    if (s.vecs_(arg, static_cast<Eigen::Index>(c)) < 0.0) s.vecs_.col(static_cast<Eigen::Index>(c)) *= -1.0;
  }
  std::vector<double> tail(n + 1, 0.0);
  for (std::size_t c = n; c-- > 0;) tail[c] = tail[c + 1] + std::abs(s.etas_[c]);
  s.m_ = n;
  for (std::size_t m = 0; m <= n; ++m)
    if (tail[m] < tail_tolerance) {
      s.m_ = m;
      break;
    }
  s.tail_ = tail[s.m_];
  s.phis_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(s.m_));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < s.m_; ++c)
      s.phis_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          s.vecs_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) / std::sqrt(k.grid.weights[i]);
  // Least squares for log|eta_k| = a - c k over the eigenvalues above the rounding floor.
  std::size_t fit = 0;
  while (fit < s.m_ && std::abs(s.etas_[fit]) > kEtaFloor) ++fit;
  if (fit >= 2) {
    double sk = 0, sy = 0, skk = 0, sky = 0;
    const double cnt = static_cast<double>(fit);
    for (std::size_t c = 0; c < fit; ++c) {
      const double kk = static_cast<double>(c + 1), y = std::log(std::abs(s.etas_[c]));
      sk += kk;
      sy += y;
      skk += kk * kk;
      sky += kk * y;
    }
    s.decay_ = -(cnt * sky - sk * sy) / (cnt * skk - sk * sk);
  }
  return s;
}

struct ContractionMatrices {
  Eigen::MatrixXd plus, minus;
  std::vector<std::size_t> plus_modes, minus_modes;
  double norm_plus = 0.0;
  double norm_minus = 0.0;
  double asymmetry = 0.0;
};

/// K^{+-}_{jk} = |eta_j eta_k|^{1/2} (Dbar phi_k, phi_j) over the modes with eta > 0 (resp. < 0).
/// Each phi_k is resampled on [-2, 2] through its Nystrom extension and differentiated as a Chebyshev series.
inline ContractionMatrices contraction_matrices(const KernelSpectrum& s, std::size_t resample = 64,
                                                const OperatorOptions& opts = {}) {
  ContractionMatrices c;
  const std::size_t m = s.truncation();
  std::vector<SmoothFunction> modes;
  for (std::size_t k = 0; k < m; ++k) {
    const auto series = ChebSeries::interpolate([&](double x) { return s.phi(k, x); }, kSupport, resample);
    modes.push_back(chebyshev_function(series, "phi" + std::to_string(k)));
    (s.etas()[k] > 0.0 ? c.plus_modes : c.minus_modes).push_back(k);
  }
  const auto q = chebyshev_gauss_t(opts.outer_nodes);
  Eigen::MatrixXd dvals(static_cast<Eigen::Index>(q.size()), static_cast<Eigen::Index>(m));
  Eigen::MatrixXd vals(static_cast<Eigen::Index>(q.size()), static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < q.size(); ++j)
    for (std::size_t k = 0; k < m; ++k) {
      dvals(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = q.weights[j] * apply_D_scaled(modes[k], q.nodes[j], opts.pv_nodes);
      vals(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = modes[k](q.nodes[j]);
    }
  // pair(j, k) = (D phi_k, phi_j)
  const Eigen::MatrixXd pair = vals.transpose() * dvals;
  auto build = [&](const std::vector<std::size_t>& idx, Eigen::MatrixXd& out, double& norm) {
    const auto d = static_cast<Eigen::Index>(idx.size());
    out.resize(d, d);
    for (Eigen::Index a = 0; a < d; ++a)
      for (Eigen::Index b = 0; b < d; ++b) {
        const auto ja = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(a)]);
        const auto kb = static_cast<Eigen::Index>(idx[static_cast<std::size_t>(b)]);
        out(a, b) = std::sqrt(std::abs(s.etas()[static_cast<std::size_t>(ja)] * s.etas()[static_cast<std::size_t>(kb)])) * pair(ja, kb);
      }
    if (d > 0) {
      c.asymmetry = std::max(c.asymmetry, (out - out.transpose()).cwiseAbs().maxCoeff());
      const Eigen::MatrixXd sym = 0.5 * (out + out.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
      norm = es.eigenvalues().cwiseAbs().maxCoeff();
    }
  };
  build(c.plus_modes, c.plus, c.norm_plus);
  build(c.minus_modes, c.minus, c.norm_minus);
  return c;
}

/// (h, nu_beta) = (1 - beta/2) [ (h(-2) + h(2))/4 - (1/2pi) int h / sqrt(4 - x^2) - (D log P, h)/2 ].
inline double nu_beta_pairing(const SmoothFunction& h, const EquilibriumData& e, double beta, const OperatorOptions& opts = {}) {
  const double pref = 1.0 - 0.5 * beta;
  if (pref == 0.0) return 0.0;
  const auto q = chebyshev_gauss_t(opts.outer_nodes);
  const double avg = q.integrate([&](double x) { return h(x); }) / (2.0 * kPi);
  const SmoothFunction log_p{"logP", [&e](double x) { return std::log(e.P(x)); },
                             [&e](double x) { return e.P_prime(x) / e.P(x); }};
  const double dlp = d_pairing(log_p, h, opts);
  return pref * (0.25 * (h(-2.0) + h(2.0)) - avg - 0.5 * dlp);
}

struct DeformationIdentity {
  double residual = 0.0;  ///< max |g - mean g|
  double constant = 0.0;  ///< mean g
};

/// g(x) = 2 int L(x, y) rho_sc(y) dy - V(zeta(x)) + x^2/2 on a midpoint grid over the map's domain.
/// For the transport map g equals the difference of the two Robin constants, also outside [-2, 2].
inline DeformationIdentity deformation_identity_residual(const EquilibriumData& e, const MapView& map,
                                                         std::size_t grid = 256, std::size_t nodes = 128) {
  const auto q = chebyshev_gauss_u(nodes);
  std::vector<double> zy(q.size()), dzy(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) {
    zy[j] = map.zeta(q.nodes[j]);
    dzy[j] = map.zeta_prime(q.nodes[j]);
  }
  std::vector<double> g(grid);
  double mean = 0.0;
  for (std::size_t i = 0; i < grid; ++i) {
    const double x = map.domain.lo + map.domain.length() * (static_cast<double>(i) + 0.5) / static_cast<double>(grid);
    const double zx = map.zeta(x);
    const double dzx = map.zeta_prime(x);
    double s = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) s += q.weights[j] * deformation_kernel(x, q.nodes[j], zx, zy[j], dzx);
    g[i] = 2.0 * s / (2.0 * kPi) - e.potential().value(zx) + 0.5 * x * x;
    mean += g[i];
  }
  mean /= static_cast<double>(grid);
  DeformationIdentity d;
  d.constant = mean;
  for (double v : g) d.residual = std::max(d.residual, std::abs(v - mean));
  return d;
}

}  // namespace betalab
