#pragma once

// Eigenvalue configurations of the beta-ensemble
//   p(x) ~ exp{ (beta/2) [ -n sum V(x_i) + sum_{i != j} log|x_i - x_j| ] }
// restricted to the window sigma_{epsilon/2}: an exact tridiagonal sampler for
// V = x^2/2, single-site Metropolis for general V, and tensor quadrature for n <= 4.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "betalab/equilibrium.hpp"
#include "betalab/error.hpp"
#include "betalab/function.hpp"
#include "betalab/numeric.hpp"
#include "betalab/potentials.hpp"
#include "betalab/stats.hpp"

namespace betalab {

enum class SamplerKind { gaussian_tridiag, mcmc, quadrature };

inline std::string to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::gaussian_tridiag: return "gaussian-tridiag";
    case SamplerKind::mcmc: return "mcmc";
    case SamplerKind::quadrature: return "quadrature";
  }
  return "unknown";
}

struct ChainDiagnostics {
  double acceptance_rate = 0.0;
  double tau_int = 0.0;  ///< sweeps, max over the tracked observables
  std::size_t burn_in = 0;
  std::size_t sweeps_per_sample = 0;
  double proposal_width = 0.0;
  std::size_t samples = 0;
};

struct SamplerDiagnostics {
  std::vector<ChainDiagnostics> chains;
  double acceptance_rate = 0.0;
  double tau_int = 0.0;
  std::size_t burn_in = 0;
  std::size_t sweeps_per_sample = 0;
  /// Tridiagonal draws discarded for leaving the window.
  std::size_t rejected_draws = 0;
  /// Acceptance outside [0.2, 0.6].
  bool flagged = false;
};

struct EnsembleSample {
  std::size_t n = 0;
  std::size_t count = 0;
  double beta = 2.0;
  std::string potential_id;
  SamplerKind sampler = SamplerKind::gaussian_tridiag;
  std::uint64_t seed = 0;
  Interval window{};
  SamplerDiagnostics diagnostics;
  /// Row-major count x n, each row ascending.
  std::vector<double> values;

  std::span<const double> config(std::size_t s) const { return {values.data() + s * n, n}; }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream for (seed, stream index).
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

/// Runs f(0..count-1) on up to `threads` workers. Results must be written to per-index slots.
inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < count;) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

struct GaussianSamplerOptions {
  double epsilon = 0.2;
  /// Draws are generated in fixed blocks so results do not depend on the thread count.
  std::size_t block = 64;
  unsigned threads = 1;
};

/// Dumitriu-Edelman tridiagonal model scaled by sqrt(2 / (beta n)), so that the joint law
/// is the beta-ensemble with V = x^2/2. Draws leaving the window are redrawn.
inline EnsembleSample sample_gaussian(std::size_t n, double beta, std::size_t count, std::uint64_t seed,
                                      const GaussianSamplerOptions& opts = {}) {
  if (n < 2) fail(Errc::precondition, "sample_gaussian needs n >= 2");
  if (!(beta > 0.0)) fail(Errc::precondition, "beta must be positive");
  if (count < 1) fail(Errc::precondition, "sample count must be positive");
  EnsembleSample s;
  s.n = n;
  s.count = count;
  s.beta = beta;
  s.potential_id = "gaussian";
  s.sampler = SamplerKind::gaussian_tridiag;
  s.seed = seed;
  s.window = widened_support(0.5 * opts.epsilon);
  s.values.resize(count * n);
  const std::size_t blocks = (count + opts.block - 1) / opts.block;
  std::vector<std::size_t> rejected(blocks, 0);
  const double scale = std::sqrt(2.0 / (beta * static_cast<double>(n)));
  parallel_for(blocks, opts.threads, [&](std::size_t b) {
    auto rng = stream_rng(seed, b);
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0));
    std::vector<std::chi_squared_distribution<double>> chi;
    for (std::size_t k = 1; k < n; ++k) chi.emplace_back(beta * static_cast<double>(n - k));
    Eigen::VectorXd diag(static_cast<Eigen::Index>(n)), off(static_cast<Eigen::Index>(n - 1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    const std::size_t lo = b * opts.block, hi = std::min(count, lo + opts.block);
    for (std::size_t r = lo; r < hi;) {
      for (std::size_t i = 0; i < n; ++i) diag(static_cast<Eigen::Index>(i)) = normal(rng) / std::sqrt(2.0) * scale;
      for (std::size_t i = 0; i + 1 < n; ++i) off(static_cast<Eigen::Index>(i)) = std::sqrt(chi[i](rng) / 2.0) * scale;
      es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
      const auto& ev = es.eigenvalues();
      if (ev(0) < s.window.lo || ev(static_cast<Eigen::Index>(n - 1)) > s.window.hi) {
        ++rejected[b];
        continue;
      }
      for (std::size_t i = 0; i < n; ++i) s.values[r * n + i] = ev(static_cast<Eigen::Index>(i));
      ++r;
    }
  });
  for (auto r : rejected) s.diagnostics.rejected_draws += r;
  s.diagnostics.acceptance_rate = 1.0;
  return s;
}

struct McmcOptions {
  /// Initial proposal standard deviation in units of the mean spacing 1/n; tuned during burn-in.
  std::optional<double> proposal_width;
  bool tune = true;
  double target_acceptance = 0.4;
  std::size_t burn_in = 0;            ///< sweeps; 0 selects 200 + 2 n
  std::size_t pilot = 0;              ///< sweeps used to estimate tau; 0 selects max(2000, 40 n)
  std::size_t sweeps_per_sample = 0;  ///< 0 selects ceil(5 tau)
  std::size_t chains = 8;
  double max_tau = 1e5;  ///< poor-mixing above this many sweeps
  unsigned threads = 1;
};

namespace detail {

/// Single-site Metropolis state for one chain.
class LogGasChain {
 public:
  LogGasChain(const Potential& v, std::size_t n, double beta, Interval window, std::vector<double> start,
              std::mt19937_64 rng)
      : v_(v), n_(n), beta_(beta), window_(window), x_(std::move(start)), rng_(std::move(rng)) {
    vx_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) vx_[i] = v_.value(x_[i]);
  }

  /// One sweep of n single-site proposals; returns the number accepted.
  std::size_t sweep(double width) {
    std::size_t accepted = 0;
    const double dn = static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const double step = width * normal_(rng_) / dn;
      const double y = x_[i] + step;
      const double u = uniform_(rng_);
      if (step == 0.0 || !(y > window_.lo && y < window_.hi)) continue;
      const double vy = v_.value(y);
      double log_ratio = -dn * (vy - vx_[i]);
      // sum_{j != i} 2 log|(y - x_j)/(x_i - x_j)|, as a product taken in chunks
      double prod = 1.0, logsum = 0.0;
      const double xi = x_[i];
      for (std::size_t j = 0; j < n_; ++j) {
        if (j == i) continue;
        prod *= (y - x_[j]) / (xi - x_[j]);
        if ((j & 15) == 15) {
          logsum += std::log(std::abs(prod));
          prod = 1.0;
        }
      }
      logsum += std::log(std::abs(prod));
      log_ratio += 2.0 * logsum;
      log_ratio *= 0.5 * beta_;
      if (log_ratio >= 0.0 || u < std::exp(log_ratio)) {
        x_[i] = y;
        vx_[i] = vy;
        ++accepted;
      }
    }
    return accepted;
  }

  const std::vector<double>& state() const { return x_; }

 private:
  const Potential& v_;
  std::size_t n_;
  double beta_;
  Interval window_;
  std::vector<double> x_, vx_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace detail

/// Metropolis sampler for the ensemble of the normalized potential of `e`.
inline EnsembleSample sample_mcmc(const EquilibriumData& e, std::size_t n, double beta, std::size_t count,
                                  std::uint64_t seed, const McmcOptions& opts = {}) {
  if (n < 2) fail(Errc::precondition, "sample_mcmc needs n >= 2");
  if (!(beta > 0.0)) fail(Errc::precondition, "beta must be positive");
  if (count < 1) fail(Errc::precondition, "sample count must be positive");
  const Potential& v = e.potential();
  EnsembleSample s;
  s.n = n;
  s.count = count;
  s.beta = beta;
  s.potential_id = v.id();
  s.sampler = SamplerKind::mcmc;
  s.seed = seed;
  s.window = v.domain();
  s.values.resize(count * n);

  const std::size_t chains = std::max<std::size_t>(1, std::min(opts.chains, count));
  const double width0 = opts.proposal_width.value_or(1.0);
  if (!(width0 >= 0.0)) fail(Errc::precondition, "proposal width must be non-negative");
  const std::size_t burn = opts.burn_in ? opts.burn_in : 200 + 2 * n;
  const std::size_t pilot = opts.pilot ? opts.pilot : std::max<std::size_t>(2000, 40 * n);

  std::vector<double> start(n);
  for (std::size_t i = 0; i < n; ++i) start[i] = e.quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));

  s.diagnostics.chains.resize(chains);
  parallel_for(chains, opts.threads, [&](std::size_t c) {
    detail::LogGasChain chain(v, n, beta, s.window, start, stream_rng(seed, c));
    ChainDiagnostics& d = s.diagnostics.chains[c];
    const double dn = static_cast<double>(n);
    double width = width0;
    // Burn-in with Robbins-Monro adaptation of log(width).
    std::size_t acc = 0, tried = 0;
    for (std::size_t t = 0; t < burn; ++t) {
      const std::size_t a = chain.sweep(width);
      acc += a;
      tried += n;
      if (opts.tune && width > 0.0) width *= std::exp((static_cast<double>(a) / dn - opts.target_acceptance) / std::sqrt(1.0 + t / 10.0));
    }
    if (acc == 0) fail(Errc::all_rejected, "every proposal was rejected (proposal width " + detail::format_number(width) + ")");
    d.proposal_width = width;
    d.burn_in = burn;

    // Pilot run for the autocorrelation of sum x^m, m = 1..4.
    std::vector<std::vector<double>> obs(4, std::vector<double>(pilot));
    acc = 0;
    tried = 0;
    for (std::size_t t = 0; t < pilot; ++t) {
      acc += chain.sweep(width);
      tried += n;
      double p1 = 0, p2 = 0, p3 = 0, p4 = 0;
      for (double x : chain.state()) {
        const double x2 = x * x;
        p1 += x;
        p2 += x2;
        p3 += x2 * x;
        p4 += x2 * x2;
      }
      obs[0][t] = p1;
      obs[1][t] = p2;
      obs[2][t] = p3;
      obs[3][t] = p4;
    }
    double tau = 1.0;
    for (const auto& o : obs) tau = std::max(tau, stats::integrated_autocorrelation(o));
    d.tau_int = tau;
    if (tau > opts.max_tau) fail(Errc::poor_mixing, "autocorrelation time " + detail::format_number(tau) + " exceeds the budget");
    d.sweeps_per_sample = opts.sweeps_per_sample ? opts.sweeps_per_sample : static_cast<std::size_t>(std::ceil(5.0 * tau));

    const std::size_t first = c * (count / chains) + std::min(c, count % chains);
    const std::size_t mine = count / chains + (c < count % chains ? 1 : 0);
    d.samples = mine;
    for (std::size_t k = 0; k < mine; ++k) {
      for (std::size_t t = 0; t < d.sweeps_per_sample; ++t) {
        acc += chain.sweep(width);
        tried += n;
      }
      std::vector<double> cfg = chain.state();
      std::sort(cfg.begin(), cfg.end());
      std::copy(cfg.begin(), cfg.end(), s.values.begin() + static_cast<std::ptrdiff_t>((first + k) * n));
    }
    d.acceptance_rate = tried ? static_cast<double>(acc) / static_cast<double>(tried) : 0.0;
  });

  auto& dg = s.diagnostics;
  double acc = 0.0;
  for (const auto& d : dg.chains) {
    acc += d.acceptance_rate;
    dg.tau_int = std::max(dg.tau_int, d.tau_int);
    dg.burn_in = std::max(dg.burn_in, d.burn_in);
    dg.sweeps_per_sample = std::max(dg.sweeps_per_sample, d.sweeps_per_sample);
  }
  dg.acceptance_rate = acc / static_cast<double>(dg.chains.size());
  dg.flagged = dg.acceptance_rate < 0.2 || dg.acceptance_rate > 0.6;
  return s;
}

using Observable = std::function<double(std::span<const double>)>;

/// Expectation under the ensemble restricted to the window, n <= 4. The measure is
/// exchangeable, so the integral runs over ordered configurations x_1 < ... < x_n with
/// nested Gauss-Legendre rules (the Vandermonde factor is smooth there) and f is averaged
/// over permutations.
inline double direct_expectation(const Potential& v, std::size_t n, double beta, const Observable& f,
                                 std::size_t nodes = 96, unsigned threads = 1) {
  if (n > 4) fail(Errc::dimension_too_large, "direct quadrature is limited to n <= 4");
  if (n < 1) fail(Errc::precondition, "n must be positive");
  const Interval d = v.domain();
  const auto q = gauss_legendre(nodes, {0.0, 1.0});
  const double dn = static_cast<double>(n);
  // log weight relative to the value at the minimum of V keeps exponentials in range
  double vmin = 1e300;
  for (double t : q.nodes) vmin = std::min(vmin, v.value(d.lo + d.length() * t));
  const double shift = 0.5 * beta * dn * dn * vmin - 0.5 * beta * dn * (dn - 1.0) * std::log(d.length());

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<std::size_t>> perms;
  do perms.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<double> num(nodes, 0.0), den(nodes, 0.0);
  parallel_for(nodes, threads, [&](std::size_t i0) {
    std::vector<double> x(n), y(n);
    double sn = 0.0, sd = 0.0;
    // depth-first over nested intervals [x_{k-1}, hi]
    std::function<void(std::size_t, double, double)> walk = [&](std::size_t k, double lo, double jac) {
      if (k == n) {
        double logw = -shift;
        for (std::size_t a = 0; a < n; ++a) {
          logw -= 0.5 * beta * dn * v.value(x[a]);
          for (std::size_t b = a + 1; b < n; ++b) logw += beta * std::log(x[b] - x[a]);
        }
        const double w = jac * std::exp(logw);
        double fs = 0.0;
        for (const auto& p : perms) {
          for (std::size_t a = 0; a < n; ++a) y[a] = x[p[a]];
          fs += f(y);
        }
        sd += w;
        sn += w * fs / static_cast<double>(perms.size());
        return;
      }
      const double len = d.hi - lo;
      auto visit = [&](std::size_t i) {
        x[k] = lo + len * q.nodes[i];
        walk(k + 1, x[k], jac * len * q.weights[i]);
      };
      if (k == 0) visit(i0);
      else
        for (std::size_t i = 0; i < nodes; ++i) visit(i);
    };
    walk(0, d.lo, 1.0);
    num[i0] = sn;
    den[i0] = sd;
  });
  double sn = 0.0, sd = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) {
    sn += num[i];
    sd += den[i];
  }
  return sn / sd;
}

/// sum_i h(x_i) for every configuration.
inline std::vector<double> linear_statistic(const EnsembleSample& s, const std::function<double(double)>& h) {
  std::vector<double> r(s.count);
  for (std::size_t k = 0; k < s.count; ++k) {
    double acc = 0.0;
    for (double x : s.config(k)) acc += h(x);
    r[k] = acc;
  }
  return r;
}

}  // namespace betalab
