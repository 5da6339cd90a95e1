// Walks the quartic potential through the whole pipeline and prints one line per stage.
// Usage: quartic_pipeline [g] [n] [samples]

#include <cstdio>
#include <cstdlib>

#include "betalab/betalab.hpp"

using namespace betalab;

int main(int argc, char** argv) {
  const double g = argc > 1 ? std::atof(argv[1]) : 0.1;
  const std::size_t n = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 60;
  const std::size_t samples = argc > 3 ? std::strtoul(argv[3], nullptr, 10) : 200;

  PotentialSpec spec;
  spec.kind = PotentialKind::even_quartic;
  spec.g = g;
  try {
    const auto e = compute_P(make_potential(spec));
    std::printf("equilibrium  P(0) = %.12f (expected %.12f), robin %.6f\n", e.P(0.0), 1.0 - g, e.robin_constant());

    const auto t = solve_transport(e);
    std::printf("transport    zeta(0) = %.2e, zeta'(0) = %.6f, residual %.2e\n", t.zeta(0.0), t.zeta_prime(0.0),
                transport_residual(t));

    const auto s = eigendecompose(kernel_matrix(t.view(), make_cheb_grid(256, t.domain())));
    const auto k = contraction_matrices(s);
    std::printf("spectrum     eta_0 = %.4f, decay %.3f, M = %zu, |K+| = %.4f\n", s.etas()[0], s.decay_rate().value_or(0.0),
                s.truncation(), k.norm_plus);

    const auto configs = random_configurations(8, 50, 3);
    std::printf("identity     hamiltonian residual %.2e\n", hamiltonian_identity_residual(e, s, 2.0, configs).residual);

    McmcOptions mo;
    mo.chains = 2;
    const auto smp = sample_mcmc(e, n, 2.0, samples, 11, mo);
    std::printf("sampling     acceptance %.3f, tau %.1f sweeps\n", smp.diagnostics.acceptance_rate, smp.diagnostics.tau_int);

    if (samples >= 100) {
      const auto r = clt_report(smp, monomial(2), e);
      std::printf("clt x^2      var %.4f +- %.4f, predicted %.4f\n", r.empirical_variance, r.variance_se, r.predicted_variance);
    }
  } catch (const Error& err) {
    std::fprintf(stderr, "%s: %s\n", std::string(to_string(err.code())).c_str(), err.what());
    return 1;
  }
  return 0;
}
