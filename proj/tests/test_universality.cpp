#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "betalab/universality.hpp"

using namespace betalab;

namespace {

EquilibriumData quartic_eq(double g) {
  PotentialSpec s;
  s.kind = PotentialKind::even_quartic;
  s.g = g;
  return compute_P(make_potential(s));
}

KernelSpectrum spectrum_of(const EquilibriumData& e, std::size_t grid = 128) {
  const auto t = solve_transport(e);
  return eigendecompose(kernel_matrix(t.view(), make_cheb_grid(grid, t.domain())));
}

KernelSpectrum identity_spectrum() {
  const Interval d{-2.2, 2.2};
  return eigendecompose(kernel_matrix(identity_map(d), make_cheb_grid(64, d)));
}

EnsembleSample head(const EnsembleSample& s, std::size_t first, std::size_t count) {
  EnsembleSample r = s;
  r.count = count;
  r.values.assign(s.values.begin() + static_cast<std::ptrdiff_t>(first * s.n),
                  s.values.begin() + static_cast<std::ptrdiff_t>((first + count) * s.n));
  return r;
}

double sum_squares(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

}  // namespace

TEST(Clt, GaussianTraceAnchor) {
  const auto e = compute_P(make_potential({}));
  const auto s = sample_gaussian(100, 2.0, 4000, 31);
  const auto r = clt_report(s, monomial(1), e);
  EXPECT_EQ(r.predicted_mean, 0.0);
  EXPECT_NEAR(r.predicted_variance, 1.0, 1e-12);
  EXPECT_LT(std::abs(r.z_mean), 3.0);
  EXPECT_LT(std::abs(r.z_variance), 3.0);
  EXPECT_GT(r.mean_se, 0.0);
  EXPECT_GT(r.variance_se, 0.0);
  EXPECT_GT(r.normality_p, 0.01);
}

TEST(Clt, OrthogonalMeanShift) {
  // E sum x^2 - n = 2/beta - 1 exactly for the Gaussian ensemble; at beta = 1 that is 1.
  const auto e = compute_P(make_potential({}));
  const auto s = sample_gaussian(100, 1.0, 4000, 32);
  const auto r = clt_report(s, monomial(2), e);
  EXPECT_NEAR(r.predicted_mean, 1.0, 1e-12);
  EXPECT_NEAR(r.predicted_variance, 4.0, 1e-12);
  EXPECT_LT(std::abs(r.z_mean), 3.0);
  EXPECT_LT(std::abs(r.z_variance), 3.0);
}

TEST(Clt, TooFewSamples) {
  const auto e = compute_P(make_potential({}));
  try {
    clt_report(sample_gaussian(20, 2.0, 50, 1), monomial(1), e);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::insufficient_samples);
  }
}

TEST(Gaps, UnfoldedMeanIsOne) {
  const auto e = compute_P(make_potential({}));
  const auto s = sample_gaussian(200, 2.0, 200, 6);
  for (double l0 : {0.0, 0.5, -1.0}) {
    const auto g = unfold_and_gaps(s, e, l0);
    EXPECT_NEAR(g.mean_gap, 1.0, 0.05) << l0;
    EXPECT_GT(g.gaps.size(), 2000u);
    for (double v : g.gaps) EXPECT_GT(v, 0.0);
  }
  const auto q = quartic_eq(0.1);
  McmcOptions o;
  o.chains = 2;
  const auto m = sample_mcmc(q, 100, 2.0, 60, 6, o);
  EXPECT_NEAR(unfold_and_gaps(m, q, 0.0).mean_gap, 1.0, 0.05);
}

TEST(Gaps, Preconditions) {
  const auto e = compute_P(make_potential({}));
  const auto s = sample_gaussian(50, 2.0, 5, 1);
  try {
    unfold_and_gaps(s, e, 1.999);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::precondition);
  }
  BulkOptions tiny;
  tiny.window = 1e-6;
  try {
    unfold_and_gaps(s, e, 0.0, tiny);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::empty_window);
  }
}

TEST(Gaps, SelfConsistencyAcrossRuns) {
  const auto e = compute_P(make_potential({}));
  const auto a = unfold_and_gaps(sample_gaussian(400, 2.0, 250, 101), e, 0.0);
  const auto b = unfold_and_gaps(sample_gaussian(400, 2.0, 250, 202), e, 0.0);
  EXPECT_LT(stats::ks_two_sample(a.gaps, b.gaps).distance, 0.02);
}

TEST(Phi, ZeroAndFirstIntensity) {
  const auto e = compute_P(make_potential({}));
  const auto s = sample_gaussian(200, 2.0, 400, 8);
  const TestFunctionSet zero{"zero", {[](double) { return 0.0; }}};
  const auto z = phi_estimate(s, e, 0.0, zero);
  EXPECT_EQ(z.value, 0.0);
  const auto one = phi_estimate(s, e, 0.0, default_test_bank()[0]);
  EXPECT_EQ(one.k, 1u);
  EXPECT_NEAR(one.value, 1.0, 3 * one.se + 0.01);
}

TEST(Phi, BumpHasUnitIntegral) {
  const auto b = bump(0.3, 1.7);
  const auto q = gauss_legendre(400, {0.3 - 1.7, 0.3 + 1.7});
  EXPECT_NEAR(q.integrate(b), 1.0, 1e-10);
  EXPECT_EQ(b(2.1), 0.0);
}

TEST(Phi, PairStatisticAcrossSeeds) {
  const auto e = compute_P(make_potential({}));
  const auto a = sample_gaussian(200, 2.0, 400, 41);
  const auto b = sample_gaussian(200, 2.0, 400, 42);
  for (const auto& set : default_test_bank()) {
    if (set.phis.size() != 2) continue;
    const auto pa = phi_estimate(a, e, 0.0, set), pb = phi_estimate(b, e, 0.0, set);
    EXPECT_LT(std::abs(pa.value - pb.value), 2 * std::hypot(pa.se, pb.se)) << set.id;
  }
}

TEST(Phi, WindowTranslationStability) {
  const auto e = compute_P(make_potential({}));
  const std::size_t n = 200;
  const auto s = sample_gaussian(n, 2.0, 400, 43);
  for (double l0 : {0.0, 0.7}) {
    for (const auto& set : default_test_bank()) {
      const auto p = phi_estimate(s, e, l0, set);
      const auto q = phi_estimate(s, e, l0 + 1.0 / static_cast<double>(n), set);
      EXPECT_LT(std::abs(p.value - q.value), 2 * std::hypot(p.se, q.se)) << set.id << " " << l0;
    }
  }
  // averaging over shifts leaves the first intensity at 1
  const auto avg = phi_estimate(s, e, 0.0, default_test_bank()[0], 9);
  EXPECT_NEAR(avg.value, 1.0, 3 * avg.se + 0.01);
}

TEST(Universality, MismatchedParameters) {
  const auto e = compute_P(make_potential({}));
  try {
    universality_distance(sample_gaussian(50, 2.0, 10, 1), sample_gaussian(60, 2.0, 10, 1), 0.0, e, e);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), Errc::mismatched_parameters);
  }
  EXPECT_THROW(universality_distance(sample_gaussian(50, 2.0, 10, 1), sample_gaussian(50, 1.0, 10, 1), 0.0, e, e), Error);
}

TEST(Universality, GaussianTranslationWithinNoiseFloor) {
  const auto e = compute_P(make_potential({}));
  const auto v = sample_gaussian(200, 2.0, 300, 51);
  const auto g = sample_gaussian(200, 2.0, 300, 52);
  const auto d = universality_distance(v, g, 0.5, e, e);
  EXPECT_LT(d.ks, d.noise_floor + 0.02);
  EXPECT_EQ(d.phi_difference.size(), default_test_bank().size());
  for (std::size_t k = 0; k < d.phi_difference.size(); ++k) EXPECT_LT(d.phi_difference[k], 4 * d.phi_difference_se[k]);
}

TEST(Universality, SameLawSplitVersusCross) {
  // With equal-size halves, the cross distance beats the split distance about half the time
  // when the laws agree; a genuinely different law wins almost always.
  const auto e = compute_P(make_potential({}));
  const std::size_t n = 100, per = 40, reps = 25;
  int same = 0, different = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto ref = sample_gaussian(n, 2.0, 2 * per, 1000 + r);
    const auto a = unfold_and_gaps(head(ref, 0, per), e, 0.0).gaps;
    const auto b = unfold_and_gaps(head(ref, per, per), e, 0.0).gaps;
    const double split = stats::ks_two_sample(a, b).distance;
    const auto shifted = unfold_and_gaps(sample_gaussian(n, 2.0, per, 5000 + r), e, 0.5).gaps;
    if (stats::ks_two_sample(shifted, a).distance > split) ++same;
    const auto other = unfold_and_gaps(sample_gaussian(n, 4.0, per, 9000 + r), e, 0.0).gaps;
    if (stats::ks_two_sample(other, a).distance > split) ++different;
  }
  // Binomial(25, 1/2): P(X <= 4 or X >= 21) < 1e-3
  EXPECT_GE(same, 5);
  EXPECT_LE(same, 20);
  EXPECT_GE(different, 23);
}

TEST(Hamiltonian, IdentityMap) {
  const auto e = compute_P(make_potential({}));
  const auto h = hamiltonian_identity_residual(e, identity_spectrum(), 2.0, random_configurations(8, 50, 3));
  EXPECT_LT(h.residual, 1e-9);
  EXPECT_EQ(h.modes, 0u);
}

TEST(Hamiltonian, QuarticConstancyAndTruncation) {
  const auto e = quartic_eq(0.1);
  const auto s = spectrum_of(e);
  const auto cfg = random_configurations(8, 50, 4);
  for (double beta : {1.0, 2.0, 4.0}) EXPECT_LT(hamiltonian_identity_residual(e, s, beta, cfg).residual, 1e-6);
  const auto full = hamiltonian_identity_residual(e, s, 2.0, cfg);
  const auto cut = hamiltonian_identity_residual(e, s, 2.0, cfg, 2);
  EXPECT_EQ(cut.modes, 2u);
  EXPECT_GT(cut.residual, 1e-2);
  EXPECT_GT(cut.residual, 1e4 * full.residual);
}

TEST(Hamiltonian, RandomConfigurationsLieInSupport) {
  const auto c = random_configurations(16, 10, 9);
  ASSERT_EQ(c.size(), 10u);
  for (const auto& x : c) {
    ASSERT_EQ(x.size(), 16u);
    for (double v : x) {
      EXPECT_GT(v, -2.0);
      EXPECT_LT(v, 2.0);
    }
  }
  EXPECT_EQ(random_configurations(4, 3, 9), random_configurations(4, 3, 9));
}

TEST(Linearization, GaussianRoutesCoincide) {
  const auto e = compute_P(make_potential({}));
  LinearizationOptions o;
  o.nodes = 48;
  const auto r = linearization_check(e, identity_spectrum(), 2, 4.0, sum_squares, o);
  EXPECT_LT(r.discrepancy, 1e-10);
  EXPECT_EQ(r.discarded_mass, 0.0);
}

TEST(Linearization, QuarticAndControl) {
  const auto e = quartic_eq(0.1);
  const auto s = spectrum_of(e);
  const auto r = linearization_check(e, s, 2, 4.0, sum_squares);
  EXPECT_LT(r.discrepancy, 1e-3);
  EXPECT_GT(r.discarded_mass, 0.0);
  // E sum x^2 under V: independent of the sampler, near 2 * 1.1 for the equilibrium second moment
  EXPECT_NEAR(r.left, 2.2, 0.5);
  LinearizationOptions no_log;
  no_log.include_log_term = false;
  EXPECT_GT(linearization_check(e, s, 2, 4.0, sum_squares, no_log).discrepancy, 1e-2);
  EXPECT_THROW(linearization_check(e, s, 4, 4.0, sum_squares), Error);
}
