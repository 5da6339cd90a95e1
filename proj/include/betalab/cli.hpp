#pragma once

// Command-line driver: equilibrium | transport | spectrum | sample | clt | bulk | verify.
// Exit codes: 0 success, 1 numerical failure or failed verification, 2 configuration error.
// Failures print one JSON error record on stderr.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "betalab/config.hpp"
#include "betalab/ensembles.hpp"
#include "betalab/equilibrium.hpp"
#include "betalab/io.hpp"
#include "betalab/operators.hpp"
#include "betalab/transport.hpp"
#include "betalab/universality.hpp"

namespace betalab::cli {

inline constexpr const char* kOutputDirEnv = "BETALAB_OUTPUT_DIR";

struct Context {
  RunConfig config;
  std::filesystem::path out_dir;
  std::string prefix;
  std::ostream* log = &std::cout;

  std::filesystem::path file(const std::string& suffix) const { return out_dir / (prefix + suffix); }
};

inline EquilibriumData build_equilibrium(const RunConfig& c) {
  EquilibriumOptions o;
  o.contour_nodes = c.contour_nodes;
  o.cheb_nodes = c.cheb_nodes;
  return compute_P(make_potential(c.potential), o);
}

inline TransportMap build_transport(const EquilibriumData& e, const RunConfig& c) {
  TransportOptions o;
  o.delta_e = c.delta_e;
  o.series_order = c.series_order;
  o.interior_nodes = c.interior_nodes;
  return solve_transport(e, o);
}

inline KernelSpectrum build_spectrum(const TransportMap& t, const RunConfig& c) {
  return eigendecompose(kernel_matrix(t.view(), make_cheb_grid(c.kernel_grid, t.domain())), c.tail_tolerance);
}

inline bool use_tridiagonal(const RunConfig& c) {
  if (c.sampler == "gaussian-tridiag") return true;
  if (c.sampler == "mcmc") return false;
  return make_potential(c.potential).kind() == PotentialKind::gaussian;
}

inline EnsembleSample draw(const EquilibriumData& e, const RunConfig& c, std::size_t count, std::uint64_t seed) {
  if (use_tridiagonal(c)) {
    if (e.potential().kind() != PotentialKind::gaussian)
      fail(Errc::config_error, "the tridiagonal sampler only applies to the gaussian potential");
    GaussianSamplerOptions o;
    o.epsilon = c.potential.epsilon;
    o.threads = c.threads;
    return sample_gaussian(c.n, c.beta, count, seed, o);
  }
  McmcOptions o;
  o.proposal_width = c.proposal_width;
  o.burn_in = c.burn_in;
  o.sweeps_per_sample = c.sweeps_per_sample;
  o.chains = c.chains;
  o.threads = c.threads;
  return sample_mcmc(e, c.n, c.beta, count, seed, o);
}

inline int cmd_equilibrium(const Context& ctx) {
  const auto e = build_equilibrium(ctx.config);
  auto doc = document("equilibrium", describe(ctx.config));
  doc["equilibrium"] = to_json(e);
  write_json(ctx.file(".equilibrium.json"), doc);
  write_text(ctx.file(".density.csv"), density_table(e).str());
  *ctx.log << "equilibrium " << e.potential().id() << ": robin " << e.robin_constant() << ", genericity margin "
           << e.genericity_margin() << "\n";
  return 0;
}

inline int cmd_transport(const Context& ctx) {
  const auto e = build_equilibrium(ctx.config);
  const auto t = build_transport(e, ctx.config);
  const double res = transport_residual(t);
  auto doc = document("transport", describe(ctx.config));
  doc["transport"] = to_json(t, res);
  write_json(ctx.file(".transport.json"), doc);
  write_text(ctx.file(".transport.csv"), transport_table(t).str());
  *ctx.log << "transport " << e.potential().id() << ": residual " << res << "\n";
  return 0;
}

inline int cmd_spectrum(const Context& ctx) {
  const auto e = build_equilibrium(ctx.config);
  const auto t = build_transport(e, ctx.config);
  const auto s = build_spectrum(t, ctx.config);
  const auto k = contraction_matrices(s);
  auto doc = document("spectrum", describe(ctx.config));
  doc["spectrum"] = to_json(s, &k);
  write_json(ctx.file(".spectrum.json"), doc);
  write_text(ctx.file(".spectrum.csv"), spectrum_table(s).str());
  *ctx.log << "spectrum " << e.potential().id() << ": M = " << s.truncation() << ", |K+| = " << k.norm_plus << "\n";
  return 0;
}

inline int cmd_sample(const Context& ctx) {
  const auto e = build_equilibrium(ctx.config);
  const auto s = draw(e, ctx.config, ctx.config.samples, ctx.config.seed);
  write_samples(ctx.file(".samples.bin"), s);
  *ctx.log << "sample " << s.potential_id << ": " << s.count << " x " << s.n << " (" << to_string(s.sampler) << ")\n";
  return 0;
}

inline EnsembleSample load_or_draw(const Context& ctx, const EquilibriumData& e, const std::optional<std::string>& input) {
  if (!input) return draw(e, ctx.config, ctx.config.samples, ctx.config.seed);
  auto s = read_samples(std::filesystem::path(*input));
  if (s.potential_id != e.potential().id())
    fail(Errc::mismatched_parameters, "sample potential " + s.potential_id + " does not match config " + e.potential().id());
  return s;
}

inline int cmd_clt(const Context& ctx, const std::optional<std::string>& input) {
  const auto e = build_equilibrium(ctx.config);
  const auto s = load_or_draw(ctx, e, input);
  std::vector<CltReport> reports;
  auto doc = document("clt-report", describe(ctx.config));
  doc["reports"] = Json::array();
  for (const auto& id : ctx.config.observables) {
    reports.push_back(clt_report(s, named_function(id), e));
    doc["reports"].push_back(to_json(reports.back()));
    *ctx.log << "clt " << id << ": z_mean " << reports.back().z_mean << ", z_var " << reports.back().z_variance << "\n";
  }
  write_json(ctx.file(".clt.report.json"), doc);
  write_text(ctx.file(".clt.csv"), clt_table(reports).str());
  return 0;
}

inline int cmd_bulk(const Context& ctx, const std::optional<std::string>& input) {
  const auto& c = ctx.config;
  const auto e = build_equilibrium(c);
  const auto s = load_or_draw(ctx, e, input);
  RunConfig gc = c;
  gc.potential = PotentialSpec{};
  gc.potential.epsilon = c.potential.epsilon;
  gc.sampler = "gaussian-tridiag";
  const auto eg = build_equilibrium(gc);
  const auto ref = draw(eg, gc, c.reference_samples ? c.reference_samples : s.count, splitmix64(s.seed ^ 0x5eedULL));
  if (ref.n != s.n || ref.beta != s.beta) fail(Errc::mismatched_parameters, "reference does not match the sample");

  BulkOptions bo;
  bo.window = c.window;
  bo.central_fraction = c.central_fraction;
  auto doc = document("bulk-report", describe(c));
  doc["windows"] = Json::array();
  for (double l0 : c.lambda0) {
    const auto d = universality_distance(s, ref, l0, e, eg, default_test_bank(), bo);
    const auto gaps = unfold_and_gaps(s, e, l0, bo);
    auto w = to_json(d, l0);
    w["window-half-width"] = gaps.window;
    w["unfolding"] = gaps.unfolding;
    doc["windows"].push_back(w);
    write_text(ctx.file(".gaps-" + detail::format_number(l0) + ".csv"), gap_histogram(gaps.gaps).str());
    *ctx.log << "bulk lambda0 = " << l0 << ": ks " << d.ks << " (noise floor " << d.noise_floor << ")\n";
  }
  write_json(ctx.file(".bulk.report.json"), doc);
  return 0;
}

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool above = false;  ///< negative controls must exceed the tolerance

  bool pass() const { return above ? value > tolerance : value < tolerance; }
};

/// Identity suite for the configured potential.
inline std::vector<Check> verification_checks(const RunConfig& c) {
  std::vector<Check> out;
  const auto e = build_equilibrium(c);
  const auto t = build_transport(e, c);
  const auto map = t.view();
  out.push_back({"transport-residual", transport_residual(t), 1e-7});
  out.push_back({"deformation-identity", deformation_identity_residual(e, map).residual, 1e-6});
  for (const char* h : {"x", "x^2", "x^3", "x^4", "T5", "T7", "cos", "sin", "exp", "cosh"})
    out.push_back({std::string("log-kernel-identity:") + h, identity_rank_one_residual(named_function(h)), 1e-6});
  const auto s = build_spectrum(t, c);
  out.push_back({"kernel-reconstruction", s.reconstruction_error(), 1e-10});
  out.push_back({"contraction-norm-plus", contraction_matrices(s).norm_plus, 1.0 - 1e-3});
  const auto configs = random_configurations(c.hamiltonian_n, c.hamiltonian_configs, c.seed);
  out.push_back({"hamiltonian-identity", hamiltonian_identity_residual(e, s, c.beta, configs).residual, 1e-6});
  Observable second_moment = [](std::span<const double> x) {
    double r = 0.0;
    for (double v : x) r += v * v;
    return r;
  };
  LinearizationOptions lo;
  lo.modes = c.linearization_modes;
  out.push_back({"linearization-n2", linearization_check(e, s, 2, c.linearization_beta, second_moment, lo).discrepancy, 1e-3});
  return out;
}

inline int cmd_verify(const Context& ctx) {
  const auto checks = verification_checks(ctx.config);
  auto doc = document("verify-report", describe(ctx.config));
  doc["checks"] = Json::array();
  bool ok = true;
  for (const auto& ch : checks) {
    doc["checks"].push_back({{"name", ch.name}, {"value", ch.value}, {"tolerance", ch.tolerance}, {"pass", ch.pass()}});
    *ctx.log << (ch.pass() ? "ok   " : "FAIL ") << ch.name << " " << ch.value << " (tol " << ch.tolerance << ")\n";
    ok = ok && ch.pass();
  }
  doc["pass"] = ok;
  write_json(ctx.file(".verify.report.json"), doc);
  if (!ok) {
    Json err{{"error", "verification-failed"}, {"message", "one or more identity checks exceeded tolerance"}, {"exit-code", 1}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}

inline void print_error(const std::string& code, const std::string& message, int exit_code) {
  Json err{{"error", code}, {"message", message}, {"exit-code", exit_code}};
  std::cerr << err.dump() << "\n";
}

inline int run(int argc, const char* const* argv, std::ostream& log = std::cout) {
  CLI::App app{"betalab: equilibrium measures, transport maps and universality checks for beta-ensembles"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  unsigned threads = 1;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "INI config file (defaults apply when omitted)");
  app.add_option("-o,--out", out_dir, "output directory (overrides $" + std::string(kOutputDirEnv) + " and [output] dir)");
  app.add_option("-t,--threads", threads, "worker threads; results do not depend on this")->check(CLI::PositiveNumber);
  app.add_option("-s,--set", overrides, "override a setting, e.g. --set ensemble.beta=1");

  std::optional<std::string> input;
  app.add_subcommand("equilibrium", "solve for the equilibrium density; writes *.equilibrium.json and *.density.csv");
  app.add_subcommand("transport", "solve the transport map; writes *.transport.json and *.transport.csv");
  app.add_subcommand("spectrum", "deformation-kernel spectrum; writes *.spectrum.csv and *.spectrum.json");
  app.add_subcommand("sample", "draw eigenvalue configurations; writes *.samples.bin");
  auto* clt = app.add_subcommand("clt", "linear-statistic moments vs predictions; writes *.clt.report.json and *.clt.csv");
  auto* bulk = app.add_subcommand("bulk", "bulk gap statistics vs a Gaussian reference; writes *.bulk.report.json");
  app.add_subcommand("verify", "identity suite; exit 1 if any check fails; writes *.verify.report.json");
  for (auto* sub : {clt, bulk}) sub->add_option("-i,--input", input, "read samples from a container instead of sampling");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("config-error", e.what(), 2);
    return 2;
  }

  Context ctx;
  ctx.log = &log;
  try {
    ctx.config = config_path.empty() ? RunConfig{} : load_config(config_path);
    for (const auto& o : overrides) apply_override(ctx.config, o);
    ctx.config.threads = threads;
    for (const auto& id : ctx.config.observables) named_function(id);
    std::string dir = ctx.config.output_dir;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) dir = env;
    if (!out_dir.empty()) dir = out_dir;
    ctx.out_dir = dir;
    ctx.prefix = ctx.config.prefix.empty() ? make_potential(ctx.config.potential).id() : ctx.config.prefix;
  } catch (const Error& e) {
    print_error(std::string(to_string(e.code())), e.what(), 2);
    return 2;
  } catch (const std::exception& e) {
    print_error("config-error", e.what(), 2);
    return 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (cmd == "equilibrium") return cmd_equilibrium(ctx);
    if (cmd == "transport") return cmd_transport(ctx);
    if (cmd == "spectrum") return cmd_spectrum(ctx);
    if (cmd == "sample") return cmd_sample(ctx);
    if (cmd == "clt") return cmd_clt(ctx, input);
    if (cmd == "bulk") return cmd_bulk(ctx, input);
    return cmd_verify(ctx);
  } catch (const Error& e) {
    const int code = e.code() == Errc::config_error ? 2 : 1;
    print_error(std::string(to_string(e.code())), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    print_error("internal", e.what(), 1);
    return 1;
  }
}

}  // namespace betalab::cli
