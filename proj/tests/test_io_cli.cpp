#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "betalab/cli.hpp"

using namespace betalab;
namespace fs = std::filesystem;

namespace {

fs::path config_dir() {
  const char* d = std::getenv("BETALAB_TEST_CONFIG_DIR");
  return d ? fs::path(d) : fs::path("configs");
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("betalab-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "betalab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream log;
  return cli::run(static_cast<int>(argv.size()), argv.data(), log);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Errc config_code(const std::string& text) {
  try {
    parse_config_string(text);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::precondition;
}

}  // namespace

TEST(Config, ParsesSectionsAndLists) {
  const auto c = parse_config_string(
      "[potential]\nkind = even-quartic\ng = 0.05\n"
      "[ensemble]\nbeta = 4\nn = 60\nsamples = 300\nseed = 9\nsampler = mcmc\n"
      "[bulk]\nlambda0 = 0, 0.5, -1\n"
      "[clt]\nobservables = x, cos\n"
      "[output]\nprefix = run\n");
  EXPECT_EQ(c.potential.kind, PotentialKind::even_quartic);
  EXPECT_DOUBLE_EQ(c.potential.g, 0.05);
  EXPECT_DOUBLE_EQ(c.beta, 4.0);
  EXPECT_EQ(c.n, 60u);
  EXPECT_EQ(c.samples, 300u);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.sampler, "mcmc");
  EXPECT_EQ(c.lambda0, (std::vector<double>{0.0, 0.5, -1.0}));
  EXPECT_EQ(c.observables, (std::vector<std::string>{"x", "cos"}));
  EXPECT_EQ(c.prefix, "run");
  // defaults survive
  EXPECT_EQ(c.kernel_grid, 256u);
}

TEST(Config, RejectsBadInput) {
  EXPECT_EQ(config_code("[ensemble]\nbeta = -1\n"), Errc::config_error);
  EXPECT_EQ(config_code("[ensemble]\nn = 0\n"), Errc::config_error);
  EXPECT_EQ(config_code("[ensemble]\ncolour = blue\n"), Errc::config_error);
  EXPECT_EQ(config_code("[nonsense]\nx = 1\n"), Errc::config_error);
  EXPECT_EQ(config_code("[ensemble]\nbeta = two\n"), Errc::config_error);
  EXPECT_EQ(config_code("[potential]\nkind = cubic\n"), Errc::config_error);
  EXPECT_EQ(config_code("[ensemble]\nsampler = gibbs\n"), Errc::config_error);
}

TEST(Config, Overrides) {
  RunConfig c;
  apply_override(c, "ensemble.beta=1");
  apply_override(c, "potential.kind=even-quartic");
  apply_override(c, "potential.g=0.2");
  EXPECT_DOUBLE_EQ(c.beta, 1.0);
  EXPECT_DOUBLE_EQ(c.potential.g, 0.2);
  EXPECT_THROW(apply_override(c, "beta=1"), Error);
  EXPECT_THROW(apply_override(c, "ensemble.beta"), Error);
  const auto d = describe(c);
  EXPECT_EQ(d.at("ensemble.beta"), "1");
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"gaussian.ini", "quartic.ini"}) EXPECT_NO_THROW(load_config(config_dir() / name)) << name;
  EXPECT_THROW(load_config(config_dir() / "missing.ini"), Error);
}

TEST(Container, RoundTrip) {
  const auto s = sample_gaussian(7, 1.5, 13, 99);
  std::stringstream buf;
  write_samples(buf, s);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 8), "BETASMPL");
  const auto r = read_samples(buf);
  EXPECT_EQ(r.n, s.n);
  EXPECT_EQ(r.count, s.count);
  EXPECT_EQ(r.beta, s.beta);
  EXPECT_EQ(r.seed, s.seed);
  EXPECT_EQ(r.potential_id, s.potential_id);
  EXPECT_EQ(r.sampler, s.sampler);
  EXPECT_EQ(r.window.lo, s.window.lo);
  EXPECT_EQ(r.values, s.values);
  // payload is little-endian float64 at the tail
  double last;
  std::memcpy(&last, bytes.data() + bytes.size() - 8, 8);
  if constexpr (std::endian::native == std::endian::little) {
    EXPECT_EQ(last, s.values.back());
  }
}

TEST(Container, RejectsCorruptInput) {
  std::stringstream bad("NOTASMPL.........");
  try {
    read_samples(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::io_error);
  }
  std::stringstream buf;
  write_samples(buf, sample_gaussian(5, 2.0, 4, 1));
  std::string bytes = buf.str();
  std::stringstream cut(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(read_samples(cut), Error);
  EXPECT_THROW(read_samples(fs::path("/nonexistent/x.samples.bin")), Error);
}

TEST(Csv, FormatAndValidation) {
  CsvTable t({"a", "b"});
  t.add({1.0, 0.1});
  EXPECT_EQ(t.str(), "a,b\n1,0.10000000000000001\n");
  EXPECT_THROW(t.add({1.0}), Error);
  const auto h = gap_histogram({0.5, 1.0, 1.2, 3.9});
  EXPECT_EQ(h.rows(), 40u);
}

TEST(Json, DocumentsCarrySchemaVersion) {
  const auto d = document("equilibrium", {{"ensemble.beta", "2"}});
  EXPECT_EQ(d.at("schema-version"), kSchemaVersion);
  EXPECT_EQ(d.at("kind"), "equilibrium");
  const auto e = compute_P(make_potential({}));
  const auto j = to_json(e);
  EXPECT_NEAR(j.at("robin-constant").get<double>(), -1.0, 1e-10);
}

TEST(Cli, EquilibriumTransportSpectrum) {
  const auto out = scratch("pipeline");
  const auto cfg = (config_dir() / "quartic.ini").string();
  for (const char* cmd : {"equilibrium", "transport", "spectrum"})
    EXPECT_EQ(run_cli({"-c", cfg, "-o", out.string(), "--set", "output.prefix=q", cmd}), 0) << cmd;
  for (const char* f : {"q.equilibrium.json", "q.density.csv", "q.transport.json", "q.transport.csv", "q.spectrum.json", "q.spectrum.csv"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  const auto j = nlohmann::json::parse(slurp(out / "q.transport.json"));
  EXPECT_LT(j.at("transport").at("residual").get<double>(), 1e-7);
  EXPECT_EQ(slurp(out / "q.density.csv").substr(0, 30), "x,rho,P,effective_potential\n-2");
}

TEST(Cli, VerifyPassesOnShippedConfigs) {
  const auto out = scratch("verify");
  for (const char* name : {"gaussian.ini", "quartic.ini"}) {
    EXPECT_EQ(run_cli({"-c", (config_dir() / name).string(), "-o", out.string(), "verify"}), 0) << name;
  }
  const auto j = nlohmann::json::parse(slurp(out / "gaussian.verify.report.json"));
  EXPECT_TRUE(j.at("pass").get<bool>());
}

TEST(Cli, SampleThenCltFromContainer) {
  const auto out = scratch("sample");
  const std::vector<std::string> common{"-c", (config_dir() / "gaussian.ini").string(), "-o", out.string(), "--set", "ensemble.n=40",
                                        "--set", "ensemble.samples=300", "--set", "output.prefix=g"};
  auto with = [&](std::vector<std::string> tail) {
    auto a = common;
    a.insert(a.end(), tail.begin(), tail.end());
    return a;
  };
  ASSERT_EQ(run_cli(with({"sample"})), 0);
  const auto s = read_samples(out / "g.samples.bin");
  EXPECT_EQ(s.n, 40u);
  EXPECT_EQ(s.count, 300u);
  ASSERT_EQ(run_cli(with({"clt", "-i", (out / "g.samples.bin").string()})), 0);
  const auto j = nlohmann::json::parse(slurp(out / "g.clt.report.json"));
  EXPECT_EQ(j.at("reports").size(), 4u);
  ASSERT_EQ(run_cli(with({"bulk"})), 0);
  EXPECT_TRUE(fs::exists(out / "g.bulk.report.json"));
}

TEST(Cli, ConfigErrorsExitTwo) {
  const auto out = scratch("errors");
  EXPECT_EQ(run_cli({"-o", out.string(), "--set", "ensemble.beta=-1", "equilibrium"}), 2);
  EXPECT_EQ(run_cli({"-o", out.string(), "--set", "nonsense.key=1", "equilibrium"}), 2);
  EXPECT_EQ(run_cli({"-o", out.string(), "frobnicate"}), 2);
  EXPECT_EQ(run_cli({"-c", "/nonexistent.ini", "equilibrium"}), 2);
  EXPECT_EQ(run_cli({"-o", out.string(), "--set", "clt.observables=tan", "clt"}), 2);
  // tridiagonal sampler requested for a non-Gaussian potential
  EXPECT_EQ(run_cli({"-o", out.string(), "--set", "potential.kind=even-quartic", "--set", "potential.g=0.1", "--set", "ensemble.sampler=gaussian-tridiag", "sample"}), 2);
}

TEST(Cli, NumericalFailureExitsOne) {
  const auto out = scratch("numerical");
  // P(z) = z^2 vanishes inside the support
  EXPECT_EQ(run_cli({"-o", out.string(), "--set", "potential.kind=polynomial", "--set", "potential.coefficients=8,0,-1,0,0.25", "equilibrium"}), 1);
  EXPECT_EQ(run_cli({"-o", out.string(), "--set", "ensemble.proposal_width=0", "sample"}), 2);
}

TEST(Cli, RerunsAreByteIdentical) {
  const auto a = scratch("idem-a"), b = scratch("idem-b");
  const auto cfg = (config_dir() / "gaussian.ini").string();
  for (const auto& dir : {a, b}) {
    for (const char* cmd : {"equilibrium", "spectrum", "sample", "clt"})
      ASSERT_EQ(run_cli({"-c", cfg, "-o", dir.string(), "--set", "ensemble.n=30", "--set", "ensemble.samples=200", "--set", "output.prefix=r", cmd}), 0);
  }
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  }
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  const auto out = scratch("env");
  ::setenv(cli::kOutputDirEnv, out.string().c_str(), 1);
  const int code = run_cli({"--set", "output.prefix=e", "equilibrium"});
  ::unsetenv(cli::kOutputDirEnv);
  EXPECT_EQ(code, 0);
  EXPECT_TRUE(fs::exists(out / "e.equilibrium.json"));
}
