#pragma once

// Artifact serialization: JSON documents, CSV tables and the binary sample container.
//
// Sample container layout (all integers little-endian):
//   bytes 0..7    magic "BETASMPL"
//   bytes 8..11   uint32 container version (1)
//   bytes 12..19  uint64 header length L
//   next L bytes  UTF-8 JSON header
//   payload       count * n float64 values, little-endian, row-major, each row ascending

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "betalab/ensembles.hpp"
#include "betalab/equilibrium.hpp"
#include "betalab/error.hpp"
#include "betalab/operators.hpp"
#include "betalab/transport.hpp"
#include "betalab/universality.hpp"

namespace betalab {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr char kSampleMagic[8] = {'B', 'E', 'T', 'A', 'S', 'M', 'P', 'L'};
inline constexpr std::uint32_t kSampleContainerVersion = 1;

namespace detail {

inline Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json interval_json(Interval iv) { return Json::array({iv.lo, iv.hi}); }

inline Json series_json(const ChebSeries& s) {
  return {{"domain", interval_json(s.domain())}, {"coefficients", s.coeffs()}};
}

inline Json edge_json(const EdgeSeries& e) {
  return {{"edge", to_string(e.edge)}, {"leading", e.leading}, {"coefficients", e.coeffs}, {"radius", finite_or_null(e.radius)}};
}

template <class T>
void put_le(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) fail(Errc::io_error, "truncated sample container");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace detail

inline Json document(const std::string& kind, const std::map<std::string, std::string>& settings = {}) {
  Json j;
  j["schema-version"] = kSchemaVersion;
  j["kind"] = kind;
  if (!settings.empty()) j["settings"] = settings;
  return j;
}

inline Json potential_json(const Potential& v) {
  return {{"id", v.id()},
          {"kind", to_string(v.kind())},
          {"coefficients", v.coefficients()},
          {"epsilon", v.epsilon()},
          {"window", detail::interval_json(v.domain())},
          {"confinement-margin", v.confinement_margin()}};
}

inline Json to_json(const EquilibriumData& e) {
  Json j;
  j["potential"] = potential_json(e.potential());
  j["support"] = detail::interval_json(kSupport);
  j["P"] = detail::series_json(e.p_series());
  j["robin-constant"] = e.robin_constant();
  j["margins"] = {{"genericity", e.genericity_margin()},
                  {"variational-residual", e.v_residual()},
                  {"outside-excess", e.outside_excess()},
                  {"mass", e.mass()}};
  j["contour-semi-major-axis"] = e.contour_radius();
  return j;
}

inline Json to_json(const TransportMap& t, double residual) {
  Json j;
  j["potential-id"] = t.equilibrium().potential().id();
  j["domain"] = detail::interval_json(t.domain());
  j["delta-e"] = t.delta_e();
  j["zeta-at-zero"] = t.zeta_at_zero();
  j["interior"] = detail::series_json(t.interior());
  j["edges"] = Json::array({detail::edge_json(t.left()), detail::edge_json(t.right())});
  j["residual"] = residual;
  j["overlap-discrepancy"] = overlap_discrepancy(t);
  return j;
}

inline Json to_json(const KernelSpectrum& s, const ContractionMatrices* k = nullptr) {
  Json j;
  j["map-id"] = s.kernel().map.id;
  j["grid"] = s.grid().nodes.size();
  j["truncation"] = s.truncation();
  j["etas"] = s.etas();
  j["decay-rate"] = s.decay_rate() ? Json(*s.decay_rate()) : Json(nullptr);
  j["tail-mass"] = s.tail_mass();
  j["reconstruction-error"] = s.reconstruction_error();
  j["orthonormality-error"] = s.orthonormality_error();
  if (k) {
    j["contraction"] = {{"norm-plus", k->norm_plus},
                        {"norm-minus", k->norm_minus},
                        {"modes-plus", k->plus_modes.size()},
                        {"modes-minus", k->minus_modes.size()},
                        {"asymmetry", k->asymmetry}};
  }
  return j;
}

inline Json to_json(const SamplerDiagnostics& d) {
  Json chains = Json::array();
  for (const auto& c : d.chains) {
    chains.push_back({{"acceptance-rate", c.acceptance_rate},
                      {"tau-int", c.tau_int},
                      {"burn-in", c.burn_in},
                      {"sweeps-per-sample", c.sweeps_per_sample},
                      {"proposal-width", c.proposal_width},
                      {"samples", c.samples}});
  }
  return {{"acceptance-rate", d.acceptance_rate},
          {"tau-int", d.tau_int},
          {"burn-in", d.burn_in},
          {"sweeps-per-sample", d.sweeps_per_sample},
          {"rejected-draws", d.rejected_draws},
          {"flagged", d.flagged},
          {"chains", chains}};
}

inline Json sample_header(const EnsembleSample& s) {
  return {{"schema-version", kSchemaVersion},
          {"kind", "samples"},
          {"n", s.n},
          {"count", s.count},
          {"beta", s.beta},
          {"potential-id", s.potential_id},
          {"sampler", to_string(s.sampler)},
          {"seed", s.seed},
          {"window", detail::interval_json(s.window)},
          {"diagnostics", to_json(s.diagnostics)}};
}

inline Json to_json(const CltReport& r) {
  return {{"h-id", r.h_id},
          {"beta", r.beta},
          {"n", r.n},
          {"samples", r.samples},
          {"empirical-mean", r.empirical_mean},
          {"mean-se", r.mean_se},
          {"empirical-variance", r.empirical_variance},
          {"variance-se", r.variance_se},
          {"predicted-mean", r.predicted_mean},
          {"predicted-variance", r.predicted_variance},
          {"z-mean", r.z_mean},
          {"z-variance", r.z_variance},
          {"normality-p", r.normality_p}};
}

inline Json to_json(const UniversalityDistance& d, double lambda0) {
  Json phis = Json::array();
  for (std::size_t i = 0; i < d.phi_v.size(); ++i) {
    phis.push_back({{"id", d.phi_v[i].id},
                    {"k", d.phi_v[i].k},
                    {"value", d.phi_v[i].value},
                    {"se", d.phi_v[i].se},
                    {"reference", d.phi_ref[i].value},
                    {"reference-se", d.phi_ref[i].se},
                    {"difference", d.phi_difference[i]},
                    {"difference-se", d.phi_difference_se[i]}});
  }
  return {{"lambda0", lambda0},
          {"ks-distance", d.ks},
          {"noise-floor", d.noise_floor},
          {"gaps", d.gaps_v},
          {"reference-gaps", d.gaps_ref},
          {"mean-gap", d.mean_gap_v},
          {"reference-mean-gap", d.mean_gap_ref},
          {"phi", phis}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot write " + path.string());
  out << text;
  if (!out) fail(Errc::io_error, "write failed for " + path.string());
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

/// Minimal CSV writer: header row plus numeric rows printed with round-trip precision.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(const std::vector<double>& row) {
    if (row.size() != columns_.size()) fail(Errc::precondition, "CSV row width mismatch");
    rows_.push_back(row);
  }

  std::string str() const {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << "\n";
    }
    return os.str();
  }

  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

inline CsvTable density_table(const EquilibriumData& e, std::size_t points = 401) {
  CsvTable t({"x", "rho", "P", "effective_potential"});
  for (std::size_t i = 0; i < points; ++i) {
    const double x = -2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(points - 1);
    t.add({x, e.rho(x), e.P(x), e.effective_potential(x)});
  }
  return t;
}

inline CsvTable transport_table(const TransportMap& t, std::size_t points = 401) {
  CsvTable c({"x", "zeta", "zeta_prime", "residual"});
  const Interval d = t.domain();
  for (std::size_t i = 0; i < points; ++i) {
    const double x = d.lo + d.length() * static_cast<double>(i) / static_cast<double>(points - 1);
    const bool inside = std::abs(x) < 2.0;
    c.add({x, t.zeta(x), t.zeta_prime(x), inside ? transport_residual_at(t, x) : 0.0});
  }
  return c;
}

inline CsvTable spectrum_table(const KernelSpectrum& s) {
  CsvTable c({"k", "eta", "abs_eta"});
  for (std::size_t k = 0; k < s.etas().size(); ++k) c.add({static_cast<double>(k), s.etas()[k], std::abs(s.etas()[k])});
  return c;
}

inline CsvTable clt_table(const std::vector<CltReport>& rs) {
  CsvTable c({"h_index", "beta", "n", "samples", "empirical_mean", "mean_se", "predicted_mean", "z_mean",
              "empirical_variance", "variance_se", "predicted_variance", "z_variance", "normality_p"});
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const auto& r = rs[i];
    c.add({static_cast<double>(i), r.beta, static_cast<double>(r.n), static_cast<double>(r.samples), r.empirical_mean, r.mean_se,
           r.predicted_mean, r.z_mean, r.empirical_variance, r.variance_se, r.predicted_variance, r.z_variance, r.normality_p});
  }
  return c;
}

/// Histogram of unfolded gaps on [0, 4] with densities normalized to integrate to 1.
inline CsvTable gap_histogram(const std::vector<double>& gaps, std::size_t bins = 40, double top = 4.0) {
  CsvTable c({"bin_lo", "bin_hi", "count", "density"});
  std::vector<double> counts(bins, 0.0);
  for (double g : gaps) {
    if (g < 0.0 || g >= top) continue;
    counts[static_cast<std::size_t>(g / top * static_cast<double>(bins))] += 1.0;
  }
  const double width = top / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const double lo = static_cast<double>(b) * width;
    c.add({lo, lo + width, counts[b], counts[b] / (static_cast<double>(gaps.size()) * width)});
  }
  return c;
}

inline void write_samples(std::ostream& out, const EnsembleSample& s) {
  if (s.values.size() != s.count * s.n) fail(Errc::precondition, "sample payload size does not match count * n");
  const std::string header = sample_header(s).dump();
  out.write(kSampleMagic, sizeof(kSampleMagic));
  detail::put_le<std::uint32_t>(out, kSampleContainerVersion);
  detail::put_le<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (double v : s.values) detail::put_le<double>(out, v);
  if (!out) fail(Errc::io_error, "failed writing sample container");
}

inline void write_samples(const std::filesystem::path& path, const EnsembleSample& s) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot write " + path.string());
  write_samples(out, s);
}

inline EnsembleSample read_samples(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kSampleMagic, 8) != 0) fail(Errc::io_error, "not a sample container");
  const auto version = detail::get_le<std::uint32_t>(in);
  if (version != kSampleContainerVersion) fail(Errc::io_error, "unsupported container version " + std::to_string(version));
  const auto len = detail::get_le<std::uint64_t>(in);
  if (len > (1u << 26)) fail(Errc::io_error, "implausible header length");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) fail(Errc::io_error, "truncated header");
  Json h;
  try {
    h = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::io_error, std::string("bad container header: ") + e.what());
  }
  EnsembleSample s;
  try {
    s.n = h.at("n").get<std::size_t>();
    s.count = h.at("count").get<std::size_t>();
    s.beta = h.at("beta").get<double>();
    s.potential_id = h.at("potential-id").get<std::string>();
    const auto sampler = h.at("sampler").get<std::string>();
    s.sampler = sampler == "mcmc" ? SamplerKind::mcmc : sampler == "quadrature" ? SamplerKind::quadrature : SamplerKind::gaussian_tridiag;
    s.seed = h.at("seed").get<std::uint64_t>();
    s.window = {h.at("window").at(0).get<double>(), h.at("window").at(1).get<double>()};
    const auto& d = h.at("diagnostics");
    s.diagnostics.acceptance_rate = d.at("acceptance-rate").get<double>();
    s.diagnostics.tau_int = d.at("tau-int").get<double>();
    s.diagnostics.burn_in = d.at("burn-in").get<std::size_t>();
    s.diagnostics.sweeps_per_sample = d.at("sweeps-per-sample").get<std::size_t>();
    s.diagnostics.rejected_draws = d.at("rejected-draws").get<std::size_t>();
    s.diagnostics.flagged = d.at("flagged").get<bool>();
    for (const auto& c : d.at("chains")) {
      ChainDiagnostics cd;
      cd.acceptance_rate = c.at("acceptance-rate").get<double>();
      cd.tau_int = c.at("tau-int").get<double>();
      cd.burn_in = c.at("burn-in").get<std::size_t>();
      cd.sweeps_per_sample = c.at("sweeps-per-sample").get<std::size_t>();
      cd.proposal_width = c.at("proposal-width").get<double>();
      cd.samples = c.at("samples").get<std::size_t>();
      s.diagnostics.chains.push_back(cd);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::io_error, std::string("bad container header: ") + e.what());
  }
  s.values.resize(s.count * s.n);
  for (double& v : s.values) v = detail::get_le<double>(in);
  return s;
}

inline EnsembleSample read_samples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open " + path.string());
  return read_samples(in);
}

}  // namespace betalab
