#pragma once

// Run configuration: an INI file with one section per module. Unknown sections
// and keys are rejected so typos cannot silently fall back to defaults.

#include <cstdint>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "betalab/error.hpp"
#include "betalab/potentials.hpp"

namespace betalab {

struct RunConfig {
  // [potential]
  PotentialSpec potential;

  // [ensemble]
  double beta = 2.0;
  std::size_t n = 200;
  std::size_t samples = 1000;
  std::uint64_t seed = 1;
  std::string sampler = "auto";  ///< auto | gaussian-tridiag | mcmc
  std::size_t chains = 8;
  std::optional<double> proposal_width;
  std::size_t burn_in = 0;
  std::size_t sweeps_per_sample = 0;

  // [equilibrium]
  std::size_t contour_nodes = 512;
  std::size_t cheb_nodes = 64;

  // [transport]
  double delta_e = 0.1;
  std::size_t series_order = 32;
  std::size_t interior_nodes = 96;

  // [spectrum]
  std::size_t kernel_grid = 256;
  double tail_tolerance = 1e-12;

  // [clt]
  std::vector<std::string> observables{"x", "x^2", "x^3", "cos"};

  // [bulk]
  std::vector<double> lambda0{0.0};
  double window = 0.0;  ///< 0 selects 40 / (n rho(lambda0))
  double central_fraction = 0.6;
  std::size_t reference_samples = 0;  ///< Gaussian reference size, 0 = same as samples

  // [verify]
  std::size_t hamiltonian_n = 8;
  std::size_t hamiltonian_configs = 50;
  std::size_t linearization_modes = 3;
  double linearization_beta = 4.0;

  // [output]
  std::string output_dir = ".";
  std::string prefix;  ///< empty selects the potential id

  unsigned threads = 1;
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"potential", {"kind", "g", "coefficients", "epsilon"}},
      {"ensemble", {"beta", "n", "samples", "seed", "sampler", "chains", "proposal_width", "burn_in", "sweeps_per_sample"}},
      {"equilibrium", {"contour_nodes", "cheb_nodes"}},
      {"transport", {"delta_e", "series_order", "interior_nodes"}},
      {"spectrum", {"grid", "tail_tolerance"}},
      {"clt", {"observables"}},
      {"bulk", {"lambda0", "window", "central_fraction", "reference_samples"}},
      {"verify", {"hamiltonian_n", "hamiltonian_configs", "linearization_modes", "linearization_beta"}},
      {"output", {"dir", "prefix"}},
  };
  return schema;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& key, const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    fail(Errc::config_error, key + ": expected a number, got '" + s + "'");
  }
  if (pos != s.size() || !std::isfinite(v)) fail(Errc::config_error, key + ": expected a number, got '" + s + "'");
  return v;
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    fail(Errc::config_error, key + ": expected a non-negative integer, got '" + s + "'");
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    fail(Errc::config_error, key + ": integer out of range");
  }
}

inline void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) fail(Errc::config_error, key + ": " + what);
}

}  // namespace detail

/// Applies one `section.key = value` setting.
inline void apply_setting(RunConfig& c, const std::string& section, const std::string& key, const std::string& value) {
  using namespace detail;
  const auto& schema = config_schema();
  const auto sec = schema.find(section);
  if (sec == schema.end()) fail(Errc::config_error, "unknown section [" + section + "]");
  if (!sec->second.count(key)) fail(Errc::config_error, "unknown key '" + key + "' in [" + section + "]");
  const std::string name = section + "." + key;
  auto num = [&] { return parse_double(name, value); };
  auto count = [&] { return static_cast<std::size_t>(parse_unsigned(name, value)); };

  if (section == "potential") {
    if (key == "kind") {
      if (value == "gaussian") c.potential.kind = PotentialKind::gaussian;
      else if (value == "even-quartic") c.potential.kind = PotentialKind::even_quartic;
      else if (value == "polynomial") c.potential.kind = PotentialKind::polynomial;
      else fail(Errc::config_error, name + ": unknown kind '" + value + "'");
    } else if (key == "g") {
      c.potential.g = num();
      require(c.potential.g >= 0.0, name, "must be >= 0");
    } else if (key == "coefficients") {
      c.potential.coefficients.clear();
      for (const auto& t : split_list(value)) c.potential.coefficients.push_back(parse_double(name, t));
      require(!c.potential.coefficients.empty(), name, "empty list");
    } else if (key == "epsilon") {
      c.potential.epsilon = num();
      require(c.potential.epsilon > 0.0 && c.potential.epsilon < 1.0, name, "must lie in (0, 1)");
    }
  } else if (section == "ensemble") {
    if (key == "beta") {
      c.beta = num();
      require(c.beta > 0.0, name, "must be positive");
    } else if (key == "n") {
      c.n = count();
      require(c.n >= 1, name, "must be positive");
    } else if (key == "samples") {
      c.samples = count();
      require(c.samples >= 1, name, "must be positive");
    } else if (key == "seed") {
      c.seed = parse_unsigned(name, value);
    } else if (key == "sampler") {
      require(value == "auto" || value == "gaussian-tridiag" || value == "mcmc", name, "expected auto, gaussian-tridiag or mcmc");
      c.sampler = value;
    } else if (key == "chains") {
      c.chains = count();
      require(c.chains >= 1, name, "must be positive");
    } else if (key == "proposal_width") {
      c.proposal_width = num();
      require(*c.proposal_width > 0.0, name, "must be positive");
    } else if (key == "burn_in") {
      c.burn_in = count();
    } else if (key == "sweeps_per_sample") {
      c.sweeps_per_sample = count();
    }
  } else if (section == "equilibrium") {
    if (key == "contour_nodes") c.contour_nodes = count();
    else if (key == "cheb_nodes") c.cheb_nodes = count();
    require(c.contour_nodes >= 16 && c.cheb_nodes >= 8, name, "too small");
  } else if (section == "transport") {
    if (key == "delta_e") {
      c.delta_e = num();
      require(c.delta_e > 0.0 && c.delta_e < 1.0, name, "must lie in (0, 1)");
    } else if (key == "series_order") {
      c.series_order = count();
      require(c.series_order >= 4 && c.series_order <= 64, name, "must lie in [4, 64]");
    } else if (key == "interior_nodes") {
      c.interior_nodes = count();
      require(c.interior_nodes >= 8, name, "too small");
    }
  } else if (section == "spectrum") {
    if (key == "grid") {
      c.kernel_grid = count();
      require(c.kernel_grid >= 16, name, "too small");
    } else if (key == "tail_tolerance") {
      c.tail_tolerance = num();
      require(c.tail_tolerance > 0.0, name, "must be positive");
    }
  } else if (section == "clt") {
    c.observables = split_list(value);
    require(!c.observables.empty(), name, "empty list");
  } else if (section == "bulk") {
    if (key == "lambda0") {
      c.lambda0.clear();
      for (const auto& t : split_list(value)) c.lambda0.push_back(parse_double(name, t));
      require(!c.lambda0.empty(), name, "empty list");
    } else if (key == "window") {
      c.window = num();
      require(c.window >= 0.0, name, "must be >= 0");
    } else if (key == "central_fraction") {
      c.central_fraction = num();
      require(c.central_fraction > 0.0 && c.central_fraction <= 1.0, name, "must lie in (0, 1]");
    } else if (key == "reference_samples") {
      c.reference_samples = count();
    }
  } else if (section == "verify") {
    if (key == "hamiltonian_n") {
      c.hamiltonian_n = count();
      require(c.hamiltonian_n >= 2 && c.hamiltonian_n <= 16, name, "must lie in [2, 16]");
    } else if (key == "hamiltonian_configs") {
      c.hamiltonian_configs = count();
      require(c.hamiltonian_configs >= 2, name, "need at least 2");
    } else if (key == "linearization_modes") {
      c.linearization_modes = count();
      require(c.linearization_modes >= 1 && c.linearization_modes <= 3, name, "must lie in [1, 3]");
    } else if (key == "linearization_beta") {
      c.linearization_beta = num();
      require(c.linearization_beta > 0.0, name, "must be positive");
    }
  } else if (section == "output") {
    if (key == "dir") c.output_dir = value;
    else if (key == "prefix") c.prefix = value;
  }
}

/// Applies a `section.key=value` override as given on the command line.
inline void apply_override(RunConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    fail(Errc::config_error, "override '" + assignment + "' is not of the form section.key=value");
  apply_setting(c, assignment.substr(0, dot), assignment.substr(dot + 1, eq - dot - 1), assignment.substr(eq + 1));
}

inline RunConfig parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    fail(Errc::config_error, e.what());
  }
  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) fail(Errc::config_error, "key '" + section + "' outside any section");
    for (const auto& [key, value] : body) apply_setting(c, section, key, value.data());
  }
  return c;
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::config_error, "cannot open config " + path.string());
  return parse_config(in);
}

/// Flattened view of every setting, written into artifact headers.
inline std::map<std::string, std::string> describe(const RunConfig& c) {
  std::map<std::string, std::string> m;
  auto num = [](double v) { return detail::format_number(v); };
  auto join = [](const auto& v, auto f) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + f(x);
    return s;
  };
  m["potential.kind"] = to_string(c.potential.kind);
  m["potential.g"] = num(c.potential.g);
  m["potential.coefficients"] = join(c.potential.coefficients, num);
  m["potential.epsilon"] = num(c.potential.epsilon);
  m["ensemble.beta"] = num(c.beta);
  m["ensemble.n"] = std::to_string(c.n);
  m["ensemble.samples"] = std::to_string(c.samples);
  m["ensemble.seed"] = std::to_string(c.seed);
  m["ensemble.sampler"] = c.sampler;
  m["ensemble.chains"] = std::to_string(c.chains);
  m["ensemble.proposal_width"] = c.proposal_width ? num(*c.proposal_width) : "auto";
  m["ensemble.burn_in"] = std::to_string(c.burn_in);
  m["ensemble.sweeps_per_sample"] = std::to_string(c.sweeps_per_sample);
  m["equilibrium.contour_nodes"] = std::to_string(c.contour_nodes);
  m["equilibrium.cheb_nodes"] = std::to_string(c.cheb_nodes);
  m["transport.delta_e"] = num(c.delta_e);
  m["transport.series_order"] = std::to_string(c.series_order);
  m["transport.interior_nodes"] = std::to_string(c.interior_nodes);
  m["spectrum.grid"] = std::to_string(c.kernel_grid);
  m["spectrum.tail_tolerance"] = num(c.tail_tolerance);
  m["clt.observables"] = join(c.observables, [](const std::string& s) { return s; });
  m["bulk.lambda0"] = join(c.lambda0, num);
  m["bulk.window"] = num(c.window);
  m["bulk.central_fraction"] = num(c.central_fraction);
  m["bulk.reference_samples"] = std::to_string(c.reference_samples);
  m["verify.hamiltonian_n"] = std::to_string(c.hamiltonian_n);
  m["verify.hamiltonian_configs"] = std::to_string(c.hamiltonian_configs);
  m["verify.linearization_modes"] = std::to_string(c.linearization_modes);
  m["verify.linearization_beta"] = num(c.linearization_beta);
  return m;
}

}  // namespace betalab
