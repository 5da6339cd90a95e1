#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace betalab {

/// Failure categories reported by the numerical pipeline. Each maps to a
/// stable machine-readable name (see `to_string`).
enum class Errc {
  invalid_spec,
  confinement_violation,
  no_convergence,
  multi_cut_suspected,
  degenerate_interval,
  not_generic,
  variational_failure,
  ode_failure,
  series_divergence,
  zero_leading_p,
  out_of_domain,
  edge_evaluation,
  coincident_nodes,
  poor_mixing,
  all_rejected,
  dimension_too_large,
  insufficient_samples,
  empty_window,
  precondition,
  mismatched_parameters,
  config_error,
  io_error,
};

constexpr std::string_view to_string(Errc e) {
  switch (e) {
    case Errc::invalid_spec: return "invalid-spec";
    case Errc::confinement_violation: return "confinement-violation";
    case Errc::no_convergence: return "no-convergence";
    case Errc::multi_cut_suspected: return "multi-cut-suspected";
    case Errc::degenerate_interval: return "degenerate-interval";
    case Errc::not_generic: return "not-generic";
    case Errc::variational_failure: return "variational-failure";
    case Errc::ode_failure: return "ode-failure";
    case Errc::series_divergence: return "series-divergence";
    case Errc::zero_leading_p: return "zero-leading-P";
    case Errc::out_of_domain: return "out-of-domain";
    case Errc::edge_evaluation: return "edge-evaluation";
    case Errc::coincident_nodes: return "coincident-nodes";
    case Errc::poor_mixing: return "poor-mixing";
    case Errc::all_rejected: return "all-rejected";
    case Errc::dimension_too_large: return "dimension-too-large";
    case Errc::insufficient_samples: return "insufficient-samples";
    case Errc::empty_window: return "empty-window";
    case Errc::precondition: return "precondition";
    case Errc::mismatched_parameters: return "mismatched-parameters";
    case Errc::config_error: return "config-error";
    case Errc::io_error: return "io-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace betalab
