#pragma once

#include <string>

#include "msexit/harness.hpp"

namespace msexit {

// Experiment configs are single JSON documents with a "kind" discriminator.
// Physical functions are named built-ins: polynomials in the slow variable,
// trigonometric polynomials in the fast one, and separable products of the
// two.  There is no runtime expression parsing.
//
// Top level:
//   kind            "fluctuation" | "exit" | "conditional_exit" |
//                   "homogenize_only"
//   label           optional string
//   master_seed     unsigned integer
//   n_paths         >= 100 for the statistical kinds
//   epsilons        strictly decreasing array
//   dt              {"value": x} or {"auto": true, "resolution_factor": rf}
//   regime          {"delta_exponent": p, "gamma"?: g, "a1"?: .., "a2"?: ..}
//                   (gamma absent or null means regime 1)
//   coefficients    {"period": rho, "b": field, "c": field, "sigma": field,
//                    "psi"?: field, "psi_limit"?: field}
//                   or {"preset": "langevin", "V": [poly], "Q": trig, "D": d,
//                       "period"?: rho}
//   x0, horizon, time?, initial_law?, x_grid {lo,hi,n}, fast_grid_n
//   interval        {"lower": a, "upper": b, "rare"?: "upper"|"lower"}
//   rough           {"V": [poly], "Q": trig, "D": d, "period"?: rho,
//                    "interval": {...}, "x0": x,
//                    "delta": {"value": v} | {"epsilon_power": p, "cap"?: c}}
//   checks          {"variance_rel", "mean_sigmas", "ks_factor", "mean_abs",
//                    "min_rare_fraction"} (all optional)
//   output          {"samples_csv": bool}
//
// A coefficient field is a number (constant), or an array of separable terms
// {"x"?: [c0, c1, ...], "y"?: {"a0"?: a, "cos"?: [...], "sin"?: [...]}}.
ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source);
ExperimentConfig load_experiment_config(const std::string& path);

// kind "scale_speed": {V, Q, D, period?, epsilon, deltas (strictly
// decreasing), grid {lo,hi,n}}.
ScaleSpeedConfig parse_scale_speed_config(const std::string& text, const std::string& source);
ScaleSpeedConfig load_scale_speed_config(const std::string& path);

// FNV-1a over the canonical (re-serialized) document; ties every reported
// number back to the exact configuration.
std::string config_hash_hex(const std::string& canonical_text);

}  // namespace msexit
