#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "msexit/flow.hpp"
#include "msexit/functions.hpp"
#include "msexit/homogenize.hpp"
#include "msexit/rough.hpp"
#include "msexit/sde.hpp"

namespace msexit {

enum class ExperimentKind { fluctuation, exit_law, conditional_exit, homogenize_only };

const char* kind_name(ExperimentKind kind);

// dt per epsilon: either a fixed value, or resolution_factor * delta^2/eps
// (the coarsest step the ripple policy allows).  Conditioned runs with a flat
// Q have no ripple to resolve; auto falls back to T/2000 there.
struct DtPolicy {
  bool auto_scaled = true;
  double value = 0.0;
  double resolution_factor = 0.1;
};

// Arguments of the regime classification that do not depend on epsilon.
struct RegimeRecipe {
  double delta_exponent = 0.0;
  double gamma = std::numeric_limits<double>::infinity();
  double a1 = std::numeric_limits<double>::infinity();
  double a2 = std::numeric_limits<double>::infinity();
};

struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  int n = 0;

  std::vector<double> nodes() const;
  void validate() const;
};

// delta for the conditioned rough-potential runs: explicit, or
// min(eps^epsilon_power, cap).
struct DeltaPolicy {
  bool explicit_value = false;
  double value = 0.0;
  double epsilon_power = 0.0;
  double cap = std::numeric_limits<double>::infinity();

  double resolve(double epsilon) const;
};

// Pass/fail bounds on the statistical comparisons.  A bound of zero is kept
// (and fails on any Monte Carlo noise); mean_abs <= 0 disables the absolute
// mean check.
struct CheckTolerances {
  double variance_rel = 0.10;
  double mean_sigmas = 3.0;
  double ks_factor = 1.0;
  double mean_abs = 0.0;
  double min_rare_fraction = 0.99;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::homogenize_only;
  std::string label;
  std::string config_hash;  // set by the loader; empty for programmatic use
  std::uint64_t master_seed = 0;
  long long n_paths = 0;
  std::vector<double> epsilons;  // strictly decreasing
  DtPolicy dt;
  RegimeRecipe regime;

  // multiscale problems (fluctuation / exit_law / homogenize_only)
  PeriodicCoefficientSet coeffs;
  double x0 = 0.0;
  double horizon = 0.0;
  double time = 0.0;  // fluctuation observation time; 0 picks the horizon
  InitialLaw xi0;
  GridSpec x_grid;
  int fast_grid_n = 256;
  ExitProblemSpec interval;

  // conditioned rough-potential problem
  RoughPotentialSpec rough;
  DeltaPolicy rough_delta;

  CheckTolerances checks;
  Tolerances tol;
  bool want_samples_csv = true;

  void validate() const;
};

struct CheckLine {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct EpsilonBlock {
  double epsilon = 0.0, delta = 0.0, theta = 0.0, beta = 0.0, dt = 0.0;
  long long n_paths = 0;
  long long n_upper = 0, n_lower = 0, n_no_exit = 0, n_wrong_endpoint = 0;
  double T = 0.0, z = 0.0;
  double predicted_mean = 0.0, predicted_variance = 0.0;
  double sample_mean = 0.0, sample_variance = 0.0, mean_se = 0.0, variance_se = 0.0;
  double ks = 0.0, ks_band = 0.0;
  // homogenization residuals (homogenize_only blocks)
  double cell_residual = 0.0, aux_residual = 0.0, mu_normalization = 0.0, mu_min = 0.0;
  std::string rare_endpoint;  // conditional blocks name the endpoint used
  std::vector<CheckLine> checks;
  std::vector<double> samples;
};

struct EnsembleReport {
  ExperimentKind kind = ExperimentKind::homogenize_only;
  std::string label;
  std::string config_hash;
  std::uint64_t master_seed = 0;
  Tolerances tol;
  std::vector<EpsilonBlock> blocks;
  std::vector<HomogenizedModel> models;  // homogenize_only keeps the artifacts
  bool all_pass = true;
  double wall_time_s = 0.0;
};

// Runs the configured experiment over the epsilon sweep.  Deterministic given
// (config, master_seed); path generation is chunked over indices, so the
// report does not depend on the worker count.  Module errors propagate with
// the offending epsilon attached.
EnsembleReport run_ensemble(const ExperimentConfig& config);

// Scale-function/speed-measure convergence sweep (no Monte Carlo): tabulates
// u and v for each delta and compares against the homogenized limit pair.
struct ScaleSpeedConfig {
  std::string label;
  std::string config_hash;
  Poly1D V;
  TrigPoly1D Q;
  double D = 1.0;
  double period = 1.0;
  double epsilon = 0.0;
  std::vector<double> deltas;  // strictly decreasing
  GridSpec grid;

  void validate() const;
};

struct ScaleSpeedBlock {
  double delta = 0.0;
  double sup_u = 0.0;  // sup |u_delta - u_limit| over the grid
  double sup_v = 0.0;
};

struct ScaleSpeedReport {
  std::string label;
  std::string config_hash;
  double epsilon = 0.0;
  std::vector<ScaleSpeedBlock> blocks;
  std::vector<CheckLine> checks;  // monotone decrease of both sup columns
  bool all_pass = true;
  double wall_time_s = 0.0;
};

ScaleSpeedReport run_scale_speed(const ScaleSpeedConfig& config);

}  // namespace msexit
