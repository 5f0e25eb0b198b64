#include "msexit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>

#include "msexit/limits.hpp"
#include "msexit/stats.hpp"

namespace msexit {

namespace {

// 99% two-sided Kolmogorov-Smirnov quantile
constexpr double kKs99 = 1.6276;

std::string eps_tag(double eps) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "epsilon %g: ", eps);
  return buf;
}

template <typename Fn>
auto with_eps_context(double eps, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(eps_tag(eps) + e.what());
  } catch (const SolverError& e) {
    throw SolverError(eps_tag(eps) + e.what());
  } catch (const InvariantError& e) {
    throw InvariantError(eps_tag(eps) + e.what());
  } catch (const StatError& e) {
    throw StatError(eps_tag(eps) + e.what());
  }
}

// Paths are generated in fixed 256-index chunks into disjoint slots, so the
// lane buffer (and everything aggregated from it) is independent of how many
// workers ran.
void fill_lanes(const SimulationSpec& sim, const ExitProblemSpec* exit, long long n,
                std::vector<LaneOut>& lanes) {
  lanes.resize(static_cast<std::size_t>(n));
  constexpr long long kChunk = 256;
  const long long n_chunks = (n + kChunk - 1) / kChunk;
  unsigned workers = std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  workers = static_cast<unsigned>(std::min<long long>(workers, n_chunks));
  if (workers <= 1) {
    run_paths(sim, exit, static_cast<int>(n), 0, lanes.data());
    return;
  }
  std::atomic<long long> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const long long lo = next.fetch_add(kChunk);
      if (lo >= n) return;
      const long long count = std::min(kChunk, n - lo);
      try {
        run_paths(sim, exit, static_cast<int>(count), static_cast<std::uint64_t>(lo),
                  lanes.data() + lo);
      } catch (...) {
        std::lock_guard<std::mutex> g(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

bool field_vanishes(const CoefficientField& f, double lo, double hi, double period) {
  for (int i = 0; i <= 8; ++i) {
    const double x = lo + (hi - lo) * i / 8.0;
    for (int j = 0; j < 7; ++j) {
      if (f.eval(x, period * j / 7.0) != 0.0) return false;
    }
  }
  return true;
}

// A set with no fast structure (b identically zero, everything else constant
// in y) averages to itself; the cell solves would be degenerate there and are
// skipped.  This is also the only place sigma may vanish.
bool fast_free(const PeriodicCoefficientSet& coeffs, double lo, double hi) {
  return field_vanishes(coeffs.b, lo, hi, coeffs.period) && coeffs.c.y_independent() &&
         coeffs.sigma.y_independent() && coeffs.psi.y_independent() &&
         coeffs.psi_limit.y_independent();
}

HomogenizedModel direct_average_model(const PeriodicCoefficientSet& coeffs,
                                      const RegimeClassification& regime,
                                      const std::vector<double>& nodes, int fast_n,
                                      const Tolerances& tol) {
  if (coeffs.dimension != 1) throw ConfigError("coefficient set: numerical solvers require dimension 1");
  if (!(coeffs.period > 0.0)) throw ConfigError("coefficient set: period must be positive");
  HomogenizedModel m;
  m.regime = regime;
  m.fast_grid = TorusGrid{coeffs.period, fast_n};
  m.tol = tol;
  m.x_grid = nodes;
  for (double x : nodes) {
    const double g = std::isfinite(coeffs.gamma) ? coeffs.gamma : 0.0;
    const double s = coeffs.sigma.eval(x, 0.0);
    m.lambda_tab.push_back(g * coeffs.b.eval(x, 0.0) + coeffs.c.eval(x, 0.0));
    m.q_tab.push_back(s * s);
    m.J_tab.push_back(0.0);
    m.Psi_tab.push_back(coeffs.psi_limit.eval(x, 0.0));
  }
  // The invariant density degenerates to uniform; record its actual minimum
  // so the positivity check reflects the model that was built.
  m.worst.mu_min = 1.0 / coeffs.period;
  m.lambda_spline.build(m.x_grid, m.lambda_tab);
  m.q_spline.build(m.x_grid, m.q_tab);
  m.J_spline.build(m.x_grid, m.J_tab);
  m.Psi_spline.build(m.x_grid, m.Psi_tab);
  return m;
}

HomogenizedModel build_model_for(const ExperimentConfig& cfg,
                                 const RegimeClassification& regime) {
  const auto nodes = cfg.x_grid.nodes();
  PeriodicCoefficientSet coeffs = cfg.coeffs;
  coeffs.gamma = cfg.regime.gamma;
  if (fast_free(coeffs, nodes.front(), nodes.back()))
    return direct_average_model(coeffs, regime, nodes, cfg.fast_grid_n, cfg.tol);
  return build_homogenized_model(coeffs, regime, nodes, TorusGrid{coeffs.period, cfg.fast_grid_n},
                                 cfg.tol);
}

double resolve_dt(const DtPolicy& policy, const RegimeClassification& regime, double horizon) {
  if (!policy.auto_scaled) return policy.value;
  const double cap = policy.resolution_factor * regime.delta * regime.delta / regime.epsilon;
  return std::min(cap, horizon / 64.0);
}

CheckLine upper_check(const std::string& name, double value, double bound) {
  return CheckLine{name, value, bound, value <= bound};
}

CheckLine lower_check(const std::string& name, double value, double bound) {
  return CheckLine{name, value, bound, value >= bound};
}

void fill_sample_stats(EpsilonBlock& blk, const MomentAccumulator& acc) {
  blk.sample_mean = acc.mean();
  blk.sample_variance = acc.variance();
  blk.mean_se = acc.mean_se();
  blk.variance_se = acc.variance() * std::sqrt(2.0 / (static_cast<double>(acc.count) - 1.0));
}

EpsilonBlock run_homogenize_block(const ExperimentConfig& cfg, double eps,
                                  HomogenizedModel* model_out) {
  const auto regime =
      classify_regime(eps, cfg.regime.delta_exponent, cfg.regime.gamma, cfg.regime.a1,
                      cfg.regime.a2);
  auto model = build_model_for(cfg, regime);

  EpsilonBlock blk;
  blk.epsilon = eps;
  blk.delta = regime.delta;
  blk.theta = regime.theta;
  blk.beta = regime.beta;
  blk.cell_residual = model.worst.cell_residual;
  blk.aux_residual = model.worst.aux_residual;
  blk.mu_normalization = model.worst.mu_normalization;
  blk.mu_min = model.worst.mu_min;
  blk.checks.push_back(upper_check("cell_residual", model.worst.cell_residual, cfg.tol.residual));
  blk.checks.push_back(upper_check("aux_residual", model.worst.aux_residual, cfg.tol.residual));
  blk.checks.push_back(
      upper_check("mu_normalization", model.worst.mu_normalization, cfg.tol.normalization));
  blk.checks.push_back(CheckLine{"mu_positive", model.worst.mu_min, 0.0, model.worst.mu_min > 0.0});
  blk.checks.push_back(upper_check("chi_mu_mean", model.worst.chi_mu_mean, cfg.tol.residual));
  blk.checks.push_back(upper_check("xi_mu_mean", model.worst.xi_mu_mean, cfg.tol.residual));
  if (model_out) *model_out = std::move(model);
  return blk;
}

EpsilonBlock run_fluctuation_block(const ExperimentConfig& cfg, double eps) {
  const auto regime =
      classify_regime(eps, cfg.regime.delta_exponent, cfg.regime.gamma, cfg.regime.a1,
                      cfg.regime.a2);
  auto model = build_model_for(cfg, regime);
  const double T = cfg.time > 0.0 ? cfg.time : cfg.horizon;

  LimitProcessSpec lspec;
  lspec.model = &model;
  lspec.regime = regime;
  lspec.traj = effective_flow(model, cfg.x0, T, T / 512.0);
  lspec.xi0 = cfg.xi0;
  const auto fm = limit_fluctuation_moments(lspec, T);

  SimulationSpec sim;
  sim.coeffs = cfg.coeffs;
  sim.coeffs.gamma = cfg.regime.gamma;
  sim.regime = regime;
  sim.x0 = cfg.x0;
  sim.xi = cfg.xi0;
  sim.horizon = T;
  sim.dt = resolve_dt(cfg.dt, regime, T);
  sim.resolution_factor = cfg.dt.resolution_factor;
  sim.seed = cfg.master_seed;

  std::vector<LaneOut> lanes;
  fill_lanes(sim, nullptr, cfg.n_paths, lanes);

  const double xbar_T = lspec.traj.state_at(T);
  EpsilonBlock blk;
  blk.epsilon = eps;
  blk.delta = regime.delta;
  blk.theta = regime.theta;
  blk.beta = regime.beta;
  blk.dt = sim.dt;
  blk.n_paths = cfg.n_paths;
  blk.T = T;
  blk.predicted_mean = fm.mean;
  blk.predicted_variance = fm.variance;

  blk.samples.reserve(lanes.size());
  MomentAccumulator acc;
  for (const auto& lane : lanes) {
    const double eta = (lane.terminal - xbar_T) / regime.beta;
    blk.samples.push_back(eta);
    acc.add(eta);
  }
  fill_sample_stats(blk, acc);

  if (fm.variance > 0.0) {
    const double sd = std::sqrt(fm.variance);
    blk.ks = ks_statistic(blk.samples,
                          [&](double z) { return normal_cdf((z - fm.mean) / sd); });
    blk.ks_band = cfg.checks.ks_factor * kKs99 / std::sqrt(static_cast<double>(cfg.n_paths));
    blk.checks.push_back(upper_check("variance_rel", std::abs(blk.sample_variance - fm.variance),
                                     cfg.checks.variance_rel * fm.variance));
    blk.checks.push_back(upper_check("mean_within_se", std::abs(blk.sample_mean - fm.mean),
                                     cfg.checks.mean_sigmas * blk.mean_se));
    blk.checks.push_back(upper_check("ks_band", blk.ks, blk.ks_band));
  } else {
    // Degenerate limit: every lane must land on the same float.  The
    // accumulator variance is cancellation noise here, so test the spread.
    const auto [mn, mx] = std::minmax_element(blk.samples.begin(), blk.samples.end());
    blk.checks.push_back(upper_check("sample_spread", *mx - *mn, 0.0));
    if (cfg.checks.mean_abs > 0.0)
      blk.checks.push_back(upper_check("mean_abs", std::abs(blk.sample_mean - fm.mean),
                                       cfg.checks.mean_abs));
  }
  return blk;
}

EpsilonBlock run_exit_block(const ExperimentConfig& cfg, double eps) {
  const auto regime =
      classify_regime(eps, cfg.regime.delta_exponent, cfg.regime.gamma, cfg.regime.a1,
                      cfg.regime.a2);
  auto model = build_model_for(cfg, regime);

  // The tabulated flow only has to reach past the boundary crossing; the MC
  // horizon can be much longer without forcing a wider x_grid.
  const double flow_T = cfg.time > 0.0 ? cfg.time : cfg.horizon;

  LimitProcessSpec lspec;
  lspec.model = &model;
  lspec.regime = regime;
  lspec.traj = effective_flow(model, cfg.x0, flow_T, flow_T / 512.0);
  lspec.xi0 = cfg.xi0;

  const auto hp = hitting_time_deterministic(lspec.traj, cfg.interval,
                                             cfg.tol.transversality_floor);
  const auto fm = limit_fluctuation_moments(lspec, hp.time);
  const auto pred = exit_law_projection(lspec, hp.time, hp.state,
                                        EtaMoments{fm.mean, fm.variance});

  SimulationSpec sim;
  sim.coeffs = cfg.coeffs;
  sim.coeffs.gamma = cfg.regime.gamma;
  sim.regime = regime;
  sim.x0 = cfg.x0;
  sim.xi = cfg.xi0;
  sim.horizon = cfg.horizon;
  sim.dt = resolve_dt(cfg.dt, regime, cfg.horizon);
  sim.resolution_factor = cfg.dt.resolution_factor;
  sim.seed = cfg.master_seed;

  std::vector<LaneOut> lanes;
  fill_lanes(sim, &cfg.interval, cfg.n_paths, lanes);

  std::vector<ExitRecord> records;
  records.reserve(lanes.size());
  long long n_no_exit = 0;
  for (const auto& lane : lanes) {
    if (!lane.exited) {
      ++n_no_exit;
      continue;
    }
    records.push_back(ExitRecord{lane.tau, lane.exit_state, lane.at_upper != 0, lane.exit_step});
  }
  if (records.empty()) throw StatError("no path exited before the horizon");

  const auto es = summarize_exit(records, pred.T, regime.beta);
  const auto n_eff = static_cast<double>(es.moments.count);

  EpsilonBlock blk;
  blk.epsilon = eps;
  blk.delta = regime.delta;
  blk.theta = regime.theta;
  blk.beta = regime.beta;
  blk.dt = sim.dt;
  blk.n_paths = cfg.n_paths;
  blk.n_upper = static_cast<long long>(es.n_upper);
  blk.n_lower = static_cast<long long>(es.n_lower);
  blk.n_no_exit = n_no_exit;
  blk.T = pred.T;
  blk.z = pred.z;
  blk.predicted_mean = pred.mean_shift;
  blk.predicted_variance = pred.time_correction_var;
  blk.samples = es.normalized;
  fill_sample_stats(blk, es.moments);

  const double sd = std::sqrt(pred.time_correction_var);
  blk.ks = ks_statistic(es.normalized,
                        [&](double z) { return normal_cdf((z - pred.mean_shift) / sd); });
  blk.ks_band = cfg.checks.ks_factor * kKs99 / std::sqrt(n_eff);
  blk.checks.push_back(upper_check("variance_rel",
                                   std::abs(blk.sample_variance - pred.time_correction_var),
                                   cfg.checks.variance_rel * pred.time_correction_var));
  blk.checks.push_back(upper_check("mean_within_se", std::abs(blk.sample_mean - pred.mean_shift),
                                   cfg.checks.mean_sigmas * blk.mean_se));
  blk.checks.push_back(upper_check("ks_band", blk.ks, blk.ks_band));
  blk.checks.push_back(upper_check("no_exit_fraction",
                                   static_cast<double>(n_no_exit) / static_cast<double>(cfg.n_paths),
                                   0.01));
  return blk;
}

EpsilonBlock run_conditional_block(const ExperimentConfig& cfg, double eps) {
  const double delta = cfg.rough_delta.resolve(eps);
  const auto stats = conditional_exit_stats(cfg.rough);
  double dt;
  if (cfg.dt.auto_scaled) {
    dt = cfg.rough.Q.is_constant() ? stats.T / 2000.0
                                   : cfg.dt.resolution_factor * delta * delta / eps;
  } else {
    dt = cfg.dt.value;
  }
  const auto clt = conditional_exit_clt_check(cfg.rough, eps, delta, static_cast<int>(cfg.n_paths),
                                              dt, cfg.master_seed);

  EpsilonBlock blk;
  blk.epsilon = eps;
  blk.delta = delta;
  blk.beta = std::sqrt(eps);
  blk.dt = dt;
  blk.n_paths = cfg.n_paths;
  blk.n_upper = clt.n_rare;  // rare endpoint is the upper one by construction
  blk.n_lower = clt.n_wrong_endpoint;
  blk.n_no_exit = clt.n_no_exit;
  blk.n_wrong_endpoint = clt.n_wrong_endpoint;
  blk.T = clt.predicted.T;
  blk.z = clt.predicted.rare_state;
  blk.predicted_mean = 0.0;
  blk.predicted_variance = clt.predicted.limit_variance;
  blk.sample_mean = clt.empirical_mean;
  blk.sample_variance = clt.empirical_variance;
  blk.mean_se = clt.mean_se;
  blk.variance_se = clt.variance_se;
  blk.ks = clt.ks;
  blk.ks_band = cfg.checks.ks_factor * kKs99 / std::sqrt(static_cast<double>(clt.n_rare));
  blk.samples = clt.normalized;
  blk.rare_endpoint =
      cfg.rough.interval.rare_endpoint == ExitProblemSpec::Rare::lower ? "lower" : "upper";

  blk.checks.push_back(upper_check(
      "variance_rel", std::abs(clt.empirical_variance - clt.predicted.limit_variance),
      cfg.checks.variance_rel * clt.predicted.limit_variance));
  blk.checks.push_back(
      upper_check("mean_within_se", std::abs(clt.empirical_mean), cfg.checks.mean_sigmas * clt.mean_se));
  blk.checks.push_back(upper_check("ks_band", blk.ks, blk.ks_band));
  blk.checks.push_back(lower_check(
      "rare_fraction", static_cast<double>(clt.n_rare) / static_cast<double>(cfg.n_paths),
      cfg.checks.min_rare_fraction));
  return blk;
}

}  // namespace

const char* kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::fluctuation: return "fluctuation";
    case ExperimentKind::exit_law: return "exit";
    case ExperimentKind::conditional_exit: return "conditional_exit";
    case ExperimentKind::homogenize_only: return "homogenize_only";
  }
  return "unknown";
}

std::vector<double> GridSpec::nodes() const {
  validate();
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) xs[i] = lo + (hi - lo) * i / (n - 1);
  return xs;
}

void GridSpec::validate() const {
  if (n < 4) throw ConfigError("grid: need at least 4 nodes");
  if (!(lo < hi)) throw ConfigError("grid: lo must be below hi");
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw ConfigError("grid: bounds must be finite");
}

double DeltaPolicy::resolve(double epsilon) const {
  if (explicit_value) return value;
  return std::min(std::pow(epsilon, epsilon_power), cap);
}

void ExperimentConfig::validate() const {
  if (epsilons.empty()) throw ConfigError("experiment: epsilon sweep is empty");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0) || !(epsilons[i] < 1.0))
      throw ConfigError("experiment: every epsilon must lie in (0,1)");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1]))
      throw ConfigError("experiment: epsilon sweep must be strictly decreasing");
  }
  if (kind != ExperimentKind::homogenize_only && n_paths < 100)
    throw ConfigError("experiment: statistical claims need n_paths >= 100");
  if (!dt.auto_scaled && !(dt.value > 0.0))
    throw ConfigError("experiment: explicit dt must be positive");
  if (dt.auto_scaled && !(dt.resolution_factor > 0.0))
    throw ConfigError("experiment: resolution factor must be positive");
  if (checks.variance_rel < 0.0 || checks.mean_sigmas < 0.0 || checks.ks_factor < 0.0)
    throw ConfigError("experiment: check tolerances must be nonnegative");

  switch (kind) {
    case ExperimentKind::homogenize_only:
      x_grid.validate();
      break;
    case ExperimentKind::fluctuation:
      x_grid.validate();
      if (!(horizon > 0.0) && !(time > 0.0))
        throw ConfigError("experiment: fluctuation runs need a horizon or observation time");
      break;
    case ExperimentKind::exit_law:
      x_grid.validate();
      if (!(horizon > 0.0)) throw ConfigError("experiment: exit runs need a positive horizon");
      interval.validate(x0);
      break;
    case ExperimentKind::conditional_exit:
      if (!rough_delta.explicit_value && !(rough_delta.epsilon_power > 0.0))
        throw ConfigError("experiment: delta policy needs a value or an epsilon power");
      if (rough_delta.explicit_value && !(rough_delta.value > 0.0))
        throw ConfigError("experiment: explicit delta must be positive");
      break;
  }
  if (fast_grid_n < 8) throw ConfigError("experiment: fast grid too coarse");
}

EnsembleReport run_ensemble(const ExperimentConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();

  EnsembleReport report;
  report.kind = config.kind;
  report.label = config.label;
  report.config_hash = config.config_hash;
  report.master_seed = config.master_seed;
  report.tol = config.tol;

  for (double eps : config.epsilons) {
    EpsilonBlock blk = with_eps_context(eps, [&]() -> EpsilonBlock {
      switch (config.kind) {
        case ExperimentKind::homogenize_only: {
          report.models.emplace_back();
          return run_homogenize_block(config, eps, &report.models.back());
        }
        case ExperimentKind::fluctuation: return run_fluctuation_block(config, eps);
        case ExperimentKind::exit_law: return run_exit_block(config, eps);
        case ExperimentKind::conditional_exit: return run_conditional_block(config, eps);
      }
      throw ConfigError("experiment: unknown kind");
    });
    for (const auto& c : blk.checks) report.all_pass = report.all_pass && c.pass;
    report.blocks.push_back(std::move(blk));
  }

  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

void ScaleSpeedConfig::validate() const {
  if (!(D > 0.0)) throw ConfigError("scale-speed: D must be positive");
  if (!(period > 0.0)) throw ConfigError("scale-speed: period must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("scale-speed: epsilon must be positive");
  if (deltas.empty()) throw ConfigError("scale-speed: delta sweep is empty");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0.0)) throw ConfigError("scale-speed: every delta must be positive");
    if (i > 0 && !(deltas[i] < deltas[i - 1]))
      throw ConfigError("scale-speed: delta sweep must be strictly decreasing");
  }
  grid.validate();
  if (grid.lo < 0.0) throw ConfigError("scale-speed: grid must start at or above the anchor 0");
}

ScaleSpeedReport run_scale_speed(const ScaleSpeedConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();

  RoughPotentialSpec rough;
  rough.V = config.V;
  rough.Q = config.Q;
  rough.Q.period = config.period;
  rough.D = config.D;

  const auto xs = config.grid.nodes();
  const auto limit = scale_speed_functions(rough, config.epsilon, std::nullopt, xs);

  ScaleSpeedReport report;
  report.label = config.label;
  report.config_hash = config.config_hash;
  report.epsilon = config.epsilon;
  for (double delta : config.deltas) {
    const auto tab = scale_speed_functions(rough, config.epsilon, delta, xs);
    ScaleSpeedBlock blk;
    blk.delta = delta;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      blk.sup_u = std::max(blk.sup_u, std::abs(tab.u[i] - limit.u[i]));
      blk.sup_v = std::max(blk.sup_v, std::abs(tab.v[i] - limit.v[i]));
    }
    report.blocks.push_back(blk);
  }

  // worst adjacent ratio < 1 means the sup norms shrink along the sweep
  double worst_u = 0.0, worst_v = 0.0;
  for (std::size_t i = 1; i < report.blocks.size(); ++i) {
    worst_u = std::max(worst_u, report.blocks[i].sup_u / report.blocks[i - 1].sup_u);
    worst_v = std::max(worst_v, report.blocks[i].sup_v / report.blocks[i - 1].sup_v);
  }
  report.checks.push_back(CheckLine{"monotone_sup_u", worst_u, 1.0, worst_u < 1.0});
  report.checks.push_back(CheckLine{"monotone_sup_v", worst_v, 1.0, worst_v < 1.0});
  for (const auto& c : report.checks) report.all_pass = report.all_pass && c.pass;

  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace msexit
