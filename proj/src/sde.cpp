#include "msexit/sde.hpp"

#include <cmath>

#include "msexit/common.hpp"
#include "msexit/rng.hpp"

namespace msexit {

void InitialLaw::validate() const {
  if (kind == Kind::gaussian && !(stddev >= 0.0))
    throw ConfigError("initial law: stddev must be nonnegative");
}

double InitialLaw::sample(std::uint64_t seed, std::uint64_t path) const {
  switch (kind) {
    case Kind::none: return 0.0;
    case Kind::point: return value;
    case Kind::gaussian: {
      NormalStream s{seed, StreamClass::initial_draw};
      return value + stddev * s.normal(path, 0);
    }
  }
  return 0.0;
}

void SimulationSpec::validate() const {
  if (coeffs.dimension != 1) throw ConfigError("simulation: only d=1 is supported");
  if (!(coeffs.period > 0.0)) throw ConfigError("simulation: cell period must be positive");
  if (!std::isfinite(x0)) throw ConfigError("simulation: initial state must be finite");
  if (!(dt > 0.0)) throw ConfigError("simulation: dt must be positive");
  if (!(horizon > 0.0)) throw ConfigError("simulation: horizon must be positive");
  xi.validate();
  const double cap = resolution_factor * regime.delta * regime.delta / regime.epsilon;
  if (dt > cap * (1.0 + 1e-12))
    throw ConfigError("simulation: dt too coarse for the fast drift (dt <= rf*delta^2/eps)");
  if (horizon / dt > static_cast<double>(step_budget))
    throw ConfigError("simulation: horizon/dt exceeds the step budget");
}

std::uint64_t SimulationSpec::n_steps() const {
  const auto n = static_cast<std::uint64_t>(std::llround(horizon / dt));
  return n == 0 ? 1 : n;
}

double SimulationSpec::xi_scale() const {
  if (!std::isfinite(regime.a2)) return 0.0;
  return std::pow(regime.epsilon, 0.5 * regime.a2);
}

MultiscaleProgram build_multiscale_program(const PeriodicCoefficientSet& coeffs,
                                           const RegimeClassification& regime) {
  MultiscaleProgram prog;
  prog.b = compile_field(coeffs.b);
  prog.c = compile_field(coeffs.c);
  prog.sigma = compile_field(coeffs.sigma);
  prog.psi = compile_field(coeffs.psi);
  prog.n_harmonics =
      std::max(std::max(field_harmonics(prog.b), field_harmonics(prog.c)),
               std::max(field_harmonics(prog.sigma), field_harmonics(prog.psi)));
  prog.inv_cell = 1.0 / (regime.delta * coeffs.period);
  prog.fast_scale = regime.epsilon / regime.delta;
  prog.psi_scale = std::isfinite(regime.a1) ? std::pow(regime.epsilon, 0.5 * regime.a1) : 0.0;
  prog.noise_scale = std::sqrt(regime.epsilon);
  return prog;
}

namespace {

EnsembleSpec make_engine_spec(const SimulationSpec& spec, const ExitProblemSpec* exit) {
  EnsembleSpec es;
  es.dt = spec.dt;
  es.n_steps = spec.n_steps();
  es.seed = spec.seed;
  es.has_exit = exit != nullptr;
  if (exit) {
    exit->validate(spec.x0);
    es.lower = exit->lower;
    es.upper = exit->upper;
  }
  return es;
}

}  // namespace

PathRecord simulate_path(const SimulationSpec& spec, const ExitProblemSpec* exit,
                         std::uint64_t path_index) {
  spec.validate();
  const std::uint64_t n = spec.n_steps();
  if (n > 8000000ull)
    throw ConfigError("simulation: trajectory recording capped at 8e6 steps; use ensemble mode");

  const auto prog = build_multiscale_program(spec.coeffs, spec.regime);
  EnsembleSpec es = make_engine_spec(spec, exit);
  es.path_base = path_index;

  PathRecord rec;
  rec.seed = spec.seed;
  rec.path_index = path_index;
  rec.states.assign(n + 1, 0.0);
  es.trajectory = rec.states.data();

  const double x0 = spec.x0 + spec.xi_scale() * spec.xi.sample(spec.seed, path_index);
  if (exit) exit->validate(x0);
  LaneOut out;
  run_multiscale_ensemble(prog, es, &x0, 1, &out);

  const std::uint64_t recorded = out.exited ? out.exit_step + 1 : n;
  rec.states.resize(recorded + 1);
  rec.times.resize(recorded + 1);
  for (std::uint64_t k = 0; k <= recorded; ++k) rec.times[k] = static_cast<double>(k) * spec.dt;
  if (out.exited)
    rec.exit = ExitRecord{out.tau, out.exit_state, out.at_upper != 0, out.exit_step};
  return rec;
}

std::optional<ExitRecord> detect_exit(const PathRecord& path, const ExitProblemSpec& exit) {
  if (path.states.size() < 2 || path.states.size() != path.times.size())
    throw ConfigError("detect exit: malformed path record");
  exit.validate(path.states[0]);
  // k*dt - (k-1)*dt need not round back to dt, so recover the grid spacing
  // from the first interval; that keeps tau identical to the engine's record.
  const double dt = path.times[1] - path.times[0];
  for (std::size_t k = 1; k < path.states.size(); ++k) {
    const double xp = path.states[k - 1];
    const double xn = path.states[k];
    if (xn <= exit.lower || xn >= exit.upper) {
      const bool up = xn >= exit.upper;
      const double boundary = up ? exit.upper : exit.lower;
      const double f = (boundary - xp) / (xn - xp);
      ExitRecord rec;
      rec.tau = (static_cast<double>(k - 1) + f) * dt;
      rec.exit_state = boundary;
      rec.at_upper = up;
      rec.exit_step = k - 1;
      return rec;
    }
  }
  return std::nullopt;
}

std::vector<double> extract_fluctuation(const PathRecord& path, const EffectiveTrajectory& traj,
                                        double beta) {
  if (!(beta != 0.0)) throw ConfigError("fluctuation: beta must be nonzero");
  std::vector<double> eta(path.states.size());
  for (std::size_t k = 0; k < path.states.size(); ++k)
    eta[k] = (path.states[k] - traj.state_at(path.times[k])) / beta;
  return eta;
}

void run_paths(const SimulationSpec& spec, const ExitProblemSpec* exit, int n_paths,
               std::uint64_t path_base, LaneOut* out) {
  spec.validate();
  if (n_paths <= 0) throw ConfigError("simulation: ensemble size must be positive");
  const auto prog = build_multiscale_program(spec.coeffs, spec.regime);
  EnsembleSpec es = make_engine_spec(spec, exit);
  es.path_base = path_base;

  std::vector<double> x0(static_cast<std::size_t>(n_paths));
  const double scale = spec.xi_scale();
  for (int i = 0; i < n_paths; ++i) {
    const double xi = spec.x0 + scale * spec.xi.sample(spec.seed, path_base + static_cast<std::uint64_t>(i));
    if (exit) exit->validate(xi);
    x0[static_cast<std::size_t>(i)] = xi;
  }
  run_multiscale_ensemble(prog, es, x0.data(), n_paths, out);
}

}  // namespace msexit
