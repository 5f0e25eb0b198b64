#include "msexit/limits.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "msexit/common.hpp"
#include "msexit/quadrature.hpp"
#include "msexit/rng.hpp"
#include "msexit/stats.hpp"

namespace msexit {

double LimitProcessSpec::j_coefficient() const {
  if (!regime.active.J_drift) return 0.0;
  return regime.ell == 0.0 ? 1.0 : 1.0 / regime.ell;
}

void LimitProcessSpec::validate() const {
  if (model == nullptr) throw ConfigError("limit process: missing homogenized model");
  traj.validate();
  const RegimeClassification& mr = model->regime;
  if (regime.regime_index != mr.regime_index || regime.epsilon != mr.epsilon ||
      regime.zeta != mr.zeta || regime.m != mr.m || regime.ell != mr.ell)
    throw ConfigError("limit process: regime does not match the model's");
  xi0.validate();
  if (model->lambda_spline.empty())
    throw ConfigError("limit process: model lacks the effective drift table");
  if (regime.active.J_drift && model->J_spline.empty())
    throw ConfigError("limit process: J table missing for the active corrector drift");
  if (regime.active.Psi_drift && model->Psi_spline.empty())
    throw ConfigError("limit process: Psi table missing for the active perturbation drift");
  if (regime.active.noise && model->q_spline.empty())
    throw ConfigError("limit process: q table missing for the active noise term");
  if (regime.active.initial_perturbation && xi0.kind == InitialLaw::Kind::none)
    throw ConfigError("limit process: initial law missing for the active perturbation term");
  if (!regime.active.initial_perturbation && xi0.kind != InitialLaw::Kind::none)
    throw ConfigError("limit process: initial law supplied but the term is inactive");
  const std::size_t n = traj.states.size();
  for (std::size_t k : {std::size_t{0}, n / 2, n - 1}) {
    const double want = model->lambda_bar(traj.states[k]);
    if (std::abs(traj.state_rate[k] - want) > 1e-8 * std::max(1.0, std::abs(want)))
      throw ConfigError("limit process: trajectory was not generated from the model's drift");
  }
}

namespace {

void check_time(const LimitProcessSpec& spec, double t, const char* who) {
  if (!std::isfinite(t) || t < 0.0)
    throw ConfigError(std::string(who) + ": time must be nonnegative and finite");
  if (t > spec.traj.horizon() * (1.0 + 1e-12))
    throw ConfigError(std::string(who) + ": time beyond the trajectory horizon");
}

}  // namespace

FluctuationMoments limit_fluctuation_moments(const LimitProcessSpec& spec, double t) {
  spec.validate();
  check_time(spec, t, "limit moments");
  const HomogenizedModel& model = *spec.model;
  const RegimeClassification& reg = spec.regime;
  const double cj = spec.j_coefficient();

  FluctuationMoments out;
  const double phi_t = spec.traj.linearization_at(std::min(t, spec.traj.horizon()));
  if (t > 0.0) {
    const double step =
        spec.traj.times.size() > 1 ? spec.traj.times[1] - spec.traj.times[0] : t;
    std::size_t panels = 128;
    if (step > 0.0)
      panels = std::max(panels, static_cast<std::size_t>(std::ceil(t / step)));
    panels = std::min<std::size_t>(panels, 1u << 20);
    const double dx = t / static_cast<double>(panels);

    std::vector<double> fj, fpsi, fq;
    if (cj != 0.0) fj.reserve(panels + 1);
    if (reg.active.Psi_drift) fpsi.reserve(panels + 1);
    if (reg.active.noise) fq.reserve(panels + 1);
    for (std::size_t k = 0; k <= panels; ++k) {
      const double s = (k == panels) ? t : dx * static_cast<double>(k);
      const double x = spec.traj.state_at(s);
      const double phi = spec.traj.linearization_at(s);
      if (!(phi > 0.0))
        throw SolverError("limit moments: nonpositive linearization along the trajectory");
      if (cj != 0.0) fj.push_back(model.J_bar(x) / phi);
      if (reg.active.Psi_drift) fpsi.push_back(model.Psi_bar(x) / phi);
      if (reg.active.noise) fq.push_back(model.q_bar(x) / (phi * phi));
    }
    if (cj != 0.0) out.mean += cj * phi_t * composite_simpson(fj, dx);
    if (reg.active.Psi_drift) out.mean += phi_t * composite_simpson(fpsi, dx);
    if (reg.active.noise) out.variance += phi_t * phi_t * composite_simpson(fq, dx);
  }
  if (reg.active.initial_perturbation) {
    out.mean += phi_t * spec.xi0.mean();
    out.variance += phi_t * phi_t * spec.xi0.variance();
  }
  return out;
}

std::vector<double> simulate_limit_ou(const LimitProcessSpec& spec, double t_end, int n_samples,
                                      std::uint64_t seed) {
  spec.validate();
  check_time(spec, t_end, "limit ou");
  if (n_samples <= 0) throw ConfigError("limit ou: need at least one sample");
  if (n_samples > 10000000) throw ConfigError("limit ou: sample budget exceeded");

  constexpr int kSteps = 1024;
  const double h = t_end / kSteps;
  const double root_h = std::sqrt(h);
  const HomogenizedModel& model = *spec.model;
  const RegimeClassification& reg = spec.regime;
  const double cj = spec.j_coefficient();

  std::vector<double> relax(kSteps), push(kSteps), noise(kSteps);
  for (int k = 0; k < kSteps; ++k) {
    const double x = spec.traj.state_at(h * k);
    relax[k] = model.dlambda_bar(x);
    double d = 0.0;
    if (cj != 0.0) d += cj * model.J_bar(x);
    if (reg.active.Psi_drift) d += model.Psi_bar(x);
    push[k] = d;
    noise[k] = reg.active.noise ? std::sqrt(std::max(0.0, model.q_bar(x))) * root_h : 0.0;
  }

  const NormalStream ou{seed, StreamClass::ou_sampler};
  std::vector<double> out(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) {
    double eta = reg.active.initial_perturbation
                     ? spec.xi0.sample(seed, static_cast<std::uint64_t>(i))
                     : 0.0;
    for (int k = 0; k < kSteps; ++k) {
      eta += (relax[k] * eta + push[k]) * h +
             noise[k] * ou.normal(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(k));
    }
    out[static_cast<std::size_t>(i)] = eta;
  }
  return out;
}

ExitLawPrediction exit_law_projection(const LimitProcessSpec& spec, double T, double z,
                                      const EtaMoments& eta_terminal) {
  spec.validate();
  if (std::isinf(spec.regime.ell))
    throw ConfigError(
        "exit law: unsupported regime (ell = inf); only the fluctuation limit applies");
  if (!std::isfinite(T) || T <= 0.0)
    throw ConfigError("exit law: deterministic exit time must be positive");
  if (!std::isfinite(z)) throw ConfigError("exit law: exit point must be finite");
  if (!std::isfinite(eta_terminal.variance) || eta_terminal.variance < 0.0)
    throw ConfigError("exit law: terminal variance must be nonnegative");
  const double lam = spec.model->lambda_bar(z);
  if (std::abs(lam) <= spec.model->tol.transversality_floor)
    throw InvariantError("exit law: effective drift is tangent to the boundary at the exit point");
  ExitLawPrediction out;
  out.T = T;
  out.z = z;
  out.time_correction_var = eta_terminal.variance / (lam * lam);
  out.mean_shift = -eta_terminal.mean / lam;
  return out;
}

ExitLawPrediction exit_law_projection(const LimitProcessSpec& spec, double T, double z,
                                      const std::vector<double>& eta_samples) {
  MomentAccumulator acc;
  for (double v : eta_samples) acc.add(v);
  return exit_law_projection(spec, T, z, EtaMoments{acc.mean(), acc.variance()});
}

}  // namespace msexit
