#pragma once

#include <cstdint>
#include <vector>

#include "msexit/flow.hpp"
#include "msexit/homogenize.hpp"
#include "msexit/regime.hpp"
#include "msexit/sde.hpp"

namespace msexit {

// Limiting fluctuation process along the effective trajectory: an
// Ornstein-Uhlenbeck type process
//   d eta = [ Dlambda(X_s) eta + cJ J(X_s) + 1_Psi Psi(X_s) ] ds
//           + 1_noise sqrt(q(X_s)) dW,    eta_0 = 1_init xi0,
// where cJ = 1 at ell = 0, 1/ell for finite positive ell, and 0 at ell = inf,
// and the indicators come from the regime classification.
struct LimitProcessSpec {
  const HomogenizedModel* model = nullptr;
  RegimeClassification regime;
  EffectiveTrajectory traj;  // the model's own effective flow
  InitialLaw xi0;

  // checks the regime matches the model's, every active term has its table
  // (and xi0 is given exactly when the initial term is active), and the
  // trajectory rates agree with the model drift
  void validate() const;
  double j_coefficient() const;
};

struct FluctuationMoments {
  double mean = 0.0;
  double variance = 0.0;
};

// Exact moments of eta_t:
//   mean = cJ Phi(t) int_0^t Phi^-1 J(X_s) ds
//        + 1_Psi Phi(t) int_0^t Phi^-1 Psi(X_s) ds + 1_init Phi(t) E[xi0],
//   var  = 1_noise Phi(t)^2 int_0^t Phi^-2 q(X_s) ds + 1_init Phi(t)^2 Var(xi0),
// quadratures by composite Simpson at the trajectory resolution.
FluctuationMoments limit_fluctuation_moments(const LimitProcessSpec& spec, double t);

// Euler scheme (1024 steps) for the process above; one terminal sample per
// path, streams salted so runs are reproducible and merge-invariant.
std::vector<double> simulate_limit_ou(const LimitProcessSpec& spec, double t_end, int n_samples,
                                      std::uint64_t seed);

struct EtaMoments {
  double mean = 0.0;
  double variance = 0.0;
};

// Exit-time correction law at a transversal boundary point z: in d = 1 the
// projection is scalar division, (tau - T)/beta -> -eta_T / lambda(z).
struct ExitLawPrediction {
  double T = 0.0;
  double z = 0.0;
  double time_correction_var = 0.0;  // Var(eta_T)/lambda(z)^2
  double mean_shift = 0.0;           // -E[eta_T]/lambda(z)
};

ExitLawPrediction exit_law_projection(const LimitProcessSpec& spec, double T, double z,
                                      const EtaMoments& eta_terminal);
ExitLawPrediction exit_law_projection(const LimitProcessSpec& spec, double T, double z,
                                      const std::vector<double>& eta_samples);

}  // namespace msexit
