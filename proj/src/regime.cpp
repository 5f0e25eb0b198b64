#include "msexit/regime.hpp"

#include <cmath>

#include "msexit/common.hpp"

namespace msexit {

RegimeClassification classify_regime(double epsilon, double delta_exponent, double gamma,
                                     double a1, double a2) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw ConfigError("classify_regime: epsilon must lie in (0,1)");
  if (!(delta_exponent > 0.0))
    throw ConfigError("classify_regime: delta exponent must be positive");
  if (!(a1 > 0.0) || !(a2 > 0.0))
    throw ConfigError("classify_regime: perturbation exponents must be positive");
  if (std::isnan(gamma) || gamma < 0.0)
    throw ConfigError("classify_regime: gamma must be nonnegative or +inf");

  RegimeClassification r;
  r.epsilon = epsilon;
  r.delta_exponent = delta_exponent;
  r.gamma = gamma;
  r.a1 = a1;
  r.a2 = a2;

  if (std::isinf(gamma)) {
    r.regime_index = 1;
    if (!(delta_exponent > 1.0))
      throw ConfigError("classify_regime: regime 1 requires delta exponent > 1");
    r.zeta = delta_exponent - 1.0;
    r.delta = std::pow(epsilon, delta_exponent);
    r.theta = r.delta / epsilon;
  } else {
    r.regime_index = 2;
    r.zeta = delta_exponent;
    r.theta = std::pow(epsilon, r.zeta);
    r.delta = epsilon / (gamma + r.theta);
  }

  r.m = std::min(0.5, std::min(a1 / 2.0, a2 / 2.0));

  // exponent comparison: eps^m / eps^zeta -> 0 (m > zeta), 1 (m = zeta), inf
  if (r.m > r.zeta)
    r.ell = 0.0;
  else if (r.m == r.zeta)
    r.ell = 1.0;
  else
    r.ell = std::numeric_limits<double>::infinity();

  r.beta = (r.ell == 0.0) ? r.theta : std::pow(epsilon, r.m);

  const bool ell_nonzero = r.ell != 0.0;
  r.active.noise = (r.m == 0.5) && ell_nonzero;
  r.active.Psi_drift = (r.m == a1 / 2.0) && ell_nonzero;
  r.active.initial_perturbation = (r.m == a2 / 2.0) && ell_nonzero;
  r.active.J_drift = !std::isinf(r.ell);
  return r;
}

}  // namespace msexit
