#include "msexit/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "msexit/common.hpp"

namespace msexit {

void ExitProblemSpec::validate(double x0) const {
  if (!(lower < upper)) throw ConfigError("exit interval: lower must be below upper");
  if (!(x0 > lower && x0 < upper))
    throw ConfigError("exit interval: initial state must lie strictly inside");
}

double ExitProblemSpec::rare_state() const {
  switch (rare_endpoint) {
    case Rare::lower: return lower;
    case Rare::upper: return upper;
    default: throw ConfigError("exit interval: rare endpoint not set");
  }
}

void EffectiveTrajectory::validate() const {
  const size_t n = times.size();
  if (n < 2) throw InvariantError("trajectory: needs at least two nodes");
  if (states.size() != n || linearization.size() != n || state_rate.size() != n ||
      linearization_rate.size() != n)
    throw InvariantError("trajectory: array sizes disagree");
  if (states.front() != start) throw InvariantError("trajectory: states[0] != start");
  if (linearization.front() != 1.0) throw InvariantError("trajectory: linearization[0] != 1");
  for (size_t i = 1; i < n; ++i)
    if (!(times[i] > times[i - 1])) throw InvariantError("trajectory: times not increasing");
}

namespace {

// interval index i with times[i] <= t <= times[i+1]
size_t locate_time(const std::vector<double>& times, double t) {
  const double span = times.back() - times.front();
  if (t < times.front() - 1e-12 * span || t > times.back() + 1e-12 * span)
    throw SolverError("trajectory: query outside the time range");
  auto it = std::upper_bound(times.begin(), times.end(), t);
  size_t i = static_cast<size_t>(it - times.begin());
  if (i > 0) --i;
  if (i >= times.size() - 1) i = times.size() - 2;
  return i;
}

double hermite(const std::vector<double>& ts, const std::vector<double>& vs,
               const std::vector<double>& rates, size_t i, double t) {
  const double h = ts[i + 1] - ts[i];
  const double s = (t - ts[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * vs[i] + (s3 - 2 * s2 + s) * h * rates[i] +
         (-2 * s3 + 3 * s2) * vs[i + 1] + (s3 - s2) * h * rates[i + 1];
}

double hermite_rate(const std::vector<double>& ts, const std::vector<double>& vs,
                    const std::vector<double>& rates, size_t i, double t) {
  const double h = ts[i + 1] - ts[i];
  const double s = (t - ts[i]) / h;
  const double s2 = s * s;
  return ((6 * s2 - 6 * s) * (vs[i] - vs[i + 1])) / h + (3 * s2 - 4 * s + 1) * rates[i] +
         (3 * s2 - 2 * s) * rates[i + 1];
}

}  // namespace

double EffectiveTrajectory::state_at(double t) const {
  return hermite(times, states, state_rate, locate_time(times, t), t);
}

double EffectiveTrajectory::state_rate_at(double t) const {
  return hermite_rate(times, states, state_rate, locate_time(times, t), t);
}

double EffectiveTrajectory::linearization_at(double t) const {
  return hermite(times, linearization, linearization_rate, locate_time(times, t), t);
}

EffectiveTrajectory integrate_linearized_flow(const std::function<double(double)>& drift,
                                              const std::function<double(double)>& drift_slope,
                                              double x0, double horizon, double step) {
  if (!(horizon > 0.0)) throw ConfigError("flow: horizon must be positive");
  if (!(step > 0.0)) throw ConfigError("flow: step must be positive");
  const int n_steps = std::max(1, static_cast<int>(std::ceil(horizon / step - 1e-12)));
  const double h = horizon / n_steps;

  EffectiveTrajectory traj;
  traj.start = x0;
  traj.times.reserve(n_steps + 1);
  traj.states.reserve(n_steps + 1);
  traj.linearization.reserve(n_steps + 1);
  traj.state_rate.reserve(n_steps + 1);
  traj.linearization_rate.reserve(n_steps + 1);

  double x = x0;
  double phi = 1.0;
  for (int k = 0; k <= n_steps; ++k) {
    const double dx = drift(x);
    const double dphi = drift_slope(x) * phi;
    if (!std::isfinite(x) || !std::isfinite(phi) || !std::isfinite(dx) || !std::isfinite(dphi))
      throw SolverError("flow: state or linearization became non-finite");
    traj.times.push_back(k * h);
    traj.states.push_back(x);
    traj.linearization.push_back(phi);
    traj.state_rate.push_back(dx);
    traj.linearization_rate.push_back(dphi);
    if (k == n_steps) break;

    const double k1x = dx, k1p = dphi;
    const double x2 = x + 0.5 * h * k1x, p2 = phi + 0.5 * h * k1p;
    const double k2x = drift(x2), k2p = drift_slope(x2) * p2;
    const double x3 = x + 0.5 * h * k2x, p3 = phi + 0.5 * h * k2p;
    const double k3x = drift(x3), k3p = drift_slope(x3) * p3;
    const double x4 = x + h * k3x, p4 = phi + h * k3p;
    const double k4x = drift(x4), k4p = drift_slope(x4) * p4;
    x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
    phi += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
  }
  traj.times.back() = horizon;  // guard against accumulated rounding in k*h
  traj.validate();
  return traj;
}

EffectiveTrajectory effective_flow(const HomogenizedModel& model, double x0, double horizon,
                                   double step) {
  const double lo = model.x_grid.front();
  const double hi = model.x_grid.back();
  if (!(x0 >= lo && x0 <= hi))
    throw ConfigError("flow: initial state outside the tabulated x range");
  auto drift = [&](double x) {
    if (!(x >= lo && x <= hi))
      throw SolverError("flow: effective state left the tabulated x range");
    return model.lambda_bar(x);
  };
  auto slope = [&](double x) {
    if (!(x >= lo && x <= hi))
      throw SolverError("flow: effective state left the tabulated x range");
    return model.dlambda_bar(x);
  };
  return integrate_linearized_flow(drift, slope, x0, horizon, step);
}

HittingPoint hitting_time_deterministic(const EffectiveTrajectory& traj,
                                        const ExitProblemSpec& exit,
                                        double transversality_floor) {
  traj.validate();
  exit.validate(traj.start);

  const size_t n = traj.times.size();
  size_t bracket = n;  // interval index whose right node is outside
  for (size_t i = 0; i + 1 < n; ++i) {
    const double xr = traj.states[i + 1];
    if (xr <= exit.lower || xr >= exit.upper) {
      bracket = i;
      break;
    }
  }
  if (bracket == n) throw SolverError("hitting time: no boundary crossing within the horizon");

  const bool up = traj.states[bracket + 1] >= exit.upper;
  const double boundary = up ? exit.upper : exit.lower;

  // dense output is monotone through the first crossing at RK4 resolution;
  // bisect g(t) = X(t) - boundary over the bracketing step
  double ta = traj.times[bracket];
  double tb = traj.times[bracket + 1];
  const double ga = traj.states[bracket] - boundary;
  double t = tb;
  if (traj.states[bracket + 1] != boundary) {
    for (int it = 0; it < 200 && tb - ta > 1e-15 * traj.horizon(); ++it) {
      t = 0.5 * (ta + tb);
      const double g = traj.state_at(t) - boundary;
      if (g == 0.0) break;
      if ((g > 0) == (ga > 0))
        ta = t;
      else
        tb = t;
    }
    t = 0.5 * (ta + tb);
  }

  HittingPoint hit;
  hit.time = t;
  hit.state = boundary;
  hit.speed = traj.state_rate_at(t);
  hit.at_upper = up;
  if (std::abs(hit.speed) <= transversality_floor)
    throw InvariantError("hitting time: tangential boundary crossing");
  return hit;
}

}  // namespace msexit
