#include "msexit/rough.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "msexit/common.hpp"
#include "msexit/quadrature.hpp"
#include "msexit/stats.hpp"

namespace msexit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double horner(const std::vector<double>& p, double x) {
  if (p.empty()) return 0.0;
  double acc = p.back();
  for (std::size_t i = p.size() - 1; i-- > 0;) acc = acc * x + p[i];
  return acc;
}

double logaddexp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double max_abs_on(const Poly1D& p, double a, double b, int n = 4096) {
  double worst = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = a + (b - a) * static_cast<double>(i) / n;
    worst = std::max(worst, std::abs(p.eval(x)));
  }
  return worst;
}

double ripple_amplitude(const TrigPoly1D& q) {
  double amp = std::abs(q.a0);
  for (double c : q.cos_coeffs) amp += std::abs(c);
  for (double c : q.sin_coeffs) amp += std::abs(c);
  return amp;
}

GibbsConstants gibbs_adaptive(const TrigPoly1D& q, double D) {
  const double rho = q.period;
  const double bound = rho * std::exp(ripple_amplitude(q) / D);
  const double tol = 1e-13 * (1.0 + bound);
  GibbsConstants g;
  g.K = integrate_adaptive([&](double y) { return std::exp(-q.eval(y) / D); }, 0.0, rho, tol).value;
  g.K_hat =
      integrate_adaptive([&](double y) { return std::exp(q.eval(y) / D); }, 0.0, rho, tol).value;
  g.enhancement = g.K * g.K_hat / (rho * rho);
  return g;
}

// log of the cumulative trapezoid of exp(g) from `a`, recorded at the
// x_grid nodes (all >= a, strictly increasing); each gap is subdivided to
// spacing <= h.
std::vector<double> log_cumulative(const std::function<double(double)>& g, double a,
                                   const std::vector<double>& x_grid, double h) {
  std::vector<double> out;
  out.reserve(x_grid.size());
  double acc = -kInf;
  double left = a;
  double gleft = g(a);
  for (double b : x_grid) {
    if (b > left) {
      const int m = std::max(1, static_cast<int>(std::ceil((b - left) / h)));
      const double dx = (b - left) / m;
      const double lnw = std::log(0.5 * dx);
      for (int k = 1; k <= m; ++k) {
        const double x = (k == m) ? b : left + dx * k;
        const double gx = g(x);
        acc = logaddexp(acc, lnw + logaddexp(gleft, gx));
        gleft = gx;
      }
      left = b;
    }
    out.push_back(acc);
  }
  return out;
}

}  // namespace

void RoughPotentialSpec::validate() const {
  if (!(D > 0.0) || !std::isfinite(D))
    throw ConfigError("rough potential: temperature D must be positive");
  if (!(Q.period > 0.0) || !std::isfinite(Q.period))
    throw ConfigError("rough potential: ripple period must be positive");
  interval.validate(x0);
  if (!(interval.lower > 0.0))
    throw ConfigError("rough potential: exit interval must lie strictly above the h-anchor 0");
  if (interval.rare_endpoint == ExitProblemSpec::Rare::lower)
    throw ConfigError(
        "rough potential: the descent -V' already exits at the lower end; the rare endpoint "
        "is the upper one");
  const Poly1D dV = V.derivative();
  const Poly1D ddV = dV.derivative();
  for (int i = 0; i <= 512; ++i) {
    const double x = interval.lower + (interval.upper - interval.lower) * i / 512.0;
    if (!(ddV.eval(x) > 0.0))
      throw ConfigError("rough potential: V must be strictly convex on the exit interval");
    if (!(dV.eval(x) > 0.0))
      throw ConfigError(
          "rough potential: V' must be positive on the exit interval (potential minimum below "
          "the interval)");
  }
}

double RoughPotentialSpec::rare_state() const {
  if (interval.rare_endpoint == ExitProblemSpec::Rare::lower)
    throw ConfigError(
        "rough potential: the descent -V' already exits at the lower end; the rare endpoint "
        "is the upper one");
  return interval.upper;
}

GibbsConstants gibbs_constants(const RoughPotentialSpec& rough, const TorusGrid& grid) {
  if (!(rough.D > 0.0) || !std::isfinite(rough.D))
    throw ConfigError("gibbs constants: temperature D must be positive");
  grid.validate();
  if (grid.n_points < 128)
    throw ConfigError("gibbs constants: grid too coarse to resolve the ripple (need >= 128 nodes)");
  const double rho = rough.rho();
  if (std::abs(grid.period - rho) > 1e-12 * std::max(1.0, rho))
    throw ConfigError("gibbs constants: grid period must match the ripple period");
  GibbsConstants g;
  double accm = 0.0, accp = 0.0;
  for (int j = 0; j < grid.n_points; ++j) {
    const double e = rough.Q.eval(grid.node(j)) / rough.D;
    accm += std::exp(-e);
    accp += std::exp(e);
  }
  g.K = accm * grid.spacing();
  g.K_hat = accp * grid.spacing();
  g.enhancement = g.K * g.K_hat / (rho * rho);
  return g;
}

GibbsConstants gibbs_constants(const RoughPotentialSpec& rough) {
  if (!(rough.D > 0.0) || !std::isfinite(rough.D))
    throw ConfigError("gibbs constants: temperature D must be positive");
  if (!(rough.rho() > 0.0) || !std::isfinite(rough.rho()))
    throw ConfigError("gibbs constants: ripple period must be positive");
  return gibbs_adaptive(rough.Q, rough.D);
}

double gradient_extra_drift(const TrigPoly1D& Q, double D, double vprime) {
  if (!(D > 0.0) || !std::isfinite(D))
    throw ConfigError("gradient drift: temperature D must be positive");
  if (!(Q.period > 0.0) || !std::isfinite(Q.period))
    throw ConfigError("gradient drift: ripple period must be positive");
  const double rho = Q.period;
  const GibbsConstants g = gibbs_adaptive(Q, D);
  const double tol_inner = 1e-12 * (1.0 + rho);
  const double tol_outer = 1e-11 * (1.0 + rho * rho);
  const auto inner = [&](double y) {
    if (y <= 0.0) return 0.0;
    return integrate_adaptive(
               [&](double z) { return 1.0 - (rho / g.K) * std::exp(-Q.eval(z) / D); }, 0.0, y,
               tol_inner)
        .value;
  };
  const double I =
      integrate_adaptive(
          [&](double y) { return (1.0 - (rho / g.K_hat) * std::exp(Q.eval(y) / D)) * inner(y); },
          0.0, rho, tol_outer)
          .value;
  return -(rho / (g.K * g.K_hat * D)) * vprime * vprime * I;
}

ConditionalExitStats conditional_exit_stats(const RoughPotentialSpec& rough) {
  rough.interval.validate(rough.x0);
  const double z = rough.rare_state();
  // singular-integrand guard ahead of the geometry check: 1/V' and 1/V'^3
  // below need V' bounded away from zero between x0 and the rare endpoint
  const Poly1D dV = rough.V.derivative();
  double vp_min = kInf, vp_max = 0.0;
  bool sign_change = false;
  double prev = dV.eval(rough.x0);
  for (int i = 0; i <= 1024; ++i) {
    const double x = rough.x0 + (z - rough.x0) * i / 1024.0;
    const double v = dV.eval(x);
    vp_min = std::min(vp_min, std::abs(v));
    vp_max = std::max(vp_max, std::abs(v));
    if (v == 0.0 || (v > 0.0) != (prev > 0.0)) sign_change = true;
    prev = v;
  }
  if (sign_change || vp_min <= 1e-10 * std::max(1.0, vp_max))
    throw SolverError("conditional exit stats: V' vanishes in the integration range");
  rough.validate();

  ConditionalExitStats out;
  out.rare_state = z;
  out.enhancement = gibbs_adaptive(rough.Q, rough.D).enhancement;
  const double tol_T = 1e-12 * (1.0 + (z - rough.x0) / vp_min);
  out.T = out.enhancement *
          integrate_adaptive([&](double y) { return 1.0 / dV.eval(y); }, rough.x0, z, tol_T).value;
  const double tol_var = 1e-12 * (1.0 + (z - rough.x0) / (vp_min * vp_min * vp_min));
  const double third =
      integrate_adaptive([&](double y) { return std::pow(dV.eval(y), -3.0); }, rough.x0, z,
                         tol_var)
          .value;
  out.limit_variance = 2.0 * rough.D * out.enhancement * out.enhancement * third;
  return out;
}

namespace {

ConditionedProgram build_conditioned_program(const RoughPotentialSpec& rough, double eps,
                                             double delta) {
  ConditionedProgram p;
  const double rho = rough.rho();
  const double D = rough.D;
  const double q0 = rough.Q.eval(0.0);
  const double v0 = rough.V.coeffs.empty() ? 0.0 : rough.V.coeffs[0];

  const TrigPoly1D dQ = rough.Q.derivative();
  const double fast = -(eps / delta);
  p.fast_drift.a0 = fast * dQ.a0;
  p.fast_drift.cosk.resize(dQ.cos_coeffs.size());
  for (std::size_t k = 0; k < dQ.cos_coeffs.size(); ++k)
    p.fast_drift.cosk[k] = fast * dQ.cos_coeffs[k];
  p.fast_drift.sink.resize(dQ.sin_coeffs.size());
  for (std::size_t k = 0; k < dQ.sin_coeffs.size(); ++k)
    p.fast_drift.sink[k] = fast * dQ.sin_coeffs[k];

  const Poly1D dV = rough.V.derivative();
  p.slow_drift = dV.coeffs;
  for (double& c : p.slow_drift) c = -c;

  p.lnh_trig.a0 = rough.Q.a0 / D;
  p.lnh_trig.cosk = rough.Q.cos_coeffs;
  for (double& c : p.lnh_trig.cosk) c /= D;
  p.lnh_trig.sink = rough.Q.sin_coeffs;
  for (double& c : p.lnh_trig.sink) c /= D;

  p.lnh_poly = rough.V.coeffs;
  if (p.lnh_poly.empty()) p.lnh_poly.push_back(0.0);
  for (double& c : p.lnh_poly) c /= eps * D;
  p.lnh_poly[0] = -q0 / D;  // the V(0)/(eps D) terms cancel; only -Q(0)/D survives

  p.n_harmonics = static_cast<int>(
      std::max({p.fast_drift.cosk.size(), p.fast_drift.sink.size(), p.lnh_trig.cosk.size(),
                p.lnh_trig.sink.size()}));
  p.inv_cell = 1.0 / (delta * rho);
  p.correction_scale = 2.0 * eps * D;
  p.noise_scale = std::sqrt(2.0 * eps * D);

  // cumulative log-trapezoid table of int_0^x h on [0, upper]
  const double upper = rough.interval.upper;
  const double max_dv = max_abs_on(dV, 0.0, upper);
  double h = upper / 4096.0;
  if (max_dv > 0.0) h = std::min(h, eps * D / (64.0 * max_dv));
  if (!rough.Q.is_constant()) h = std::min(h, delta * rho / 64.0);
  const double n_real = std::ceil(upper / h) + 1.0;
  if (n_real > 3.2e7)
    throw ConfigError(
        "conditioned sampler: h-integral table exceeds the memory budget; increase delta or "
        "shrink the interval");
  const int n = static_cast<int>(n_real);
  const double dx = upper / (n - 1);
  const auto lnh = [&](double x) {
    return (rough.Q.eval(x / delta) - q0) / D + (rough.V.eval(x) - v0) / (eps * D);
  };
  p.lnI.assign(static_cast<std::size_t>(n), -kInf);
  double gprev = lnh(0.0);
  const double lnw = std::log(0.5 * dx);
  for (int k = 1; k < n; ++k) {
    const double x = (k == n - 1) ? upper : dx * k;
    const double gk = lnh(x);
    p.lnI[static_cast<std::size_t>(k)] =
        logaddexp(p.lnI[static_cast<std::size_t>(k - 1)], lnw + logaddexp(gprev, gk));
    gprev = gk;
  }
  // the true value at the anchor is -inf; a finite sentinel keeps unused
  // lanes from producing NaN while still pushing hard away from the anchor
  p.lnI[0] = p.lnI[1] - 60.0;
  p.table_x0 = 0.0;
  p.table_inv_dx = 1.0 / dx;
  return p;
}

}  // namespace

ConditionedSampler::ConditionedSampler(const RoughPotentialSpec& rough, double epsilon,
                                       double delta, double dt, std::uint64_t seed, double horizon,
                                       double resolution_factor)
    : rough_(rough), epsilon_(epsilon), delta_(delta), dt_(dt), seed_(seed) {
  rough_.validate();
  if (!(epsilon > 0.0) || !(epsilon < 1.0))
    throw ConfigError("conditioned sampler: epsilon must lie in (0,1)");
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw ConfigError("conditioned sampler: delta must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw ConfigError("conditioned sampler: dt must be positive");
  if (!rough_.Q.is_constant()) {
    const double cap = resolution_factor * delta * delta / epsilon;
    if (dt > cap * (1.0 + 1e-12))
      throw ConfigError(
          "conditioned sampler: dt too coarse for the ripple (dt <= rf*delta^2/eps)");
  }
  stats_ = conditional_exit_stats(rough_);
  horizon_ = horizon > 0.0 ? horizon : 3.0 * stats_.T;
  if (!std::isfinite(horizon_) || !(horizon_ > 0.0))
    throw ConfigError("conditioned sampler: horizon must be positive");
  if (horizon_ / dt_ > 1e8)
    throw ConfigError("conditioned sampler: horizon/dt exceeds the step budget");
  const auto n = static_cast<std::uint64_t>(std::llround(horizon_ / dt_));
  n_steps_ = n == 0 ? 1 : n;
  prog_ = build_conditioned_program(rough_, epsilon_, delta_);
}

PathRecord ConditionedSampler::simulate_path(std::uint64_t path_index) const {
  if (n_steps_ > 8000000ull)
    throw ConfigError(
        "conditioned sampler: trajectory recording capped at 8e6 steps; use ensemble mode");
  EnsembleSpec es;
  es.dt = dt_;
  es.n_steps = n_steps_;
  es.seed = seed_;
  es.path_base = path_index;
  es.has_exit = true;
  es.lower = rough_.interval.lower;
  es.upper = rough_.interval.upper;

  PathRecord rec;
  rec.seed = seed_;
  rec.path_index = path_index;
  rec.states.assign(n_steps_ + 1, 0.0);
  es.trajectory = rec.states.data();

  const double x0 = rough_.x0;
  LaneOut out;
  run_conditioned_ensemble(prog_, es, &x0, 1, &out);

  const std::uint64_t recorded = out.exited ? out.exit_step + 1 : n_steps_;
  rec.states.resize(recorded + 1);
  rec.times.resize(recorded + 1);
  for (std::uint64_t k = 0; k <= recorded; ++k) rec.times[k] = static_cast<double>(k) * dt_;
  if (out.exited)
    rec.exit = ExitRecord{out.tau, out.exit_state, out.at_upper != 0, out.exit_step};
  return rec;
}

std::vector<LaneOut> ConditionedSampler::run_paths(int n_paths, std::uint64_t path_base) const {
  if (n_paths <= 0) throw ConfigError("conditioned sampler: ensemble size must be positive");
  EnsembleSpec es;
  es.dt = dt_;
  es.n_steps = n_steps_;
  es.seed = seed_;
  es.path_base = path_base;
  es.has_exit = true;
  es.lower = rough_.interval.lower;
  es.upper = rough_.interval.upper;
  std::vector<double> x0(static_cast<std::size_t>(n_paths), rough_.x0);
  std::vector<LaneOut> out(static_cast<std::size_t>(n_paths));
  run_conditioned_ensemble(prog_, es, x0.data(), n_paths, out.data());
  return out;
}

double ConditionedSampler::drift_at(double x) const {
  const double cell = x * prog_.inv_cell;
  const double t = cell - std::floor(cell);
  const double two_pi = 6.283185307179586476925286766559;
  double fast = prog_.fast_drift.a0;
  double lnh = prog_.lnh_trig.a0;
  const std::size_t nh = static_cast<std::size_t>(prog_.n_harmonics);
  for (std::size_t k = 0; k < nh; ++k) {
    const double c = std::cos(two_pi * static_cast<double>(k + 1) * t);
    const double s = std::sin(two_pi * static_cast<double>(k + 1) * t);
    if (k < prog_.fast_drift.cosk.size()) fast += prog_.fast_drift.cosk[k] * c;
    if (k < prog_.fast_drift.sink.size()) fast += prog_.fast_drift.sink[k] * s;
    if (k < prog_.lnh_trig.cosk.size()) lnh += prog_.lnh_trig.cosk[k] * c;
    if (k < prog_.lnh_trig.sink.size()) lnh += prog_.lnh_trig.sink[k] * s;
  }
  lnh += horner(prog_.lnh_poly, x);
  double pos = (x - prog_.table_x0) * prog_.table_inv_dx;
  pos = std::min(std::max(pos, 0.0), static_cast<double>(prog_.lnI.size() - 1) - 1e-9);
  const auto j = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(j);
  const double lnI = prog_.lnI[j] + frac * (prog_.lnI[j + 1] - prog_.lnI[j]);
  return fast + horner(prog_.slow_drift, x) + prog_.correction_scale * std::exp(lnh - lnI);
}

PathRecord simulate_conditioned_path(const RoughPotentialSpec& rough, double epsilon, double delta,
                                     double dt, std::uint64_t seed) {
  return ConditionedSampler(rough, epsilon, delta, dt, seed).simulate_path(0);
}

ConditionalCltReport conditional_exit_clt_check(const RoughPotentialSpec& rough, double epsilon,
                                                double delta, int n_paths, double dt,
                                                std::uint64_t seed) {
  if (n_paths < 100)
    throw ConfigError("conditioned exit check: need at least 100 paths for the statistics");
  if (!(delta <= epsilon))
    throw ConfigError("conditioned exit check: scale ordering requires delta <= epsilon");
  const ConditionedSampler sampler(rough, epsilon, delta, dt, seed);
  const std::vector<LaneOut> lanes = sampler.run_paths(n_paths);

  ConditionalCltReport rep;
  rep.predicted = sampler.prediction();
  rep.epsilon = epsilon;
  rep.delta = delta;
  rep.n_paths = n_paths;
  const double root_eps = std::sqrt(epsilon);
  MomentAccumulator acc;
  rep.normalized.reserve(lanes.size());
  for (const LaneOut& lane : lanes) {
    if (!lane.exited) {
      rep.n_no_exit += 1;
      continue;
    }
    if (!lane.at_upper) {
      rep.n_wrong_endpoint += 1;
      continue;
    }
    rep.n_rare += 1;
    const double z = (lane.tau - rep.predicted.T) / root_eps;
    rep.normalized.push_back(z);
    acc.add(z);
  }
  const int bad = rep.n_no_exit + rep.n_wrong_endpoint;
  if (static_cast<double>(bad) > 0.01 * static_cast<double>(n_paths))
    throw InvariantError("conditioned exit check invalidated: " + std::to_string(rep.n_no_exit) +
                         " paths without exit, " + std::to_string(rep.n_wrong_endpoint) +
                         " at the typical endpoint, out of " + std::to_string(n_paths));
  rep.empirical_mean = acc.mean();
  rep.empirical_variance = acc.variance();
  rep.mean_se = acc.mean_se();
  rep.variance_se =
      rep.empirical_variance * std::sqrt(2.0 / static_cast<double>(acc.count - 1));
  const double sd = std::sqrt(rep.predicted.limit_variance);
  rep.ks = ks_statistic(rep.normalized, [sd](double z) { return normal_cdf(z / sd); });
  return rep;
}

ScaleSpeedTable scale_speed_functions(const RoughPotentialSpec& rough, double epsilon,
                                      std::optional<double> delta,
                                      const std::vector<double>& x_grid) {
  if (!(rough.D > 0.0) || !std::isfinite(rough.D))
    throw ConfigError("scale functions: temperature D must be positive");
  if (!(rough.rho() > 0.0) || !std::isfinite(rough.rho()))
    throw ConfigError("scale functions: ripple period must be positive");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw ConfigError("scale functions: epsilon must be positive");
  if (delta && (!(*delta > 0.0) || !std::isfinite(*delta)))
    throw ConfigError("scale functions: delta must be positive");
  if (x_grid.empty()) throw ConfigError("scale functions: empty evaluation grid");
  if (!(x_grid.front() >= 0.0))
    throw ConfigError("scale functions: grid must start at or above the anchor 0");
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    if (!std::isfinite(x_grid[i]))
      throw ConfigError("scale functions: grid values must be finite");
    if (i > 0 && !(x_grid[i] > x_grid[i - 1]))
      throw ConfigError("scale functions: grid must be strictly increasing");
  }
  if (!(x_grid.back() > 0.0))
    throw ConfigError("scale functions: grid must extend beyond the anchor 0");

  const double D = rough.D;
  const double rho = rough.rho();
  const double q0 = rough.Q.eval(0.0);
  const double v0 = rough.V.coeffs.empty() ? 0.0 : rough.V.coeffs[0];
  const double back = x_grid.back();

  const Poly1D dV = rough.V.derivative();
  const double max_dv = max_abs_on(dV, 0.0, back);
  double h = back / 16384.0;
  if (max_dv > 0.0) h = std::min(h, epsilon * D / (256.0 * max_dv));
  if (delta && !rough.Q.is_constant()) h = std::min(h, (*delta) * rho / 64.0);
  if (back / h > 3.2e7)
    throw ConfigError("scale functions: integration grid exceeds the memory budget");

  const auto A = [&](double y) { return (rough.V.eval(y) - v0) / (epsilon * D); };
  std::function<double(double)> gu, gv;
  if (delta) {
    const double d = *delta;
    gu = [&, d](double y) { return (rough.Q.eval(y / d) - q0) / D - A(y); };
    gv = [&, d](double y) { return -(rough.Q.eval(y / d) - q0) / D + A(y); };
  } else {
    const GibbsConstants g = gibbs_adaptive(rough.Q, D);
    const double ln_avg_u = std::log(g.K_hat / rho) - q0 / D;
    const double ln_avg_v = std::log(g.K / rho) + q0 / D;
    gu = [&, ln_avg_u](double y) { return ln_avg_u - A(y); };
    gv = [&, ln_avg_v](double y) { return ln_avg_v + A(y); };
  }

  const std::vector<double> ln_u = log_cumulative(gu, 0.0, x_grid, h);
  const std::vector<double> ln_v = log_cumulative(gv, 0.0, x_grid, h);

  ScaleSpeedTable out;
  out.x = x_grid;
  out.u.resize(x_grid.size());
  out.v.resize(x_grid.size());
  const double ln_eps_d = std::log(epsilon * D);
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    out.u[i] = std::exp(ln_u[i]);
    out.v[i] = std::exp(ln_v[i] - ln_eps_d);
  }
  return out;
}

PeriodicCoefficientSet langevin_coefficients(const RoughPotentialSpec& rough) {
  if (!(rough.D > 0.0) || !std::isfinite(rough.D))
    throw ConfigError("rough potential: temperature D must be positive");
  if (!(rough.rho() > 0.0) || !std::isfinite(rough.rho()))
    throw ConfigError("rough potential: ripple period must be positive");
  TrigPoly1D neg_dq = rough.Q.derivative();
  neg_dq.a0 = -neg_dq.a0;
  for (double& c : neg_dq.cos_coeffs) c = -c;
  for (double& c : neg_dq.sin_coeffs) c = -c;
  Poly1D neg_dv = rough.V.derivative();
  for (double& c : neg_dv.coeffs) c = -c;

  PeriodicCoefficientSet out;
  out.period = rough.rho();
  out.b = CoefficientField::of_y(neg_dq);
  out.c = CoefficientField::of_x(neg_dv, rough.rho());
  out.sigma = CoefficientField::constant(std::sqrt(2.0 * rough.D), rough.rho());
  out.psi = CoefficientField::constant(0.0, rough.rho());
  out.psi_limit = CoefficientField::constant(0.0, rough.rho());
  return out;
}

}  // namespace msexit
