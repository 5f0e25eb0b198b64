#include "msexit/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

namespace msexit {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& source, const std::string& msg) {
  throw ConfigError("config " + source + ": " + msg);
}

const json& member(const json& j, const char* key, const std::string& source) {
  auto it = j.find(key);
  if (it == j.end()) fail(source, std::string("missing \"") + key + "\"");
  return *it;
}

double number(const json& j, const char* key, const std::string& source) {
  const json& v = member(j, key, source);
  if (!v.is_number()) fail(source, std::string("\"") + key + "\" must be a number");
  return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? fallback : it->get<double>();
}

// absent or null both mean "not configured" = +inf exponent
double exponent_or_inf(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return kInf;
  return it->get<double>();
}

std::vector<double> number_array(const json& j, const char* key, const std::string& source) {
  const json& v = member(j, key, source);
  if (!v.is_array()) fail(source, std::string("\"") + key + "\" must be an array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) fail(source, std::string("\"") + key + "\" must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Poly1D parse_poly(const json& v, const char* key, const std::string& source) {
  if (!v.is_array()) fail(source, std::string("\"") + key + "\" must be a coefficient array");
  Poly1D p;
  for (const auto& x : v) p.coeffs.push_back(x.get<double>());
  return p;
}

TrigPoly1D parse_trig(const json& v, double period, const char* key, const std::string& source) {
  if (!v.is_object()) fail(source, std::string("\"") + key + "\" must be a trig object");
  TrigPoly1D t;
  t.period = period;
  t.a0 = number_or(v, "a0", 0.0);
  if (v.contains("cos"))
    for (const auto& x : v["cos"]) t.cos_coeffs.push_back(x.get<double>());
  if (v.contains("sin"))
    for (const auto& x : v["sin"]) t.sin_coeffs.push_back(x.get<double>());
  return t;
}

CoefficientField parse_field(const json& v, double period, const char* key,
                             const std::string& source) {
  if (v.is_number()) return CoefficientField::constant(v.get<double>(), period);
  if (!v.is_array())
    fail(source, std::string("\"") + key + "\" must be a number or an array of terms");
  CoefficientField f;
  for (const auto& term : v) {
    if (!term.is_object()) fail(source, std::string("\"") + key + "\" terms must be objects");
    SeparableTerm st;
    st.in_x = term.contains("x") ? parse_poly(term["x"], key, source) : Poly1D::constant(1.0);
    st.in_y = term.contains("y") ? parse_trig(term["y"], period, key, source)
                                 : TrigPoly1D::constant(1.0, period);
    st.in_y.period = period;
    f.terms.push_back(std::move(st));
  }
  return f;
}

TrigPoly1D negated_derivative(const TrigPoly1D& t) {
  TrigPoly1D d = t.derivative();
  d.a0 = -d.a0;
  for (auto& c : d.cos_coeffs) c = -c;
  for (auto& s : d.sin_coeffs) s = -s;
  return d;
}

Poly1D negated_derivative(const Poly1D& p) {
  Poly1D d = p.derivative();
  for (auto& c : d.coeffs) c = -c;
  return d;
}

PeriodicCoefficientSet parse_coefficients(const json& v, const std::string& source) {
  if (!v.is_object()) fail(source, "\"coefficients\" must be an object");
  PeriodicCoefficientSet s;
  s.period = number_or(v, "period", 1.0);
  if (v.contains("preset")) {
    const std::string preset = v["preset"].get<std::string>();
    if (preset != "langevin") fail(source, "unknown coefficient preset \"" + preset + "\"");
    const Poly1D V = parse_poly(member(v, "V", source), "V", source);
    const TrigPoly1D Q = parse_trig(member(v, "Q", source), s.period, "Q", source);
    const double D = number(v, "D", source);
    if (!(D > 0.0)) fail(source, "langevin preset needs D > 0");
    s.b = CoefficientField::of_y(negated_derivative(Q));
    s.c = CoefficientField::of_x(negated_derivative(V), s.period);
    s.sigma = CoefficientField::constant(std::sqrt(2.0 * D), s.period);
    s.psi = CoefficientField::constant(0.0, s.period);
    s.psi_limit = CoefficientField::constant(0.0, s.period);
    return s;
  }
  s.b = parse_field(member(v, "b", source), s.period, "b", source);
  s.c = parse_field(member(v, "c", source), s.period, "c", source);
  s.sigma = parse_field(member(v, "sigma", source), s.period, "sigma", source);
  s.psi = v.contains("psi") ? parse_field(v["psi"], s.period, "psi", source)
                            : CoefficientField::constant(0.0, s.period);
  s.psi_limit = v.contains("psi_limit")
                    ? parse_field(v["psi_limit"], s.period, "psi_limit", source)
                    : CoefficientField::constant(0.0, s.period);
  return s;
}

ExitProblemSpec parse_interval(const json& v, const std::string& source) {
  if (!v.is_object()) fail(source, "\"interval\" must be an object");
  ExitProblemSpec e;
  e.lower = number(v, "lower", source);
  e.upper = number(v, "upper", source);
  if (v.contains("rare")) {
    const std::string rare = v["rare"].get<std::string>();
    if (rare == "upper")
      e.rare_endpoint = ExitProblemSpec::Rare::upper;
    else if (rare == "lower")
      e.rare_endpoint = ExitProblemSpec::Rare::lower;
    else
      fail(source, "interval \"rare\" must be \"upper\" or \"lower\"");
  }
  return e;
}

InitialLaw parse_initial_law(const json& v, const std::string& source) {
  if (!v.is_object()) fail(source, "\"initial_law\" must be an object");
  InitialLaw law;
  const std::string kind = member(v, "kind", source).get<std::string>();
  if (kind == "none") {
    law.kind = InitialLaw::Kind::none;
  } else if (kind == "point") {
    law.kind = InitialLaw::Kind::point;
    law.value = number(v, "value", source);
  } else if (kind == "gaussian") {
    law.kind = InitialLaw::Kind::gaussian;
    law.value = number(v, "value", source);
    law.stddev = number(v, "stddev", source);
  } else {
    fail(source, "initial law kind must be none, point, or gaussian");
  }
  return law;
}

GridSpec parse_grid(const json& v, const char* key, const std::string& source) {
  if (!v.is_object()) fail(source, std::string("\"") + key + "\" must be {lo, hi, n}");
  GridSpec g;
  g.lo = number(v, "lo", source);
  g.hi = number(v, "hi", source);
  g.n = static_cast<int>(number(v, "n", source));
  return g;
}

DtPolicy parse_dt(const json& v, const std::string& source) {
  if (!v.is_object()) fail(source, "\"dt\" must be {value} or {auto, resolution_factor}");
  DtPolicy p;
  if (v.contains("value")) {
    p.auto_scaled = false;
    p.value = v["value"].get<double>();
  } else {
    p.auto_scaled = true;
    if (v.contains("auto") && !v["auto"].get<bool>())
      fail(source, "\"dt\" needs either a value or auto=true");
  }
  p.resolution_factor = number_or(v, "resolution_factor", 0.1);
  return p;
}

DeltaPolicy parse_delta_policy(const json& v, const std::string& source) {
  if (!v.is_object()) fail(source, "\"delta\" must be {value} or {epsilon_power, cap}");
  DeltaPolicy p;
  if (v.contains("value")) {
    p.explicit_value = true;
    p.value = v["value"].get<double>();
  } else {
    p.epsilon_power = number(v, "epsilon_power", source);
    p.cap = number_or(v, "cap", kInf);
  }
  return p;
}

RoughPotentialSpec parse_rough(const json& v, const std::string& source, DeltaPolicy* delta) {
  if (!v.is_object()) fail(source, "\"rough\" must be an object");
  RoughPotentialSpec r;
  const double period = number_or(v, "period", 1.0);
  r.V = parse_poly(member(v, "V", source), "V", source);
  r.Q = parse_trig(member(v, "Q", source), period, "Q", source);
  r.D = number(v, "D", source);
  r.interval = parse_interval(member(v, "interval", source), source);
  r.x0 = number(v, "x0", source);
  *delta = parse_delta_policy(member(v, "delta", source), source);
  return r;
}

void parse_checks(const json& v, const std::string& source, CheckTolerances* out) {
  if (!v.is_object()) fail(source, "\"checks\" must be an object");
  out->variance_rel = number_or(v, "variance_rel", out->variance_rel);
  out->mean_sigmas = number_or(v, "mean_sigmas", out->mean_sigmas);
  out->ks_factor = number_or(v, "ks_factor", out->ks_factor);
  out->mean_abs = number_or(v, "mean_abs", out->mean_abs);
  out->min_rare_fraction = number_or(v, "min_rare_fraction", out->min_rare_fraction);
}

void parse_tolerances(const json& v, const std::string& source, Tolerances* out) {
  if (!v.is_object()) fail(source, "\"tolerances\" must be an object");
  out->residual = number_or(v, "residual", out->residual);
  out->normalization = number_or(v, "normalization", out->normalization);
  out->transversality_floor = number_or(v, "transversality_floor", out->transversality_floor);
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& source) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) fail(source, "unknown key \"" + it.key() + "\"");
  }
}

json parse_document(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(source, std::string("parse error: ") + e.what());
  }
}

ExperimentKind kind_from_string(const std::string& s, const std::string& source) {
  if (s == "fluctuation") return ExperimentKind::fluctuation;
  if (s == "exit") return ExperimentKind::exit_law;
  if (s == "conditional_exit") return ExperimentKind::conditional_exit;
  if (s == "homogenize_only") return ExperimentKind::homogenize_only;
  fail(source, "unknown kind \"" + s + "\"");
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("config file not found: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

std::string config_hash_hex(const std::string& canonical_text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : canonical_text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& source) {
  const json j = parse_document(text, source);
  if (!j.is_object()) fail(source, "top level must be an object");

  ExperimentConfig cfg;
  try {
    cfg.kind = kind_from_string(member(j, "kind", source).get<std::string>(), source);
    reject_unknown_keys(j, {"kind", "label", "master_seed", "n_paths", "epsilons", "dt", "regime",
                            "coefficients", "x0", "horizon", "time", "initial_law", "x_grid",
                            "fast_grid_n", "interval", "rough", "checks", "tolerances", "output"},
                        source);
    cfg.label = j.contains("label") ? j["label"].get<std::string>() : "";
    cfg.config_hash = config_hash_hex(j.dump());
    cfg.master_seed = j.contains("master_seed") ? j["master_seed"].get<std::uint64_t>() : 0;
    cfg.n_paths = j.contains("n_paths") ? j["n_paths"].get<long long>() : 0;
    cfg.epsilons = number_array(j, "epsilons", source);
    if (j.contains("dt")) cfg.dt = parse_dt(j["dt"], source);
    if (j.contains("checks")) parse_checks(j["checks"], source, &cfg.checks);
    if (j.contains("tolerances")) parse_tolerances(j["tolerances"], source, &cfg.tol);
    if (j.contains("output")) {
      const json& out = j["output"];
      if (!out.is_object()) fail(source, "\"output\" must be an object");
      if (out.contains("samples_csv")) cfg.want_samples_csv = out["samples_csv"].get<bool>();
    }

    if (cfg.kind == ExperimentKind::conditional_exit) {
      cfg.rough = parse_rough(member(j, "rough", source), source, &cfg.rough_delta);
    } else {
      const json& reg = member(j, "regime", source);
      cfg.regime.delta_exponent = number(reg, "delta_exponent", source);
      cfg.regime.gamma = exponent_or_inf(reg, "gamma");
      cfg.regime.a1 = exponent_or_inf(reg, "a1");
      cfg.regime.a2 = exponent_or_inf(reg, "a2");
      cfg.coeffs = parse_coefficients(member(j, "coefficients", source), source);
      cfg.x_grid = parse_grid(member(j, "x_grid", source), "x_grid", source);
      cfg.fast_grid_n = static_cast<int>(number_or(j, "fast_grid_n", 256));
      cfg.x0 = number_or(j, "x0", 0.0);
      cfg.horizon = number_or(j, "horizon", 0.0);
      cfg.time = number_or(j, "time", 0.0);
      if (j.contains("initial_law")) cfg.xi0 = parse_initial_law(j["initial_law"], source);
      if (cfg.kind == ExperimentKind::exit_law)
        cfg.interval = parse_interval(member(j, "interval", source), source);
    }
  } catch (const json::exception& e) {
    fail(source, e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(read_file(path), path);
}

ScaleSpeedConfig parse_scale_speed_config(const std::string& text, const std::string& source) {
  const json j = parse_document(text, source);
  if (!j.is_object()) fail(source, "top level must be an object");

  ScaleSpeedConfig cfg;
  try {
    const std::string kind = member(j, "kind", source).get<std::string>();
    if (kind != "scale_speed") fail(source, "expected kind \"scale_speed\", got \"" + kind + "\"");
    reject_unknown_keys(j, {"kind", "label", "V", "Q", "D", "period", "epsilon", "deltas", "grid"},
                        source);
    cfg.label = j.contains("label") ? j["label"].get<std::string>() : "";
    cfg.config_hash = config_hash_hex(j.dump());
    cfg.period = number_or(j, "period", 1.0);
    cfg.V = parse_poly(member(j, "V", source), "V", source);
    cfg.Q = parse_trig(member(j, "Q", source), cfg.period, "Q", source);
    cfg.D = number(j, "D", source);
    cfg.epsilon = number(j, "epsilon", source);
    cfg.deltas = number_array(j, "deltas", source);
    cfg.grid = parse_grid(member(j, "grid", source), "grid", source);
  } catch (const json::exception& e) {
    fail(source, e.what());
  }
  cfg.validate();
  return cfg;
}

ScaleSpeedConfig load_scale_speed_config(const std::string& path) {
  return parse_scale_speed_config(read_file(path), path);
}

}  // namespace msexit
