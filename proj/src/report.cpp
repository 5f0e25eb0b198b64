#include "msexit/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

namespace msexit {

namespace {

using nlohmann::ordered_json;

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string g6(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

ordered_json checks_json(const std::vector<CheckLine>& checks) {
  ordered_json arr = ordered_json::array();
  for (const auto& c : checks)
    arr.push_back({{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"pass", c.pass}});
  return arr;
}

ordered_json tolerances_json(const Tolerances& tol) {
  return {{"residual", tol.residual},
          {"normalization", tol.normalization},
          {"transversality_floor", tol.transversality_floor}};
}

ordered_json block_json(const EnsembleReport& report, const EpsilonBlock& blk) {
  ordered_json j;
  j["epsilon"] = blk.epsilon;
  j["delta"] = blk.delta;
  j["theta"] = blk.theta;
  j["beta"] = blk.beta;
  switch (report.kind) {
    case ExperimentKind::homogenize_only:
      j["residuals"] = {{"cell", blk.cell_residual},
                        {"aux", blk.aux_residual},
                        {"mu_normalization", blk.mu_normalization},
                        {"mu_min", blk.mu_min}};
      break;
    case ExperimentKind::fluctuation:
      j["dt"] = blk.dt;
      j["n_paths"] = blk.n_paths;
      j["time"] = blk.T;
      j["predicted"] = {{"mean", blk.predicted_mean}, {"variance", blk.predicted_variance}};
      j["sample"] = {{"mean", blk.sample_mean},
                     {"variance", blk.sample_variance},
                     {"mean_se", blk.mean_se},
                     {"variance_se", blk.variance_se}};
      j["ks"] = blk.ks;
      j["ks_band"] = blk.ks_band;
      break;
    case ExperimentKind::exit_law:
    case ExperimentKind::conditional_exit:
      j["dt"] = blk.dt;
      j["n_paths"] = blk.n_paths;
      j["T"] = blk.T;
      j["z"] = blk.z;
      if (report.kind == ExperimentKind::conditional_exit)
        j["rare_endpoint"] = blk.rare_endpoint;
      j["predicted"] = {{"mean", blk.predicted_mean}, {"variance", blk.predicted_variance}};
      j["sample"] = {{"mean", blk.sample_mean},
                     {"variance", blk.sample_variance},
                     {"mean_se", blk.mean_se},
                     {"variance_se", blk.variance_se}};
      j["ks"] = blk.ks;
      j["ks_band"] = blk.ks_band;
      j["exits"] = {{"upper", blk.n_upper}, {"lower", blk.n_lower}, {"none", blk.n_no_exit}};
      break;
  }
  j["checks"] = checks_json(blk.checks);
  return j;
}

}  // namespace

ordered_json report_to_json(const EnsembleReport& report) {
  ordered_json j;
  j["kind"] = kind_name(report.kind);
  j["label"] = report.label;
  j["config_hash"] = report.config_hash;
  j["master_seed"] = report.master_seed;
  j["tolerances"] = tolerances_json(report.tol);
  ordered_json blocks = ordered_json::array();
  for (const auto& blk : report.blocks) blocks.push_back(block_json(report, blk));
  j["blocks"] = blocks;
  j["all_pass"] = report.all_pass;
  j["wall_time_s"] = report.wall_time_s;
  return j;
}

ordered_json report_to_json(const ScaleSpeedReport& report) {
  ordered_json j;
  j["kind"] = "scale_speed";
  j["label"] = report.label;
  j["config_hash"] = report.config_hash;
  j["epsilon"] = report.epsilon;
  ordered_json blocks = ordered_json::array();
  for (const auto& blk : report.blocks)
    blocks.push_back({{"delta", blk.delta}, {"sup_u", blk.sup_u}, {"sup_v", blk.sup_v}});
  j["blocks"] = blocks;
  j["checks"] = checks_json(report.checks);
  j["all_pass"] = report.all_pass;
  j["wall_time_s"] = report.wall_time_s;
  return j;
}

ordered_json model_to_json(const HomogenizedModel& model) {
  ordered_json j;
  j["x_grid"] = model.x_grid;
  j["lambda"] = model.lambda_tab;
  j["q"] = model.q_tab;
  j["J"] = model.J_tab;
  j["Psi"] = model.Psi_tab;
  j["fast_grid"] = {{"period", model.fast_grid.period}, {"n_points", model.fast_grid.n_points}};
  const auto& r = model.regime;
  ordered_json rj;
  rj["regime_index"] = r.regime_index;
  rj["epsilon"] = r.epsilon;
  rj["delta_exponent"] = r.delta_exponent;
  rj["gamma"] = std::isfinite(r.gamma) ? ordered_json(r.gamma) : ordered_json(nullptr);
  rj["a1"] = std::isfinite(r.a1) ? ordered_json(r.a1) : ordered_json(nullptr);
  rj["a2"] = std::isfinite(r.a2) ? ordered_json(r.a2) : ordered_json(nullptr);
  rj["delta"] = r.delta;
  rj["theta"] = r.theta;
  rj["m"] = r.m;
  rj["ell"] = std::isfinite(r.ell) ? ordered_json(r.ell) : ordered_json(nullptr);
  rj["beta"] = r.beta;
  rj["zeta"] = r.zeta;
  j["regime"] = rj;
  j["tolerances"] = tolerances_json(model.tol);
  j["residuals"] = {{"cell", model.worst.cell_residual},
                    {"aux", model.worst.aux_residual},
                    {"mu_normalization", model.worst.mu_normalization},
                    {"mu_min", model.worst.mu_min},
                    {"centering", model.worst.centering_residual},
                    {"chi_mu_mean", model.worst.chi_mu_mean},
                    {"xi_mu_mean", model.worst.xi_mu_mean}};
  return j;
}

std::string render_pass_fail_lines(const EnsembleReport& report) {
  std::string out;
  for (const auto& blk : report.blocks) {
    if (report.kind == ExperimentKind::conditional_exit)
      out += "INFO rare_endpoint=" + blk.rare_endpoint + " eps=" + g6(blk.epsilon) + "\n";
    for (const auto& c : blk.checks) {
      out += (c.pass ? "PASS " : "FAIL ") + c.name + " eps=" + g6(blk.epsilon) +
             " value=" + g6(c.value) + " bound=" + g6(c.bound) + "\n";
    }
  }
  return out;
}

std::string render_pass_fail_lines(const ScaleSpeedReport& report) {
  std::string out;
  for (const auto& c : report.checks) {
    out += (c.pass ? "PASS " : "FAIL ") + c.name + " eps=" + g6(report.epsilon) +
           " value=" + g6(c.value) + " bound=" + g6(c.bound) + "\n";
  }
  return out;
}

std::string render_samples_csv(const EnsembleReport& report) {
  std::size_t longest = 0;
  for (const auto& blk : report.blocks) longest = std::max(longest, blk.samples.size());
  if (longest == 0) return {};

  std::string out = "# config " + report.config_hash + "\n";
  for (std::size_t b = 0; b < report.blocks.size(); ++b) {
    if (b) out += ',';
    out += "eps=" + g17(report.blocks[b].epsilon);
  }
  out += '\n';
  for (std::size_t i = 0; i < longest; ++i) {
    for (std::size_t b = 0; b < report.blocks.size(); ++b) {
      if (b) out += ',';
      if (i < report.blocks[b].samples.size()) out += g17(report.blocks[b].samples[i]);
    }
    out += '\n';
  }
  return out;
}

std::string render_samples_csv(const ScaleSpeedReport& report) {
  std::string out = "# config " + report.config_hash + "\n";
  out += "delta,sup_u,sup_v\n";
  for (const auto& blk : report.blocks)
    out += g17(blk.delta) + "," + g17(blk.sup_u) + "," + g17(blk.sup_v) + "\n";
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open for writing: " + path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw ConfigError("write failed: " + path);
}

}  // namespace msexit
