#pragma once

#include <string>

#include "json.hpp"
#include "msexit/harness.hpp"
#include "msexit/homogenize.hpp"

namespace msexit {

// Key order is fixed and wall_time_s is the last top-level key on its own
// line, so reports from identical runs differ in exactly that line.
nlohmann::ordered_json report_to_json(const EnsembleReport& report);
nlohmann::ordered_json report_to_json(const ScaleSpeedReport& report);

// Model document: x grid, tabulated averages, fast-grid metadata, tolerances,
// worst-case residuals.  Contains nothing seed-dependent.
nlohmann::ordered_json model_to_json(const HomogenizedModel& model);

// One grep-able line per check: "PASS <name> eps=<v> value=<x> bound=<y>".
std::string render_pass_fail_lines(const EnsembleReport& report);
std::string render_pass_fail_lines(const ScaleSpeedReport& report);

// Normalized samples, one column per epsilon, %.17g, ',' separator, LF lines.
// The first line carries the config hash, the second the column headers.
std::string render_samples_csv(const EnsembleReport& report);
// delta, sup_u, sup_v rows for the scale-function sweep.
std::string render_samples_csv(const ScaleSpeedReport& report);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace msexit
