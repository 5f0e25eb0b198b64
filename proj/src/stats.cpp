#include "msexit/stats.hpp"

#include <algorithm>
#include <cmath>

#include "msexit/common.hpp"

namespace msexit {

void MomentAccumulator::add(double x) {
  count += 1;
  sum += x;
  sum_sq += x * x;
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  count += other.count;
  sum += other.sum;
  sum_sq += other.sum_sq;
}

double MomentAccumulator::mean() const {
  if (count == 0) throw StatError("moment accumulator: mean of an empty sample");
  return sum / static_cast<double>(count);
}

double MomentAccumulator::variance() const {
  if (count < 2) throw StatError("moment accumulator: variance needs at least two samples");
  const double n = static_cast<double>(count);
  // clamp: sum_sq - sum^2/n can land a few ulp below zero for degenerate data
  return std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
}

double MomentAccumulator::stddev() const { return std::sqrt(variance()); }

double MomentAccumulator::mean_se() const {
  return stddev() / std::sqrt(static_cast<double>(count));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.size() < 50) throw StatError("ks statistic: need at least 50 samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double F = cdf(samples[i]);
    d = std::max(d, std::max(static_cast<double>(i + 1) / n - F,
                             F - static_cast<double>(i) / n));
  }
  return d;
}

ExitSummary summarize_exit(const std::vector<ExitRecord>& records, double T, double beta) {
  if (records.empty()) throw StatError("exit summary: no exit records");
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw ConfigError("exit summary: normalization beta must be positive");
  ExitSummary out;
  out.normalized.reserve(records.size());
  for (const ExitRecord& r : records) {
    const double z = (r.tau - T) / beta;
    out.normalized.push_back(z);
    out.moments.add(z);
    if (r.at_upper)
      out.n_upper += 1;
    else
      out.n_lower += 1;
  }
  return out;
}

}  // namespace msexit
