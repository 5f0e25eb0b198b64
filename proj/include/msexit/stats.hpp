#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "msexit/sde.hpp"

namespace msexit {

// Streaming count/sum/sum-of-squares moments.  merge is associative, so any
// partition of a path range folded back in path-index order reproduces the
// single-pass numbers bit for bit.  Callers should center large offsets
// before accumulating (the harness feeds normalized samples).
struct MomentAccumulator {
  std::uint64_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void add(double x);
  void merge(const MomentAccumulator& other);

  double mean() const;      // StatError on an empty sample
  double variance() const;  // unbiased; StatError below two samples
  double stddev() const;
  double mean_se() const;  // stddev/sqrt(count)
};

double normal_cdf(double z);

// Two-sided Kolmogorov-Smirnov distance against a reference CDF.  Below 50
// samples the asymptotic bands quoted in reports are meaningless, so that is
// a statistical error.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

// Exit times normalized as (tau - T)/beta, with endpoint tallies.
struct ExitSummary {
  std::vector<double> normalized;
  MomentAccumulator moments;
  std::uint64_t n_upper = 0;
  std::uint64_t n_lower = 0;
};

ExitSummary summarize_exit(const std::vector<ExitRecord>& records, double T, double beta);

}  // namespace msexit
