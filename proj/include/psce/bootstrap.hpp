#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "psce/dataset.hpp"

namespace psce {

inline constexpr double kMaxFailureShare = 0.05;

// Maps a dataset to a fixed-length vector of estimates. It must refit every
// working model from its argument and must not touch shared state.
using Estimator = std::function<std::vector<double>(const Dataset&)>;

struct BootstrapResult {
  int B = 0;
  double alpha = 0.05;
  std::size_t failed_replicates = 0;
  std::vector<double> point;  // estimator on the original data
  // Per component over its finite replicate values; NaN when there are none.
  std::vector<double> se;     // replicate standard deviation
  std::vector<double> lo, hi;  // alpha/2 and 1 - alpha/2 percentiles
  std::vector<std::vector<double>> replicates;  // successful ones, in order
};

// Type-7 sample quantile of an ascending sample.
double quantile_sorted(std::span<const double> sorted, double p);

// Row indices of resample `b`: n draws with replacement.
std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed,
                                          std::size_t b);

// Replicates run in parallel; bootstrap_serial is the reference.
BootstrapResult bootstrap(const Dataset& ds, const Estimator& estimator, int B,
                          double alpha, std::uint64_t seed);
BootstrapResult bootstrap_serial(const Dataset& ds, const Estimator& estimator,
                                 int B, double alpha, std::uint64_t seed);

}  // namespace psce
