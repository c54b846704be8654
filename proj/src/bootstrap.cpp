#include "psce/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "psce/error.hpp"
#include "psce/rng.hpp"

namespace psce {

namespace {

// Fitting and numerical failures on a resample are tolerated; anything
// else (bad configuration, programming errors) is not.
std::optional<std::vector<double>> run_replicate(const Dataset& ds,
                                                 const Estimator& estimator,
                                                 std::uint64_t seed,
                                                 std::size_t b) {
  const auto rows = resample_indices(ds.n(), seed, b);
  try {
    return estimator(take_rows(ds, rows));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw;
    return std::nullopt;
  }
}

void check_args(int B, double alpha) {
  if (B < 2) throw Error(ErrorCode::InvalidConfig, "bootstrap needs B >= 2");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "alpha must lie in (0, 1)");
  }
}

BootstrapResult summarize(std::vector<double> point,
                          std::vector<std::optional<std::vector<double>>> reps,
                          int B, double alpha) {
  BootstrapResult r;
  r.B = B;
  r.alpha = alpha;
  r.point = std::move(point);
  const std::size_t m = r.point.size();
  for (auto& rep : reps) {
    if (!rep) {
      ++r.failed_replicates;
    } else if (rep->size() != m) {
      throw Error(ErrorCode::DimensionMismatch, "replicate length");
    } else {
      r.replicates.push_back(std::move(*rep));
    }
  }
  if (static_cast<double>(r.failed_replicates) > kMaxFailureShare * B) {
    throw Error(ErrorCode::TooManyFailures,
                std::to_string(r.failed_replicates) + " of " +
                    std::to_string(B) + " bootstrap replicates failed");
  }
  const std::size_t ok = r.replicates.size();
  r.se.assign(m, 0.0);
  r.lo.assign(m, 0.0);
  r.hi.assign(m, 0.0);
  std::vector<double> col;
  col.reserve(ok);
  for (std::size_t j = 0; j < m; ++j) {
    // Non-finite entries mark components the estimator could not produce on
    // that resample; they are left out of this component only.
    col.clear();
    for (std::size_t b = 0; b < ok; ++b) {
      const double v = r.replicates[b][j];
      if (std::isfinite(v)) col.push_back(v);
    }
    const std::size_t k = col.size();
    if (k == 0) {
      r.se[j] = r.lo[j] = r.hi[j] = std::nan("");
      continue;
    }
    // Shifted by the first value so a constant column has exactly zero spread.
    double mean = 0.0;
    for (double v : col) mean += v - col[0];
    mean /= static_cast<double>(k);
    double ss = 0.0;
    for (double v : col) ss += (v - col[0] - mean) * (v - col[0] - mean);
    r.se[j] = k > 1 ? std::sqrt(ss / static_cast<double>(k - 1)) : 0.0;
    std::sort(col.begin(), col.end());
    r.lo[j] = quantile_sorted(col, alpha / 2.0);
    r.hi[j] = quantile_sorted(col, 1.0 - alpha / 2.0);
  }
  return r;
}

}  // namespace

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) return std::nan("");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed,
                                          std::size_t b) {
  auto gen = substream(seed, b);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = pick(gen);
  return rows;
}

BootstrapResult bootstrap(const Dataset& ds, const Estimator& estimator, int B,
                          double alpha, std::uint64_t seed) {
  check_args(B, alpha);
  auto point = estimator(ds);
  std::vector<std::optional<std::vector<double>>> reps(static_cast<std::size_t>(B));
  std::optional<Error> fatal;
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < B; ++b) {
    try {
      reps[b] = run_replicate(ds, estimator, seed, static_cast<std::size_t>(b));
    } catch (const Error& e) {
#pragma omp critical(psce_bootstrap_fatal)
      if (!fatal) fatal = e;
    }
  }
  if (fatal) throw *fatal;
  return summarize(std::move(point), std::move(reps), B, alpha);
}

BootstrapResult bootstrap_serial(const Dataset& ds, const Estimator& estimator,
                                 int B, double alpha, std::uint64_t seed) {
  check_args(B, alpha);
  auto point = estimator(ds);
  std::vector<std::optional<std::vector<double>>> reps(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    reps[b] = run_replicate(ds, estimator, seed, static_cast<std::size_t>(b));
  }
  return summarize(std::move(point), std::move(reps), B, alpha);
}

}  // namespace psce
