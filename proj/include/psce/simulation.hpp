#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "psce/dataset.hpp"
#include "psce/estimators.hpp"
#include "psce/strata.hpp"

namespace psce {

// Data-generating process. xi1 tilts the complier survival under Z=1 by
// eps_1(t) = exp(xi1 t / t_max) relative to always-takers; zeta adds defiers
// with P(d|X) = zeta P(c|X). Both zero gives the reference design.
struct DgpSpec {
  Design design = Design::observational();
  double xi1 = 0.0;
  double zeta = 0.0;
  double t_max = 5.0;
};

inline constexpr std::size_t kSimCovariates = 5;

// True working-model quantities; x holds X1..X5 (no intercept).
double true_propensity(const DgpSpec& dgp, std::span<const double> x);
double true_receipt(int z, std::span<const double> x);
double true_hazard(int z, int s, std::span<const double> x);
double true_censoring_hazard(std::span<const double> x);
// Stratum probabilities (e_a, e_c, e_n, e_d) under the spec's zeta.
std::array<double, 4> true_strata(const DgpSpec& dgp, std::span<const double> x);

Dataset simulate_dataset(std::size_t n, const Design& design, std::uint64_t seed);
Dataset simulate_dataset(std::size_t n, const DgpSpec& dgp, std::uint64_t seed);

inline constexpr std::size_t kOracleDraws = 10'000'000;

// S_{z,g}(u) = E[e_g(X) S_{z,g}(u|X)] / E[e_g(X)] by Monte Carlo over X.
struct OracleTable {
  std::vector<double> times;
  std::size_t draws = 0;
  std::uint64_t seed = 0;
  // value[z][g][k], g ordered a, c, n, d
  std::array<std::array<std::vector<double>, 4>, 2> value;

  double at(int z, Stratum g, std::size_t k) const;
  double at(int z, Stratum g, double u) const;
};

OracleTable compute_oracle(const DgpSpec& dgp, std::span<const double> times,
                           std::size_t draws = kOracleDraws,
                           std::uint64_t seed = 20240601);

// Reads the table from `path` when it matches times, draws, seed and DGP;
// otherwise computes and writes it.
OracleTable cached_oracle(const std::string& path, const DgpSpec& dgp,
                          std::span<const double> times,
                          std::size_t draws = kOracleDraws,
                          std::uint64_t seed = 20240601);

// Reference-design truth with the default draw count (computed once per
// process and time point).
double oracle_truth(Stratum g, int z, double u);

struct ScenarioFlags {
  bool pi = true, e = true, T = true, C = true;
  std::string label() const;  // e.g. "TTFT" in (pi, e, T, C) order
};

// Scenarios 1..8 of the misspecification matrix.
ScenarioFlags scenario_flags(int id);

// Misspecified working models use X1..X3 only.
ModelSpec model_spec(const ScenarioFlags& flags);

struct ScenarioSpec {
  int id = 1;
  ScenarioFlags flags;
  DgpSpec dgp;
  std::size_t n = 1000;
  std::size_t reps = 500;
  std::uint64_t seed = 1;
  int bootstrap_B = 500;  // 0 disables coverage
  double alpha = 0.05;
  std::vector<double> times{1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<Method> methods{Method::sr1, Method::sr2, Method::sr3, Method::mr};
  // Zero keeps the standard model; set to evaluate the sensitivity-corrected
  // estimators at the true parameter.
  double eval_xi1 = 0.0;
  double eval_zeta = 0.0;
  std::vector<Stratum> strata{Stratum::a, Stratum::c, Stratum::n};

  static ScenarioSpec scenario(int id, const Design& design = Design::observational());
};

enum class Estimand { S1, S0, Delta };

struct ScenarioRow {
  int scenario = 0;
  std::string flags;
  Method method = Method::mr;
  Stratum stratum = Stratum::c;
  Estimand estimand = Estimand::S0;
  double u = 0.0;
  double truth = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  double mc_se = 0.0;  // standard deviation of the estimates across reps
  double coverage = std::nan("");
  std::size_t reps_used = 0;
  std::size_t reps_covered = 0;  // reps with a usable bootstrap interval
};

struct ScenarioReport {
  ScenarioSpec spec;
  std::vector<ScenarioRow> rows;
  std::size_t failed_reps = 0;

  const ScenarioRow& row(Method m, Stratum g, Estimand e, double u) const;
};

std::string estimand_name(Estimand e, Stratum g);

// Per-replicate estimates, laid out method-major then stratum, estimand
// (S1, S0, Delta) and time; exposed so bootstrap and Monte Carlo share it.
std::vector<double> scenario_estimates(const ScenarioSpec& spec,
                                       const Dataset& ds);

// Replications run in parallel; the serial variant is the reference.
ScenarioReport run_scenario(const ScenarioSpec& spec,
                            const OracleTable* oracle = nullptr);
ScenarioReport run_scenario_serial(const ScenarioSpec& spec,
                                   const OracleTable* oracle = nullptr);

void write_report_csv(const std::vector<ScenarioReport>& reports,
                      std::ostream& out);
std::string format_report_table(const std::vector<ScenarioReport>& reports);

}  // namespace psce
