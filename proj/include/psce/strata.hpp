#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "psce/dataset.hpp"
#include "psce/logistic.hpp"

namespace psce {

inline constexpr double kStratumFloor = 1e-6;
inline constexpr double kBalanceThreshold = 0.2;

enum class Stratum { a, c, n, d };

const char* stratum_name(Stratum g);

// Per-subject and marginal principal-stratum quantities. e_d and ed_hat are
// zero unless the scores were built under a positive defier ratio zeta.
struct PrincipalScores {
  std::vector<double> p0x, p1x;
  std::vector<double> e_a, e_c, e_n, e_d;
  double p0_hat = 0.0;
  double p1_hat = 0.0;
  double ea_hat = 0.0, ec_hat = 0.0, en_hat = 0.0, ed_hat = 0.0;
  double zeta = 0.0;
  std::size_t truncations = 0;

  std::size_t n() const { return p0x.size(); }
  const std::vector<double>& score(Stratum g) const;
  double proportion(Stratum g) const;
};

// e_a = p0, e_c = p1 - p0, e_n = 1 - p1. A complier score below
// kStratumFloor is raised to the floor and the triple renormalized; each
// such subject adds to `truncations`. Marginals are left at zero.
PrincipalScores principal_scores(std::span<const double> p0x,
                                 std::span<const double> p1x);

struct ReceiptMarginals {
  double p0_hat = 0.0;
  double p1_hat = 0.0;
};

// Doubly robust P(S=1|Z=z): Pn[Z(S - p1(X))/pi(X) + p1(X)] and the control
// analogue.
ReceiptMarginals dr_marginal_pz(const Dataset& ds, std::span<const double> pi_x,
                                std::span<const double> p0x,
                                std::span<const double> p1x);
ReceiptMarginals dr_marginal_pz(const Dataset& ds, const FittedLogistic& prop,
                                const FittedLogistic& p0m,
                                const FittedLogistic& p1m);

// Fills the stratum proportions from the receipt marginals (zeta = 0).
void set_marginals(PrincipalScores& ps, const ReceiptMarginals& m);

struct StratumSummary {
  Stratum stratum;
  std::vector<double> mean, sd;  // one entry per named covariate
};

struct CovariateSummary {
  std::vector<std::string> covariates;
  std::vector<StratumSummary> strata;  // a, c, n (and d when zeta > 0)
  std::vector<double> max_asd;         // largest pairwise ASD per covariate
};

// |m1 - m0| / sqrt((s1^2 + s0^2)/2); 0 when both sds vanish.
double absolute_standardized_difference(double m1, double s1, double m0,
                                        double s0);

CovariateSummary strata_covariate_summary(const Dataset& ds,
                                          const PrincipalScores& ps);

struct BalanceRow {
  std::string covariate;
  double smd_c = 0.0, smd_n = 0.0, smd_a = 0.0;
};

struct BalanceTable {
  bool weighted = false;
  std::vector<BalanceRow> rows;
  std::size_t warnings = 0;  // covariates with a zero pooled sd
};

// Standardized mean differences between the observed cells that share a
// stratum: (1,1) vs (0,0) for c, (1,0) vs (0,0) for n, (1,1) vs (0,1) for a.
BalanceTable smd_balance(const Dataset& ds, const PrincipalScores& ps,
                         bool weighted);

}  // namespace psce
