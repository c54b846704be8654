#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "psce/dataset.hpp"
#include "psce/logistic.hpp"

namespace psce {

enum class CoxTarget { Outcome, Censoring };

struct CoxOptions {
  double tolerance = 1e-8;  // score max-norm, empirical-mean scale
  double step_tolerance = 1e-4;  // pending Newton step, standardized scale
  int max_iterations = 100;
  double divergence_bound = 30.0;
  bool standardize = true;
};

// Cox proportional hazards fit with a Breslow baseline. Internal sign
// convention: S(u|x) = exp(-Lambda0(u) * exp(+coef' x)).
struct FittedCox {
  Eigen::VectorXd coef;          // aligned with `columns`
  std::vector<int> columns;      // dataset columns (never the intercept)
  std::size_t input_dim = 0;
  std::vector<double> baseline_times;       // strictly increasing
  std::vector<double> baseline_increments;  // Breslow jumps, x = 0
  std::vector<double> cumulative;           // running sums of the jumps
  int cell_z = 0;
  int cell_s = 0;
  CoxTarget target = CoxTarget::Outcome;
  bool converged = false;
  int iterations = 0;

  // Lambda0(t), right-continuous, flat past the last jump.
  double cumhaz(double t) const;
  // Lambda0(t-), the value just before any jump at t.
  double cumhaz_left(double t) const;
  double linear_predictor(std::span<const double> x) const;
  double risk_score(std::span<const double> x) const;
};

// Partial-likelihood fit inside the cell (Z=z, S=s). The censoring target
// treats delta = 0 as its event. An empty covariate list fits the
// covariate-free Breslow (Nelson-Aalen) baseline.
FittedCox fit_cox(const Dataset& ds, int z, int s, CoxTarget target,
                  const CovariateList& covariates = std::nullopt,
                  const CoxOptions& options = {});

// Core fitter on explicit data; `design` has no intercept column.
FittedCox fit_cox(const Eigen::MatrixXd& design, std::span<const double> time,
                  std::span<const int> event, const CoxOptions& options = {});

// Log partial likelihood (Breslow ties) at `coef`; exposed for tests.
double cox_log_partial_likelihood(const Eigen::MatrixXd& design,
                                  std::span<const double> time,
                                  std::span<const int> event,
                                  const Eigen::VectorXd& coef);

// exp(-Lambda0(u) exp(coef' x)), x a full dataset row.
double survival_at(const FittedCox& m, double u, std::span<const double> x);

inline constexpr double kCensorSurvivalFloor = 1e-4;
inline constexpr double kOutcomeSurvivalFloor = 1e-10;

// int_0^u dM^C(r|X) / (S(r-|X) S^C(r-|X)) for one subject, with
// dM^C = dN^C - 1(U >= r) dLambda^C(r|X).
double censoring_martingale_integral(const FittedCox& censor,
                                     const FittedCox& outcome,
                                     const SubjectRecord& rec, double u);

// Precomputed censoring-jump table for one (outcome, censoring) model pair,
// used to evaluate the censoring-augmented survival indicator
//   1(U >= u)/S^C(u|X) + S(u|X) * int_0^u dM^C / (S S^C)
// on a grid of u in one pass per subject. Survival floors match
// censoring_martingale_integral.
class CensoringAugmentation {
 public:
  CensoringAugmentation(const FittedCox& outcome, const FittedCox& censor);

  // `grid` must be nondecreasing; writes one value per grid point.
  void evaluate(std::span<const double> grid, std::span<const double> x,
                double u_obs, int delta, std::span<double> out) const;

 private:
  const FittedCox* outcome_;
  const FittedCox* censor_;
  std::vector<double> jump_time_;
  std::vector<double> jump_c_;     // Lambda^C_0 increment
  std::vector<double> lt_left_;    // Lambda_0(r-) of the outcome model
  std::vector<double> lc_left_;    // Lambda^C_0(r-)
};

}  // namespace psce
