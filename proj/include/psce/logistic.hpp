#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "psce/dataset.hpp"

namespace psce {

inline constexpr double kProbClamp = 1e-6;

struct LogisticOptions {
  double tolerance = 1e-8;  // gradient max-norm, empirical-mean scale
  double step_tolerance = 1e-4;  // pending Newton step, standardized scale
  int max_iterations = 100;
  double divergence_bound = 30.0;  // |coef| on the standardized scale
  bool standardize = true;
};

// Logistic working model. `coef` is on the original covariate scale and is
// aligned with `columns`, the dataset columns used (0 is the intercept).
struct FittedLogistic {
  Eigen::VectorXd coef;
  std::vector<int> columns;
  std::size_t input_dim = 0;  // expected length of a full covariate row
  bool converged = false;
  int iterations = 0;

  double linear_predictor(std::span<const double> x) const;
};

enum class Response { Z, S };

struct RowFilter {
  std::optional<int> z;
  std::optional<int> s;
  bool keep(const Dataset& ds, std::size_t i) const {
    return (!z || ds.z()[i] == *z) && (!s || ds.s()[i] == *s);
  }
};

// Covariates entering a working model, as 0-based positions among the named
// covariates. nullopt selects all of them; an empty list keeps only the
// intercept (logistic) or fits no coefficients (Cox).
using CovariateList = std::optional<std::vector<int>>;

// Dataset columns for a working model: the intercept followed by the
// selected covariates.
std::vector<int> model_columns(const Dataset& ds, const CovariateList& covariates);

// Bernoulli MLE by Newton-Raphson with step-halving.
FittedLogistic fit_logistic(const Dataset& ds, Response response,
                            RowFilter filter = {},
                            const CovariateList& covariates = std::nullopt,
                            const LogisticOptions& options = {});

// Core fitter on an explicit design matrix; column 0 must be the intercept.
FittedLogistic fit_logistic(const Eigen::MatrixXd& design,
                            std::span<const double> y,
                            const LogisticOptions& options = {});

// logistic(coef' x) clamped to [1e-6, 1 - 1e-6]; x is a full dataset row.
double predict_prob(const FittedLogistic& m, std::span<const double> x);
std::vector<double> predict_prob(const FittedLogistic& m, const Dataset& ds);

}  // namespace psce
