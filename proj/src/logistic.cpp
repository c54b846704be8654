#include "psce/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "psce/error.hpp"
#include "standardize.hpp"

namespace psce {

namespace {

double sigmoid(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

struct NewtonState {
  double ll = 0.0;
  Eigen::VectorXd grad;  // empirical-mean scale
  Eigen::MatrixXd info;
};

// Log-likelihood, score and information at b in one pass over the rows.
NewtonState evaluate(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& b, double inv_n) {
  const Eigen::VectorXd eta = x * b;
  const Eigen::Index n = eta.size();
  Eigen::VectorXd resid(n), w(n);
  NewtonState st;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = std::exp(-std::abs(eta[i]));
    const double p = eta[i] >= 0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
    st.ll += y[i] * eta[i] - (std::max(eta[i], 0.0) + std::log1p(e));
    resid[i] = y[i] - p;
    w[i] = p * (1.0 - p);
  }
  st.grad = x.transpose() * resid * inv_n;
  const Eigen::MatrixXd xw = x.array().colwise() * w.array();
  st.info = x.transpose() * xw * inv_n;
  return st;
}

}  // namespace

double FittedLogistic::linear_predictor(std::span<const double> x) const {
  if (x.size() != input_dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(input_dim) + " got " +
                    std::to_string(x.size()));
  }
  double eta = 0.0;
  for (std::size_t k = 0; k < columns.size(); ++k) {
    eta += coef[static_cast<Eigen::Index>(k)] * x[columns[k]];
  }
  return eta;
}

std::vector<int> model_columns(const Dataset& ds,
                               const CovariateList& covariates) {
  std::vector<int> cols{0};
  if (!covariates) {
    for (std::size_t j = 1; j < ds.dim(); ++j) cols.push_back(static_cast<int>(j));
    return cols;
  }
  for (int c : *covariates) {
    if (c < 0 || static_cast<std::size_t>(c) >= ds.num_covariates()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "covariate index " + std::to_string(c) + " out of range");
    }
    cols.push_back(c + 1);
  }
  return cols;
}

FittedLogistic fit_logistic(const Eigen::MatrixXd& design,
                            std::span<const double> y,
                            const LogisticOptions& options) {
  const Eigen::Index n = design.rows();
  if (n == 0 || static_cast<Eigen::Index>(y.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "design/response size");
  }
  const double ysum = std::accumulate(y.begin(), y.end(), 0.0);
  if (ysum <= 0.0 || ysum >= static_cast<double>(n)) {
    throw Error(ErrorCode::DegenerateResponse,
                ysum <= 0.0 ? "all responses are 0" : "all responses are 1");
  }

  const Standardizer st = options.standardize
                              ? Standardizer::fit(design, /*skip_first=*/true)
                              : Standardizer::identity(design.cols());
  const Eigen::MatrixXd xs = st.apply(design);
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  const Eigen::Index k = xs.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  FittedLogistic fit;
  NewtonState cur = evaluate(xs, yv, b, inv_n);
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    fit.iterations = iter;
    Eigen::MatrixXd info = cur.info;
    // Columns removed by the standardizer are exactly zero.
    for (Eigen::Index j = 0; j < k; ++j) {
      if (info(j, j) <= 0.0) info(j, j) = 1.0;
    }
    const Eigen::VectorXd step = info.ldlt().solve(cur.grad);
    // Under quasi-separation the gradient fades while Newton steps stay large.
    if (cur.grad.cwiseAbs().maxCoeff() <= options.tolerance &&
        step.cwiseAbs().maxCoeff() <= options.step_tolerance) {
      fit.converged = true;
      break;
    }
    if (iter == options.max_iterations) break;

    double t = 1.0;
    Eigen::VectorXd cand = b + step;
    NewtonState next = evaluate(xs, yv, cand, inv_n);
    for (int h = 0; h < 40 && !(next.ll >= cur.ll - 1e-12 * std::abs(cur.ll));
         ++h) {
      t *= 0.5;
      cand = b + t * step;
      next = evaluate(xs, yv, cand, inv_n);
    }
    b = cand;
    cur = std::move(next);
    if (b.cwiseAbs().maxCoeff() > options.divergence_bound) {
      throw Error(ErrorCode::Separation,
                  "coefficients diverge past |" +
                      std::to_string(options.divergence_bound) +
                      "| (monotone likelihood)");
    }
  }
  fit.coef = st.to_original(b);
  return fit;
}

FittedLogistic fit_logistic(const Dataset& ds, Response response,
                            RowFilter filter, const CovariateList& covariates,
                            const LogisticOptions& options) {
  const auto cols = model_columns(ds, covariates);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (filter.keep(ds, i)) rows.push_back(i);
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyCell, "no rows for logistic fit");
  Eigen::MatrixXd design(rows.size(), cols.size());
  std::vector<double> y(rows.size());
  const auto& resp = response == Response::Z ? ds.z() : ds.s();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      design(r, c) = ds.x()(rows[r], cols[c]);
    }
    y[r] = resp[rows[r]];
  }
  FittedLogistic fit = fit_logistic(design, y, options);
  fit.columns = cols;
  fit.input_dim = ds.dim();
  return fit;
}

double predict_prob(const FittedLogistic& m, std::span<const double> x) {
  return std::clamp(sigmoid(m.linear_predictor(x)), kProbClamp,
                    1.0 - kProbClamp);
}

std::vector<double> predict_prob(const FittedLogistic& m, const Dataset& ds) {
  if (ds.dim() != m.input_dim) {
    throw Error(ErrorCode::DimensionMismatch, "dataset dimension");
  }
  std::vector<double> out(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) {
    double eta = 0.0;
    for (std::size_t k = 0; k < m.columns.size(); ++k) {
      eta += m.coef[static_cast<Eigen::Index>(k)] * ds.x()(i, m.columns[k]);
    }
    out[i] = std::clamp(sigmoid(eta), kProbClamp, 1.0 - kProbClamp);
  }
  return out;
}

}  // namespace psce
