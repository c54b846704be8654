#include "psce/cox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "psce/error.hpp"
#include "psce/logistic.hpp"
#include "standardize.hpp"

namespace psce {

namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct PartialLikelihood {
  double loglik = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd info;
};

// `order` sorts subjects by ascending time. Risk sets are accumulated from
// the largest time downwards; tied times enter together (Breslow).
PartialLikelihood evaluate_pl(const RowMatrix& x, std::span<const double> time,
                              std::span<const int> event,
                              const std::vector<std::size_t>& order,
                              const Eigen::VectorXd& b, bool derivatives) {
  const Eigen::Index k = x.cols();
  const Eigen::VectorXd eta = x * b;
  const double shift = eta.size() ? eta.maxCoeff() : 0.0;

  PartialLikelihood out;
  if (derivatives) {
    out.score = Eigen::VectorXd::Zero(k);
    out.info = Eigen::MatrixXd::Zero(k, k);
  }
  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd xsum(k);

  std::size_t pos = order.size();
  while (pos > 0) {
    const double t = time[order[pos - 1]];
    std::size_t start = pos;
    while (start > 0 && time[order[start - 1]] == t) --start;
    int d = 0;
    double eta_sum = 0.0;
    xsum.setZero();
    for (std::size_t q = start; q < pos; ++q) {
      const auto i = static_cast<Eigen::Index>(order[q]);
      const double w = std::exp(eta[i] - shift);
      s0 += w;
      const double* xi = x.row(i).data();
      if (derivatives) {
        for (Eigen::Index a = 0; a < k; ++a) {
          const double wa = w * xi[a];
          s1[a] += wa;
          for (Eigen::Index c = 0; c <= a; ++c) s2(a, c) += wa * xi[c];
        }
      }
      if (event[order[q]]) {
        ++d;
        eta_sum += eta[i];
        if (derivatives) {
          for (Eigen::Index a = 0; a < k; ++a) xsum[a] += xi[a];
        }
      }
    }
    if (d > 0) {
      out.loglik += eta_sum - d * (std::log(s0) + shift);
      if (derivatives) {
        const Eigen::VectorXd mean = s1 / s0;
        out.score.noalias() += xsum - d * mean;
        for (Eigen::Index a = 0; a < k; ++a) {
          for (Eigen::Index c = 0; c <= a; ++c) {
            out.info(a, c) += d * (s2(a, c) / s0 - mean[a] * mean[c]);
          }
        }
      }
    }
    pos = start;
  }
  if (derivatives) {
    out.info.triangularView<Eigen::StrictlyUpper>() = out.info.transpose();
  }
  return out;
}

std::vector<std::size_t> time_order(std::span<const double> time) {
  std::vector<std::size_t> order(time.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return time[a] < time[b];
  });
  return order;
}

}  // namespace

double FittedCox::cumhaz(double t) const {
  const auto it =
      std::upper_bound(baseline_times.begin(), baseline_times.end(), t);
  const auto k = static_cast<std::size_t>(it - baseline_times.begin());
  return k == 0 ? 0.0 : cumulative[k - 1];
}

double FittedCox::cumhaz_left(double t) const {
  const auto it =
      std::lower_bound(baseline_times.begin(), baseline_times.end(), t);
  const auto k = static_cast<std::size_t>(it - baseline_times.begin());
  return k == 0 ? 0.0 : cumulative[k - 1];
}

double FittedCox::linear_predictor(std::span<const double> x) const {
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

double FittedCox::risk_score(std::span<const double> x) const {
  return std::exp(linear_predictor(x));
}

double cox_log_partial_likelihood(const Eigen::MatrixXd& design,
                                  std::span<const double> time,
                                  std::span<const int> event,
                                  const Eigen::VectorXd& coef) {
  return evaluate_pl(design, time, event, time_order(time), coef, false).loglik;
}

FittedCox fit_cox(const Eigen::MatrixXd& design, std::span<const double> time,
                  std::span<const int> event, const CoxOptions& options) {
  const Eigen::Index n = design.rows();
  if (n == 0) throw Error(ErrorCode::EmptyCell, "no rows for Cox fit");
  if (static_cast<Eigen::Index>(time.size()) != n ||
      static_cast<Eigen::Index>(event.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "design/time/event size");
  }
  if (std::none_of(event.begin(), event.end(), [](int e) { return e != 0; })) {
    throw Error(ErrorCode::NoEvents, "no target events in cell");
  }
  const auto order = time_order(time);
  const Eigen::Index k = design.cols();

  FittedCox fit;
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(k);
  if (k == 0) {
    fit.converged = true;
  } else {
    const Standardizer st = options.standardize
                                ? Standardizer::fit(design, /*skip_first=*/false)
                                : Standardizer::identity(k);
    const RowMatrix xs = options.standardize ? st.apply(design) : design;
    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    PartialLikelihood cur = evaluate_pl(xs, time, event, order, b, true);
    for (int iter = 0; iter <= options.max_iterations; ++iter) {
      fit.iterations = iter;
      Eigen::MatrixXd info = cur.info;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (info(j, j) > 1e-14 * n) continue;
        // Zero-variance columns keep a zero coefficient; information that
        // vanishes away from zero means the risk weights have saturated.
        if (std::abs(b[j]) > 1.0) {
          throw Error(ErrorCode::MonotoneLikelihood,
                      "partial likelihood maximized at infinity");
        }
        info(j, j) += 1e-8 * n;
      }
      const Eigen::VectorXd step = info.ldlt().solve(cur.score);
      // A vanishing score with a large pending step means the likelihood
      // keeps rising along a ridge.
      if ((cur.score * inv_n).cwiseAbs().maxCoeff() <= options.tolerance &&
          step.cwiseAbs().maxCoeff() <= options.step_tolerance) {
        fit.converged = true;
        break;
      }
      if (iter == options.max_iterations) break;
      double t = 1.0;
      Eigen::VectorXd cand = b + step;
      PartialLikelihood next = evaluate_pl(xs, time, event, order, cand, true);
      for (int h = 0; h < 40 &&
                      !(next.loglik >= cur.loglik - 1e-12 * std::abs(cur.loglik));
           ++h) {
        t *= 0.5;
        cand = b + t * step;
        next = evaluate_pl(xs, time, event, order, cand, true);
      }
      b = cand;
      cur = std::move(next);
      if (b.cwiseAbs().maxCoeff() > options.divergence_bound) {
        throw Error(ErrorCode::MonotoneLikelihood,
                    "partial likelihood maximized at infinity");
      }
    }
    raw = options.standardize ? st.to_original(b) : b;
  }
  fit.coef = raw;

  // Breslow increments at distinct target-event times.
  const Eigen::VectorXd lp = design * raw;
  double risk = 0.0;
  std::size_t pos = order.size();
  std::vector<double> times_desc, incr_desc;
  while (pos > 0) {
    const double t = time[order[pos - 1]];
    std::size_t start = pos;
    while (start > 0 && time[order[start - 1]] == t) --start;
    int d = 0;
    for (std::size_t q = start; q < pos; ++q) {
      risk += std::exp(lp[static_cast<Eigen::Index>(order[q])]);
      d += event[order[q]] != 0;
    }
    if (d > 0) {
      times_desc.push_back(t);
      incr_desc.push_back(d / risk);
    }
    pos = start;
  }
  fit.baseline_times.assign(times_desc.rbegin(), times_desc.rend());
  fit.baseline_increments.assign(incr_desc.rbegin(), incr_desc.rend());
  fit.cumulative.resize(fit.baseline_increments.size());
  std::partial_sum(fit.baseline_increments.begin(),
                   fit.baseline_increments.end(), fit.cumulative.begin());
  return fit;
}

FittedCox fit_cox(const Dataset& ds, int z, int s, CoxTarget target,
                  const CovariateList& covariates, const CoxOptions& options) {
  std::vector<int> cols = model_columns(ds, covariates);
  cols.erase(cols.begin());  // the baseline hazard plays the intercept
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (ds.z()[i] == z && ds.s()[i] == s) rows.push_back(i);
  }
  if (rows.empty()) {
    throw Error(ErrorCode::EmptyCell, "cell (Z=" + std::to_string(z) +
                                          ",S=" + std::to_string(s) + ")");
  }
  Eigen::MatrixXd design(rows.size(), cols.size());
  std::vector<double> time(rows.size());
  std::vector<int> event(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      design(r, c) = ds.x()(rows[r], cols[c]);
    }
    time[r] = ds.u()[rows[r]];
    const int d = ds.delta()[rows[r]];
    event[r] = target == CoxTarget::Outcome ? d : 1 - d;
  }
  FittedCox fit = fit_cox(design, time, event, options);
  fit.columns = cols;
  fit.input_dim = ds.dim();
  fit.cell_z = z;
  fit.cell_s = s;
  fit.target = target;
  return fit;
}

double survival_at(const FittedCox& m, double u, std::span<const double> x) {
  if (u <= 0.0) return 1.0;
  return std::exp(-m.cumhaz(u) * m.risk_score(x));
}

double censoring_martingale_integral(const FittedCox& censor,
                                     const FittedCox& outcome,
                                     const SubjectRecord& rec, double u) {
  const double e_c = censor.risk_score(rec.covariates);
  const double e_t = outcome.risk_score(rec.covariates);
  auto denom = [&](double r) {
    const double st = std::max(std::exp(-outcome.cumhaz_left(r) * e_t),
                               kOutcomeSurvivalFloor);
    const double sc = std::max(std::exp(-censor.cumhaz_left(r) * e_c),
                               kCensorSurvivalFloor);
    return st * sc;
  };
  double value = 0.0;
  if (rec.delta == 0 && rec.u <= u) value += 1.0 / denom(rec.u);
  const double upper = std::min(rec.u, u);
  for (std::size_t k = 0; k < censor.baseline_times.size(); ++k) {
    const double r = censor.baseline_times[k];
    if (r > upper) break;
    value -= censor.baseline_increments[k] * e_c / denom(r);
  }
  return value;
}

CensoringAugmentation::CensoringAugmentation(const FittedCox& outcome,
                                             const FittedCox& censor)
    : outcome_(&outcome), censor_(&censor) {
  const auto m = censor.baseline_times.size();
  jump_time_ = censor.baseline_times;
  jump_c_ = censor.baseline_increments;
  lt_left_.resize(m);
  lc_left_.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    lt_left_[k] = outcome.cumhaz_left(jump_time_[k]);
    lc_left_[k] = k == 0 ? 0.0 : censor.cumulative[k - 1];
  }
}

void CensoringAugmentation::evaluate(std::span<const double> grid,
                                     std::span<const double> x, double u_obs,
                                     int delta, std::span<double> out) const {
  const double e_t = outcome_->risk_score(x);
  const double e_c = censor_->risk_score(x);
  // 1/(S(r-) S^C(r-)) with both factors floored, as one exponential.
  const double cap_t = -std::log(kOutcomeSurvivalFloor);
  const double cap_c = -std::log(kCensorSurvivalFloor);
  auto inv_joint = [&](double lt, double lc) {
    return std::exp(std::min(lt * e_t, cap_t) + std::min(lc * e_c, cap_c));
  };
  const double count_w =
      delta == 0 ? inv_joint(outcome_->cumhaz_left(u_obs), censor_->cumhaz_left(u_obs))
                 : 0.0;

  double compensator = 0.0;
  std::size_t k = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double u = grid[g];
    const double upper = std::min(u_obs, u);
    while (k < jump_time_.size() && jump_time_[k] <= upper) {
      compensator += jump_c_[k] * e_c * inv_joint(lt_left_[k], lc_left_[k]);
      ++k;
    }
    const double s_u = std::exp(-outcome_->cumhaz(u) * e_t);
    double value = -compensator;
    if (delta == 0 && u_obs <= u) value += count_w;
    const double ipcw =
        u_obs >= u ? std::exp(std::min(censor_->cumhaz(u) * e_c, cap_c)) : 0.0;
    out[g] = ipcw + s_u * value;
  }
}

}  // namespace psce
