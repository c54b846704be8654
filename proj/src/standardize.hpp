#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace psce {

// Column centering/scaling used inside the Newton fitters. Constant columns
// (other than a kept intercept) are zeroed so their coefficient stays 0.
class Standardizer {
 public:
  static Standardizer fit(const Eigen::MatrixXd& x, bool skip_first) {
    Standardizer st;
    const auto k = x.cols();
    st.mean_ = Eigen::VectorXd::Zero(k);
    st.scale_ = Eigen::VectorXd::Ones(k);
    st.skip_first_ = skip_first;
    const double n = static_cast<double>(x.rows());
    for (Eigen::Index j = skip_first ? 1 : 0; j < k; ++j) {
      const double m = x.col(j).sum() / n;
      const double var = (x.col(j).array() - m).square().sum() / n;
      st.mean_[j] = m;
      st.scale_[j] = var > 1e-24 * (1.0 + m * m) ? std::sqrt(var) : 0.0;
    }
    return st;
  }

  static Standardizer identity(Eigen::Index k) {
    Standardizer st;
    st.mean_ = Eigen::VectorXd::Zero(k);
    st.scale_ = Eigen::VectorXd::Ones(k);
    st.skip_first_ = true;
    st.identity_ = true;
    return st;
  }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
    if (identity_) return x;
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (skip_first_ && j == 0) {
        out.col(j) = x.col(j);
      } else if (scale_[j] == 0.0) {
        out.col(j).setZero();
      } else {
        out.col(j) = (x.col(j).array() - mean_[j]) / scale_[j];
      }
    }
    return out;
  }

  // Maps coefficients fitted on apply(x) back to the columns of x. With a
  // kept intercept the centering shift is folded into coefficient 0;
  // otherwise it is left to the caller (Cox baselines absorb it).
  Eigen::VectorXd to_original(const Eigen::VectorXd& b) const {
    if (identity_) return b;
    Eigen::VectorXd raw = b;
    double shift = 0.0;
    for (Eigen::Index j = skip_first_ ? 1 : 0; j < b.size(); ++j) {
      raw[j] = scale_[j] == 0.0 ? 0.0 : b[j] / scale_[j];
      shift += raw[j] * mean_[j];
    }
    if (skip_first_) raw[0] = b[0] - shift;
    return raw;
  }

 private:
  Eigen::VectorXd mean_, scale_;
  bool skip_first_ = true;
  bool identity_ = false;
};

}  // namespace psce
