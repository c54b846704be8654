#include "psce/strata.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "psce/error.hpp"

namespace psce {

const char* stratum_name(Stratum g) {
  switch (g) {
    case Stratum::a: return "a";
    case Stratum::c: return "c";
    case Stratum::n: return "n";
    case Stratum::d: return "d";
  }
  return "?";
}

const std::vector<double>& PrincipalScores::score(Stratum g) const {
  switch (g) {
    case Stratum::a: return e_a;
    case Stratum::c: return e_c;
    case Stratum::n: return e_n;
    case Stratum::d: return e_d;
  }
  return e_c;
}

double PrincipalScores::proportion(Stratum g) const {
  switch (g) {
    case Stratum::a: return ea_hat;
    case Stratum::c: return ec_hat;
    case Stratum::n: return en_hat;
    case Stratum::d: return ed_hat;
  }
  return ec_hat;
}

PrincipalScores principal_scores(std::span<const double> p0x,
                                 std::span<const double> p1x) {
  if (p0x.size() != p1x.size()) {
    throw Error(ErrorCode::DimensionMismatch, "p0x/p1x length");
  }
  const std::size_t n = p0x.size();
  PrincipalScores ps;
  ps.p0x.assign(p0x.begin(), p0x.end());
  ps.p1x.assign(p1x.begin(), p1x.end());
  ps.e_a.resize(n);
  ps.e_c.resize(n);
  ps.e_n.resize(n);
  ps.e_d.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double ea = p0x[i];
    double ec = p1x[i] - p0x[i];
    double en = 1.0 - p1x[i];
    if (ec < kStratumFloor) {
      ec = kStratumFloor;
      const double total = ea + ec + en;
      ea /= total;
      ec /= total;
      en /= total;
      ++ps.truncations;
    }
    ps.e_a[i] = ea;
    ps.e_c[i] = ec;
    ps.e_n[i] = en;
  }
  return ps;
}

ReceiptMarginals dr_marginal_pz(const Dataset& ds, std::span<const double> pi_x,
                                std::span<const double> p0x,
                                std::span<const double> p1x) {
  const std::size_t n = ds.n();
  if (pi_x.size() != n || p0x.size() != n || p1x.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "prediction length");
  }
  double s0 = 0.0, s1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = ds.z()[i], s = ds.s()[i];
    s1 += z * (s - p1x[i]) / pi_x[i] + p1x[i];
    s0 += (1.0 - z) * (s - p0x[i]) / (1.0 - pi_x[i]) + p0x[i];
  }
  return {s0 / static_cast<double>(n), s1 / static_cast<double>(n)};
}

ReceiptMarginals dr_marginal_pz(const Dataset& ds, const FittedLogistic& prop,
                                const FittedLogistic& p0m,
                                const FittedLogistic& p1m) {
  return dr_marginal_pz(ds, predict_prob(prop, ds), predict_prob(p0m, ds),
                        predict_prob(p1m, ds));
}

void set_marginals(PrincipalScores& ps, const ReceiptMarginals& m) {
  ps.p0_hat = m.p0_hat;
  ps.p1_hat = m.p1_hat;
  ps.zeta = 0.0;
  ps.ea_hat = m.p0_hat;
  ps.ec_hat = m.p1_hat - m.p0_hat;
  ps.en_hat = 1.0 - m.p1_hat;
  ps.ed_hat = 0.0;
}

double absolute_standardized_difference(double m1, double s1, double m0,
                                        double s0) {
  const double pooled = std::sqrt(0.5 * (s1 * s1 + s0 * s0));
  return pooled > 0.0 ? std::abs(m1 - m0) / pooled : 0.0;
}

CovariateSummary strata_covariate_summary(const Dataset& ds,
                                          const PrincipalScores& ps) {
  const std::size_t n = ds.n(), p = ds.num_covariates();
  if (ps.n() != n) throw Error(ErrorCode::DimensionMismatch, "scores length");
  std::vector<Stratum> strata{Stratum::a, Stratum::c, Stratum::n};
  if (ps.zeta > 0.0) strata.push_back(Stratum::d);

  CovariateSummary out;
  out.covariates = ds.covariate_names();
  for (Stratum g : strata) {
    const double eg = ps.proportion(g);
    if (!(eg > kStratumFloor)) {
      throw Error(ErrorCode::DegenerateStratum,
                  std::string("stratum ") + stratum_name(g) + " proportion " +
                      std::to_string(eg));
    }
    const auto& e = ps.score(g);
    StratumSummary sum{g, std::vector<double>(p), std::vector<double>(p)};
    for (std::size_t j = 0; j < p; ++j) {
      const auto col = ds.x().col(static_cast<Eigen::Index>(j + 1));
      double m = 0.0;
      for (std::size_t i = 0; i < n; ++i) m += e[i] / eg * col[i];
      m /= static_cast<double>(n);
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        v += e[i] / eg * (col[i] - m) * (col[i] - m);
      }
      v /= static_cast<double>(n);
      sum.mean[j] = m;
      sum.sd[j] = std::sqrt(std::max(v, 0.0));
    }
    out.strata.push_back(std::move(sum));
  }
  out.max_asd.assign(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t g = 0; g < out.strata.size(); ++g) {
      for (std::size_t h = g + 1; h < out.strata.size(); ++h) {
        const auto& a = out.strata[g];
        const auto& b = out.strata[h];
        out.max_asd[j] = std::max(
            out.max_asd[j], absolute_standardized_difference(
                                a.mean[j], a.sd[j], b.mean[j], b.sd[j]));
      }
    }
  }
  return out;
}

BalanceTable smd_balance(const Dataset& ds, const PrincipalScores& ps,
                         bool weighted) {
  const std::size_t n = ds.n(), p = ds.num_covariates();
  if (ps.n() != n) throw Error(ErrorCode::DimensionMismatch, "scores length");
  const auto sizes = ds.cell_sizes();
  for (int c = 0; c < 4; ++c) {
    if (sizes[c] == 0) {
      throw Error(ErrorCode::EmptyCell, "cell (Z=" + std::to_string(c / 2) +
                                            ",S=" + std::to_string(c % 2) + ")");
    }
  }

  // Weights for the cells entering each contrast; W_{1,n} = W_{0,a} = 1.
  std::vector<double> w1c(n, 1.0), w0c(n, 1.0), w0n(n, 1.0), w1a(n, 1.0);
  if (weighted) {
    const double r1c = ps.ec_hat / ps.p1_hat;
    const double r0c = ps.ec_hat / (1.0 - ps.p0_hat);
    const double r0n = ps.en_hat / (1.0 - ps.p0_hat);
    const double r1a = ps.ea_hat / ps.p1_hat;
    for (std::size_t i = 0; i < n; ++i) {
      w1c[i] = ps.e_c[i] / ps.p1x[i] / r1c;
      w0c[i] = ps.e_c[i] / (1.0 - ps.p0x[i]) / r0c;
      w0n[i] = ps.e_n[i] / (1.0 - ps.p0x[i]) / r0n;
      w1a[i] = ps.e_a[i] / ps.p1x[i] / r1a;
    }
  }

  BalanceTable out;
  out.weighted = weighted;
  std::array<double, 4> count{};
  for (std::size_t i = 0; i < n; ++i) count[ds.cell(i)] += 1.0;
  const double nn = static_cast<double>(n);

  for (std::size_t j = 0; j < p; ++j) {
    const auto col = ds.x().col(static_cast<Eigen::Index>(j + 1));
    std::array<double, 4> mean{}, ss{};
    for (std::size_t i = 0; i < n; ++i) mean[ds.cell(i)] += col[i];
    for (int c = 0; c < 4; ++c) mean[c] /= count[c];
    for (std::size_t i = 0; i < n; ++i) {
      const double d = col[i] - mean[ds.cell(i)];
      ss[ds.cell(i)] += d * d;
    }
    std::array<double, 4> var{};
    for (int c = 0; c < 4; ++c) {
      var[c] = count[c] > 1.0 ? ss[c] / (count[c] - 1.0) : 0.0;
    }
    // Weighted cell means: Pn[I_cell W X] / Pn[I_cell].
    double m11c = 0, m00c = 0, m10n = 0, m00n = 0, m11a = 0, m01a = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = col[i];
      switch (ds.cell(i)) {
        case 3:
          m11c += w1c[i] * x;
          m11a += w1a[i] * x;
          break;
        case 2: m10n += x; break;
        case 1: m01a += x; break;
        case 0:
          m00c += w0c[i] * x;
          m00n += w0n[i] * x;
          break;
      }
    }
    auto cell_mean = [&](double total, int c) { return total / nn / (count[c] / nn); };
    auto smd = [&](double diff, int c1, int c0) {
      const double s = std::sqrt(0.5 * (var[c1] + var[c0]));
      return s > 0.0 ? std::abs(diff) / s : 0.0;
    };
    if (var[3] + var[0] == 0.0 || var[2] + var[0] == 0.0 ||
        var[3] + var[1] == 0.0) {
      ++out.warnings;
    }
    BalanceRow row;
    row.covariate = ds.covariate_names()[j];
    row.smd_c = smd(cell_mean(m11c, 3) - cell_mean(m00c, 0), 3, 0);
    row.smd_n = smd(cell_mean(m10n, 2) - cell_mean(m00n, 0), 2, 0);
    row.smd_a = smd(cell_mean(m11a, 3) - cell_mean(m01a, 1), 3, 1);
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace psce
