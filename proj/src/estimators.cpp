#include "psce/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "psce/error.hpp"

namespace psce {

namespace {

constexpr std::array<Stratum, 3> kMainStrata{Stratum::a, Stratum::c, Stratum::n};

FittedCox flat_censoring(const Dataset& ds, int z, int s) {
  FittedCox m;
  m.coef = Eigen::VectorXd::Zero(0);
  m.input_dim = ds.dim();
  m.cell_z = z;
  m.cell_s = s;
  m.target = CoxTarget::Censoring;
  m.converged = true;
  return m;
}

double floored(double p) { return std::max(p, kWeightFloor); }

// Baseline cumulative hazards of every cell model at the grid points.
struct GridHazards {
  std::array<std::vector<double>, 4> outcome, censor;
};

GridHazards grid_hazards(const NuisanceBundle& nb, std::span<const double> grid) {
  GridHazards h;
  for (int c = 0; c < 4; ++c) {
    for (double u : grid) {
      h.outcome[c].push_back(nb.outcome[c].cumhaz(u));
      h.censor[c].push_back(nb.censor[c].cumhaz(u));
    }
  }
  return h;
}

void tabulate_subject(const NuisanceBundle& nb, const Dataset& ds,
                      std::span<const double> grid, const GridHazards& haz,
                      const std::array<CensoringAugmentation, 4>& aug,
                      SubjectTable& tab, std::size_t i,
                      std::vector<double>& row, std::vector<double>& buf) {
  const std::size_t n = ds.n(), m = grid.size();
  row.resize(ds.dim());
  for (std::size_t j = 0; j < ds.dim(); ++j) {
    row[j] = ds.x()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  for (int c = 0; c < 4; ++c) {
    const double risk = nb.outcome[c].risk_score(row);
    for (std::size_t k = 0; k < m; ++k) {
      tab.surv[c][k * n + i] = std::exp(-haz.outcome[c][k] * risk);
    }
  }
  const int cell = ds.cell(i);
  const double crisk = nb.censor[cell].risk_score(row);
  const double u_obs = ds.u()[i];
  for (std::size_t k = 0; k < m; ++k) {
    tab.ipcw[k * n + i] =
        u_obs >= grid[k]
            ? 1.0 / std::max(std::exp(-haz.censor[cell][k] * crisk),
                             kCensorSurvivalFloor)
            : 0.0;
  }
  buf.resize(m);
  aug[cell].evaluate(grid, row, u_obs, ds.delta()[i], buf);
  for (std::size_t k = 0; k < m; ++k) tab.bracket[k * n + i] = buf[k];
}

SubjectTable make_table(const Dataset& ds, std::span<const double> grid) {
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw Error(ErrorCode::InvalidConfig, "time grid must be increasing");
  }
  SubjectTable tab;
  tab.grid.assign(grid.begin(), grid.end());
  tab.n = ds.n();
  const std::size_t size = ds.n() * grid.size();
  for (auto& v : tab.surv) v.assign(size, 0.0);
  tab.ipcw.assign(size, 0.0);
  tab.bracket.assign(size, 0.0);
  return tab;
}

std::array<CensoringAugmentation, 4> augmentations(const NuisanceBundle& nb) {
  return {CensoringAugmentation(nb.outcome[0], nb.censor[0]),
          CensoringAugmentation(nb.outcome[1], nb.censor[1]),
          CensoringAugmentation(nb.outcome[2], nb.censor[2]),
          CensoringAugmentation(nb.outcome[3], nb.censor[3])};
}

int receipt_of(int z, Stratum g) {
  switch (g) {
    case Stratum::a: return 1;
    case Stratum::n: return 0;
    case Stratum::c: return z;
    case Stratum::d: return 1 - z;
  }
  return 0;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::sr1: return "sr1";
    case Method::sr2: return "sr2";
    case Method::sr3: return "sr3";
    case Method::mr: return "mr";
  }
  return "?";
}

std::optional<Method> parse_method(const std::string& s) {
  for (Method m : {Method::sr1, Method::sr2, Method::sr3, Method::mr}) {
    if (s == method_name(m)) return m;
  }
  return std::nullopt;
}

NuisanceBundle fit_nuisance(const Dataset& ds, const ModelSpec& spec) {
  NuisanceBundle nb;
  nb.prop = fit_logistic(ds, Response::Z, {}, spec.propensity);
  nb.receipt0 = fit_logistic(ds, Response::S, RowFilter{0, std::nullopt},
                             spec.principal);
  nb.receipt1 = fit_logistic(ds, Response::S, RowFilter{1, std::nullopt},
                             spec.principal);
  for (int c = 0; c < 4; ++c) {
    const int z = c / 2, s = c % 2;
    nb.outcome[c] = fit_cox(ds, z, s, CoxTarget::Outcome, spec.outcome);
    try {
      nb.censor[c] = fit_cox(ds, z, s, CoxTarget::Censoring, spec.censoring);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoEvents) throw;
      nb.censor[c] = flat_censoring(ds, z, s);
      ++nb.censor_free_cells;
    }
  }
  refresh_scores(nb, ds);
  return nb;
}

void refresh_scores(NuisanceBundle& nb, const Dataset& ds) {
  nb.pi_x = predict_prob(nb.prop, ds);
  const auto p0 = predict_prob(nb.receipt0, ds);
  const auto p1 = predict_prob(nb.receipt1, ds);
  nb.ps = principal_scores(p0, p1);
  set_marginals(nb.ps, dr_marginal_pz(ds, nb.pi_x, p0, p1));
}

std::vector<double> default_grid(double t_max, int points) {
  if (!(t_max > 0.0) || points < 1) {
    throw Error(ErrorCode::InvalidConfig, "grid needs t_max > 0 and points >= 1");
  }
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int k = 1; k <= points; ++k) grid[k - 1] = t_max * k / points;
  return grid;
}

SubjectTable tabulate(const NuisanceBundle& nb, const Dataset& ds,
                      std::span<const double> grid) {
  SubjectTable tab = make_table(ds, grid);
  const auto aug = augmentations(nb);
  const GridHazards haz = grid_hazards(nb, grid);
  const auto n = static_cast<std::ptrdiff_t>(ds.n());
#pragma omp parallel
  {
    std::vector<double> row, buf;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      tabulate_subject(nb, ds, grid, haz, aug, tab, static_cast<std::size_t>(i),
                       row, buf);
    }
  }
  return tab;
}

SubjectTable tabulate_serial(const NuisanceBundle& nb, const Dataset& ds,
                             std::span<const double> grid) {
  SubjectTable tab = make_table(ds, grid);
  const auto aug = augmentations(nb);
  const GridHazards haz = grid_hazards(nb, grid);
  std::vector<double> row, buf;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    tabulate_subject(nb, ds, grid, haz, aug, tab, i, row, buf);
  }
  return tab;
}

StratumWeight StandardWeights::weight(int, Stratum g, std::size_t i,
                                      double) const {
  switch (g) {
    case Stratum::c: return {ps_->e_c[i], -1.0, 1.0};
    case Stratum::a: return {ps_->e_a[i], 1.0, 0.0};
    case Stratum::n: return {ps_->e_n[i], 0.0, -1.0};
    case Stratum::d: break;
  }
  throw Error(ErrorCode::InvalidConfig, "defiers need a positive zeta");
}

int StandardWeights::cell_receipt(int z, Stratum g) const {
  return receipt_of(z, g);
}

bool StandardWeights::pure_cell(int z, Stratum g) const {
  return (z == 1 && g == Stratum::n) || (z == 0 && g == Stratum::a);
}

std::optional<LinearWeight> StandardWeights::linear(Stratum g) const {
  switch (g) {
    case Stratum::c: return LinearWeight{0.0, -1.0, 1.0};
    case Stratum::a: return LinearWeight{0.0, 1.0, 0.0};
    case Stratum::n: return LinearWeight{1.0, 0.0, -1.0};
    case Stratum::d: break;
  }
  return std::nullopt;
}

std::vector<double> arm_curve(const NuisanceBundle& nb, const Dataset& ds,
                              const SubjectTable& tab, const WeightModel& wm,
                              int z, Stratum g, Method method) {
  const std::size_t n = ds.n(), m = tab.grid.size();
  if (tab.n != n || nb.pi_x.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "bundle/table/dataset size");
  }
  const double eg = wm.proportion(g);
  if (!(eg >= kStratumFloor)) {
    throw Error(ErrorCode::DegenerateDenominator,
                std::string("stratum ") + stratum_name(g) + " proportion " +
                    std::to_string(eg));
  }
  const int s = wm.cell_receipt(z, g);
  const int cell = 2 * z + s;
  const bool pure = wm.pure_cell(z, g);
  const auto& p0x = wm.p0x();
  const auto& p1x = wm.p1x();
  const auto& surv = tab.surv[cell];
  std::optional<LinearWeight> lin;
  if (method == Method::sr3) {
    lin = wm.linear(g);
    if (!lin) {
      throw Error(ErrorCode::InvalidConfig,
                  "hybrid estimator needs a weight linear in the receipt "
                  "probabilities");
    }
  }

  // Per subject the summand is a_i * X_ik + b_i * mu_ik, with X the IPCW
  // factor (sr1) or the augmented bracket (mr).
  std::vector<double> a(n, 0.0), b(n, 0.0);
  auto coefficients = [&](double u) {
    for (std::size_t i = 0; i < n; ++i) {
      const int zi = ds.z()[i], si = ds.s()[i];
      const double pi = nb.pi_x[i];
      const double p0 = p0x[i], p1 = p1x[i];
      if (method == Method::sr3) {
        const double rz1 = zi * si / floored(pi);
        const double rz0 = (1 - zi) * si / floored(1.0 - pi);
        b[i] = lin->c + lin->a0 * rz0 + lin->a1 * rz1;
        continue;
      }
      const StratumWeight w = wm.weight(z, g, i, u);
      if (method == Method::sr2) {
        b[i] = w.h;
        continue;
      }
      const bool in_arm = zi == z;
      const bool in_cell = in_arm && si == s;
      const double pz = z == 1 ? floored(pi) : floored(1.0 - pi);
      double ratio = 1.0;
      if (!pure) {
        const double q = z == 1 ? (s == 1 ? p1 : 1.0 - p1)
                                : (s == 1 ? p0 : 1.0 - p0);
        ratio = w.h / floored(q);
      }
      a[i] = in_cell ? ratio / pz : 0.0;
      if (method == Method::sr1) continue;
      double coef = w.h * (1.0 - (in_arm ? 1.0 : 0.0) / pz);
      if (!pure) {
        double c1 = w.dh_dp1, c0 = w.dh_dp0;
        if (z == 1) {
          c1 += s == 1 ? -w.h / floored(p1) : w.h / floored(1.0 - p1);
        } else {
          c0 += s == 0 ? w.h / floored(1.0 - p0) : -w.h / floored(p0);
        }
        coef += c1 * zi / floored(pi) * (si - p1) +
                c0 * (1 - zi) / floored(1.0 - pi) * (si - p0);
      }
      b[i] = coef;
    }
  };

  const std::vector<double>* x = nullptr;
  if (method == Method::sr1) x = &tab.ipcw;
  if (method == Method::mr) x = &tab.bracket;
  const bool use_mu = method != Method::sr1;
  if (!wm.time_varying() && m > 0) coefficients(tab.grid[0]);
  std::vector<double> out(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    if (wm.time_varying()) coefficients(tab.grid[k]);
    const double* mu = surv.data() + k * n;
    const double* xk = x ? x->data() + k * n : nullptr;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double term = 0.0;
      if (xk && a[i] != 0.0) term += a[i] * xk[i];
      if (use_mu) term += b[i] * mu[i];
      total += term;
    }
    out[k] = total / static_cast<double>(n) / eg;
  }
  return out;
}

namespace {

ArmEstimate scalar_estimate(const NuisanceBundle& nb, const Dataset& ds,
                            Stratum g, double u, Method method) {
  const std::array<double, 1> grid{u};
  const SubjectTable tab = tabulate(nb, ds, grid);
  const StandardWeights wm(nb.ps);
  ArmEstimate e;
  e.s1 = arm_curve(nb, ds, tab, wm, 1, g, method)[0];
  e.s0 = arm_curve(nb, ds, tab, wm, 0, g, method)[0];
  e.delta = e.s1 - e.s0;
  return e;
}

}  // namespace

ArmEstimate sr_weighting(const NuisanceBundle& nb, const Dataset& ds,
                         Stratum g, double u) {
  return scalar_estimate(nb, ds, g, u, Method::sr1);
}

ArmEstimate sr_outcome(const NuisanceBundle& nb, const Dataset& ds, Stratum g,
                       double u) {
  return scalar_estimate(nb, ds, g, u, Method::sr2);
}

ArmEstimate sr_hybrid(const NuisanceBundle& nb, const Dataset& ds, Stratum g,
                      double u) {
  return scalar_estimate(nb, ds, g, u, Method::sr3);
}

ArmEstimate mr_estimate(const NuisanceBundle& nb, const Dataset& ds, Stratum g,
                        double u) {
  return scalar_estimate(nb, ds, g, u, Method::mr);
}

const StratumCurve& PsceEstimate::curve(Stratum g) const {
  for (const auto& c : curves) {
    if (c.stratum == g) return c;
  }
  throw Error(ErrorCode::InvalidConfig,
              std::string("no curve for stratum ") + stratum_name(g));
}

std::string range_flags(double s1, double s0) {
  std::string f;
  auto outside = [](double v) { return !(v >= 0.0 && v <= 1.0); };
  if (outside(s1)) f = "S1_out_of_range";
  if (outside(s0)) f += f.empty() ? "S0_out_of_range" : ";S0_out_of_range";
  return f;
}

PsceEstimate psce_curve(const NuisanceBundle& nb, const Dataset& ds,
                        const SubjectTable& tab, const WeightModel& wm,
                        Method method, std::span<const Stratum> strata) {
  PsceEstimate est;
  est.method = method;
  est.grid = tab.grid;
  const std::span<const Stratum> chosen =
      strata.empty() ? std::span<const Stratum>(kMainStrata) : strata;
  for (Stratum g : chosen) {
    StratumCurve c;
    c.stratum = g;
    c.s1 = arm_curve(nb, ds, tab, wm, 1, g, method);
    c.s0 = arm_curve(nb, ds, tab, wm, 0, g, method);
    c.delta.resize(c.s1.size());
    for (std::size_t k = 0; k < c.s1.size(); ++k) c.delta[k] = c.s1[k] - c.s0[k];
    est.curves.push_back(std::move(c));
  }
  return est;
}

PsceEstimate psce_curve(const NuisanceBundle& nb, const Dataset& ds,
                        std::span<const double> grid, Method method,
                        std::span<const Stratum> strata) {
  for (double u : grid) {
    if (!(u > 0.0)) throw Error(ErrorCode::InvalidConfig, "grid must lie in (0, t_max]");
  }
  const SubjectTable tab = tabulate(nb, ds, grid);
  return psce_curve(nb, ds, tab, StandardWeights(nb.ps), method, strata);
}

}  // namespace psce
