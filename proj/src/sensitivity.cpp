#include "psce/sensitivity.hpp"

#include <algorithm>
#include <cmath>

#include "psce/error.hpp"

namespace psce {

namespace {

int receipt_of(int z, Stratum g) {
  switch (g) {
    case Stratum::a: return 1;
    case Stratum::n: return 0;
    case Stratum::c: return z;
    case Stratum::d: return 1 - z;
  }
  return 0;
}

ArmEstimate arms(const NuisanceBundle& nb, const Dataset& ds,
                 const WeightModel& wm, Stratum g, double u) {
  const std::array<double, 1> grid{u};
  const SubjectTable tab = tabulate(nb, ds, grid);
  ArmEstimate e;
  e.s1 = arm_curve(nb, ds, tab, wm, 1, g, Method::mr)[0];
  e.s0 = arm_curve(nb, ds, tab, wm, 0, g, Method::mr)[0];
  e.delta = e.s1 - e.s0;
  return e;
}

}  // namespace

void PiSensitivitySpec::validate() const {
  if (!(eta1 > 0.0) || !(eta0 > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "curvature parameters must be > 0");
  }
  if (!(t_max > 0.0)) throw Error(ErrorCode::InvalidConfig, "t_max must be > 0");
  if (!std::isfinite(xi1) || !std::isfinite(xi0)) {
    throw Error(ErrorCode::InvalidConfig, "extremum parameters must be finite");
  }
}

double eps_function(const PiSensitivitySpec& spec, int arm, double t) {
  const double xi = arm == 1 ? spec.xi1 : spec.xi0;
  const double eta = arm == 1 ? spec.eta1 : spec.eta0;
  return std::exp(xi * std::pow(t / spec.t_max, eta));
}

double eps_function(const PiSensitivitySpec& spec, int arm, double t,
                    std::size_t subject) {
  const auto& per = arm == 1 ? spec.xi1_x : spec.xi0_x;
  if (per.empty()) return eps_function(spec, arm, t);
  const double eta = arm == 1 ? spec.eta1 : spec.eta0;
  return std::exp(per[subject] * std::pow(t / spec.t_max, eta));
}

PiWeights pi_weights(const PrincipalScores& ps, const PiSensitivitySpec& spec,
                     double t) {
  const std::size_t n = ps.n();
  PiWeights w;
  w.w1c.resize(n);
  w.w0c.resize(n);
  w.w0n.resize(n);
  w.w1a.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e1 = eps_function(spec, 1, t, i);
    const double e0 = eps_function(spec, 0, t, i);
    const double ec = ps.e_c[i], ea = ps.e_a[i], en = ps.e_n[i];
    w.w1c[i] = (e1 * ec + e1 * ea) / (e1 * ec + ea);
    w.w0c[i] = (e0 * ec + e0 * en) / (e0 * ec + en);
    w.w0n[i] = (ec + en) / (e0 * ec + en);
    w.w1a[i] = (ec + ea) / (e1 * ec + ea);
  }
  return w;
}

PiViolationWeights::PiViolationWeights(const PrincipalScores& ps,
                                       const PiSensitivitySpec& spec)
    : ps_(&ps), spec_(spec) {
  spec_.validate();
  if ((!spec_.xi1_x.empty() && spec_.xi1_x.size() != ps.n()) ||
      (!spec_.xi0_x.empty() && spec_.xi0_x.size() != ps.n())) {
    throw Error(ErrorCode::DimensionMismatch, "per-subject extremum length");
  }
}

int PiViolationWeights::cell_receipt(int z, Stratum g) const {
  return receipt_of(z, g);
}

bool PiViolationWeights::pure_cell(int z, Stratum g) const {
  return (z == 1 && g == Stratum::n) || (z == 0 && g == Stratum::a);
}

// h and its derivatives in (p0, p1), writing p1 = e_c + e_a, p0 = e_a,
// 1 - p0 = e_c + e_n, 1 - p1 = e_n.
StratumWeight PiViolationWeights::weight(int z, Stratum g, std::size_t i,
                                         double u) const {
  const double ec = ps_->e_c[i], ea = ps_->e_a[i], en = ps_->e_n[i];
  if (z == 1) {
    const double eps = eps_function(spec_, 1, u, i);
    const double p1 = ec + ea, p0 = ea;
    const double d = eps * ec + ea;
    const double d2 = d * d;
    switch (g) {
      case Stratum::c: {
        const double w = (eps * ec + eps * ea) / d;
        return {ec * w, -eps * p1 * p1 / d2,
                eps * (eps * p1 * p1 + 2.0 * (1.0 - eps) * p0 * p1 -
                       (1.0 - eps) * p0 * p0) / d2};
      }
      case Stratum::a: {
        const double w = (ec + ea) / d;
        return {ea * w, eps * p1 * p1 / d2, (1.0 - eps) * p0 * p0 / d2};
      }
      case Stratum::n: return {en, 0.0, -1.0};
      case Stratum::d: break;
    }
  } else {
    const double eps = eps_function(spec_, 0, u, i);
    const double q0 = ec + en, r = en;
    const double d = eps * ec + en;
    const double d2 = d * d;
    switch (g) {
      case Stratum::c: {
        const double w = (eps * ec + eps * en) / d;
        return {ec * w,
                -eps * (eps * q0 * q0 + 2.0 * (1.0 - eps) * r * q0 -
                        (1.0 - eps) * r * r) / d2,
                eps * q0 * q0 / d2};
      }
      case Stratum::n: {
        const double w = (ec + en) / d;
        return {en * w, -(1.0 - eps) * r * r / d2, -eps * q0 * q0 / d2};
      }
      case Stratum::a: return {ea, 1.0, 0.0};
      case Stratum::d: break;
    }
  }
  throw Error(ErrorCode::InvalidConfig, "defiers are not part of this model");
}

ArmEstimate mr_estimate_pi(const NuisanceBundle& nb, const Dataset& ds,
                           const PiSensitivitySpec& spec, Stratum g,
                           double u) {
  return arms(nb, ds, PiViolationWeights(nb.ps, spec), g, u);
}

PrincipalScores strata_under_zeta(std::span<const double> p0x,
                                  std::span<const double> p1x, double zeta) {
  if (!(zeta >= 0.0 && zeta < 1.0)) {
    throw Error(ErrorCode::InadmissibleZeta, "zeta must lie in [0, 1)");
  }
  if (p0x.size() != p1x.size()) {
    throw Error(ErrorCode::DimensionMismatch, "p0x/p1x length");
  }
  const std::size_t n = p0x.size();
  std::size_t negative = 0;  // subjects pushed below zero by the defier share
  PrincipalScores ps;
  ps.zeta = zeta;
  ps.p0x.assign(p0x.begin(), p0x.end());
  ps.p1x.assign(p1x.begin(), p1x.end());
  ps.e_a.resize(n);
  ps.e_c.resize(n);
  ps.e_n.resize(n);
  ps.e_d.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double ec = (p1x[i] - p0x[i]) / (1.0 - zeta);
    bool fired = false;
    if (ec < kStratumFloor) {
      ec = kStratumFloor;
      fired = true;
    }
    double ed = zeta * ec;
    double ea = p0x[i] - ed;
    double en = 1.0 - p1x[i] - ed;
    if (ea < 0.0 || en < 0.0) ++negative;
    if (ea < 0.0) {
      ea = kStratumFloor;
      fired = true;
    }
    if (en < 0.0) {
      en = kStratumFloor;
      fired = true;
    }
    if (fired) {
      const double total = ea + ec + en + ed;
      ea /= total;
      ec /= total;
      en /= total;
      ed /= total;
      ++ps.truncations;
    }
    ps.e_a[i] = ea;
    ps.e_c[i] = ec;
    ps.e_n[i] = en;
    ps.e_d[i] = ed;
  }
  if (static_cast<double>(negative) > kMaxZetaTruncation * static_cast<double>(n)) {
    throw Error(ErrorCode::InadmissibleZeta,
                "zeta=" + std::to_string(zeta) + " leaves " +
                    std::to_string(negative) + " of " + std::to_string(n) +
                    " subjects with a negative stratum");
  }
  return ps;
}

void set_marginals_under_zeta(PrincipalScores& ps, double p0_hat,
                              double p1_hat) {
  ps.p0_hat = p0_hat;
  ps.p1_hat = p1_hat;
  ps.ec_hat = (p1_hat - p0_hat) / (1.0 - ps.zeta);
  ps.ed_hat = ps.zeta * ps.ec_hat;
  ps.ea_hat = p0_hat - ps.ed_hat;
  ps.en_hat = 1.0 - p1_hat - ps.ed_hat;
}

ZetaRange zeta_range(double p0_hat, double p1_hat) {
  if (!(p1_hat > p0_hat)) {
    throw Error(ErrorCode::NonPositiveComplierShare,
                "p1_hat - p0_hat = " + std::to_string(p1_hat - p0_hat));
  }
  const double upper = 1.0 - (p1_hat - p0_hat) / std::min(p1_hat, 1.0 - p0_hat);
  return {0.0, std::max(upper, 0.0)};
}

int ZetaWeights::cell_receipt(int z, Stratum g) const { return receipt_of(z, g); }

bool ZetaWeights::pure_cell(int z, Stratum g) const {
  return ps_.zeta == 0.0 &&
         ((z == 1 && g == Stratum::n) || (z == 0 && g == Stratum::a));
}

std::optional<LinearWeight> ZetaWeights::linear(Stratum g) const {
  const double k = 1.0 / (1.0 - ps_.zeta);
  const double zk = ps_.zeta * k;
  switch (g) {
    case Stratum::c: return LinearWeight{0.0, -k, k};
    case Stratum::d: return LinearWeight{0.0, -zk, zk};
    case Stratum::a: return LinearWeight{0.0, 1.0 + zk, -zk};
    case Stratum::n: return LinearWeight{1.0, zk, -1.0 - zk};
  }
  return std::nullopt;
}

StratumWeight ZetaWeights::weight(int, Stratum g, std::size_t i, double) const {
  const LinearWeight l = *linear(g);
  return {ps_.score(g)[i], l.a0, l.a1};
}

ZetaWeights zeta_weights(const NuisanceBundle& nb, const ZetaSpec& spec) {
  PrincipalScores ps = strata_under_zeta(nb.ps.p0x, nb.ps.p1x, spec.zeta);
  set_marginals_under_zeta(ps, nb.ps.p0_hat, nb.ps.p1_hat);
  return ZetaWeights(std::move(ps));
}

ArmEstimate mr_estimate_zeta(const NuisanceBundle& nb, const Dataset& ds,
                             const ZetaSpec& spec, Stratum g, double u) {
  return arms(nb, ds, zeta_weights(nb, spec), g, u);
}

}  // namespace psce
