#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "psce/estimators.hpp"
#include "psce/strata.hpp"

namespace psce {

// eps_z(t, X) = exp(xi_z (t / t_max)^eta_z). The per-subject vectors, when
// non-empty, replace the constant extremum parameters.
struct PiSensitivitySpec {
  double xi1 = 0.0;
  double xi0 = 0.0;
  double eta1 = 1.0;
  double eta0 = 1.0;
  double t_max = 1.0;
  std::vector<double> xi1_x;
  std::vector<double> xi0_x;

  void validate() const;
};

double eps_function(const PiSensitivitySpec& spec, int arm, double t);
double eps_function(const PiSensitivitySpec& spec, int arm, double t,
                    std::size_t subject);

struct PiWeights {
  std::vector<double> w1c, w0c, w0n, w1a;
};

// The four complier-mixing weights at time t, per subject.
PiWeights pi_weights(const PrincipalScores& ps, const PiSensitivitySpec& spec,
                     double t);

// Principal ignorability replaced by the eps tilt: h = e_g w_{z,g}(u, X).
class PiViolationWeights : public WeightModel {
 public:
  PiViolationWeights(const PrincipalScores& ps, const PiSensitivitySpec& spec);
  StratumWeight weight(int z, Stratum g, std::size_t i, double u) const override;
  double proportion(Stratum g) const override { return ps_->proportion(g); }
  int cell_receipt(int z, Stratum g) const override;
  bool pure_cell(int z, Stratum g) const override;
  std::optional<LinearWeight> linear(Stratum) const override {
    return std::nullopt;
  }
  const std::vector<double>& p0x() const override { return ps_->p0x; }
  const std::vector<double>& p1x() const override { return ps_->p1x; }
  bool time_varying() const override { return true; }

 private:
  const PrincipalScores* ps_;
  PiSensitivitySpec spec_;
};

ArmEstimate mr_estimate_pi(const NuisanceBundle& nb, const Dataset& ds,
                           const PiSensitivitySpec& spec, Stratum g, double u);

struct ZetaSpec {
  double zeta = 0.0;
};

// Largest share of subjects whose always-taker or never-taker score may turn
// negative (and be truncated) before the defier ratio is declared
// inadmissible. The complier floor also applies at zeta = 0 and does not
// count.
inline constexpr double kMaxZetaTruncation = 0.01;

// e_c = (p1 - p0)/(1 - zeta), e_d = zeta e_c, e_a = p0 - e_d,
// e_n = 1 - p1 - e_d. Marginals are left at zero.
PrincipalScores strata_under_zeta(std::span<const double> p0x,
                                  std::span<const double> p1x, double zeta);

// Same construction applied to the doubly robust marginals.
void set_marginals_under_zeta(PrincipalScores& ps, double p0_hat,
                              double p1_hat);

struct ZetaRange {
  double lower = 0.0;
  double upper = 0.0;
};

ZetaRange zeta_range(double p0_hat, double p1_hat);

// Four strata with defiers; cells (1,1)={a,c}, (1,0)={n,d}, (0,1)={a,d},
// (0,0)={n,c}. With zeta = 0 this is the monotone model.
class ZetaWeights : public WeightModel {
 public:
  explicit ZetaWeights(PrincipalScores ps) : ps_(std::move(ps)) {}
  StratumWeight weight(int z, Stratum g, std::size_t i, double u) const override;
  double proportion(Stratum g) const override { return ps_.proportion(g); }
  int cell_receipt(int z, Stratum g) const override;
  bool pure_cell(int z, Stratum g) const override;
  std::optional<LinearWeight> linear(Stratum g) const override;
  const std::vector<double>& p0x() const override { return ps_.p0x; }
  const std::vector<double>& p1x() const override { return ps_.p1x; }
  const PrincipalScores& scores() const { return ps_; }

 private:
  PrincipalScores ps_;
};

// Builds ZetaWeights from the bundle's receipt predictions and marginals.
ZetaWeights zeta_weights(const NuisanceBundle& nb, const ZetaSpec& spec);

ArmEstimate mr_estimate_zeta(const NuisanceBundle& nb, const Dataset& ds,
                             const ZetaSpec& spec, Stratum g, double u);

}  // namespace psce
