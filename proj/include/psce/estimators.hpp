#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psce/cox.hpp"
#include "psce/dataset.hpp"
#include "psce/logistic.hpp"
#include "psce/strata.hpp"

namespace psce {

// Lower bound applied to every probability that appears in a denominator
// (propensity, receipt probability and their complements).
inline constexpr double kWeightFloor = 0.01;
inline constexpr int kDefaultGridPoints = 50;

enum class Method { sr1, sr2, sr3, mr };

const char* method_name(Method m);
std::optional<Method> parse_method(const std::string& s);

// Covariate subsets for the four working-model families.
struct ModelSpec {
  CovariateList propensity;
  CovariateList principal;
  CovariateList outcome;
  CovariateList censoring;
};

struct NuisanceBundle {
  FittedLogistic prop;
  FittedLogistic receipt0, receipt1;
  std::array<FittedCox, 4> outcome;  // indexed by cell 2z + s
  std::array<FittedCox, 4> censor;
  std::vector<double> pi_x;  // fitted propensities on the fitting data
  PrincipalScores ps;        // scores and doubly robust marginals
  int censor_free_cells = 0;  // cells without censoring: S^C taken as 1
};

// Fits all eleven working models on `ds` and derives the principal scores.
// A cell without any censoring gets a flat censoring survival of 1.
NuisanceBundle fit_nuisance(const Dataset& ds, const ModelSpec& spec = {});

// Recomputes pi_x and ps from the fitted models.
void refresh_scores(NuisanceBundle& nb, const Dataset& ds);

// u_k = t_max * k / points for k = 1..points.
std::vector<double> default_grid(double t_max, int points = kDefaultGridPoints);

// Per-subject model evaluations on a time grid, stored grid-major
// (entry k * n + i).
struct SubjectTable {
  std::vector<double> grid;
  std::size_t n = 0;
  std::array<std::vector<double>, 4> surv;  // S_zs(u_k | X_i) for each cell
  std::vector<double> ipcw;     // 1(U >= u)/S^C(u|X) of the subject's cell
  std::vector<double> bracket;  // ipcw plus the censoring-martingale term

  double at(const std::vector<double>& v, std::size_t k, std::size_t i) const {
    return v[k * n + i];
  }
};

// Parallel over subjects (OpenMP); tabulate_serial is the reference.
SubjectTable tabulate(const NuisanceBundle& nb, const Dataset& ds,
                      std::span<const double> grid);
SubjectTable tabulate_serial(const NuisanceBundle& nb, const Dataset& ds,
                             std::span<const double> grid);

// Weight of stratum g inside the observed cell it occupies in arm z,
// h = e_g(X) w_{z,g}(X), with its partial derivatives in p0(X) and p1(X).
struct StratumWeight {
  double h = 0.0;
  double dh_dp0 = 0.0;
  double dh_dp1 = 0.0;
};

// h written as c + a0 p0 + a1 p1 when it is linear in the receipt
// probabilities; required by the hybrid (sr3) estimator.
struct LinearWeight {
  double c = 0.0, a0 = 0.0, a1 = 0.0;
};

// Identification assumptions feeding the estimator template.
class WeightModel {
 public:
  virtual ~WeightModel() = default;
  virtual StratumWeight weight(int z, Stratum g, std::size_t i,
                               double u) const = 0;
  virtual double proportion(Stratum g) const = 0;
  // Observed receipt S of stratum g under assignment z.
  virtual int cell_receipt(int z, Stratum g) const = 0;
  // True when the cell holds stratum g alone, so h/P(S=s|Z=z,X) == 1.
  virtual bool pure_cell(int z, Stratum g) const = 0;
  virtual std::optional<LinearWeight> linear(Stratum g) const = 0;
  virtual const std::vector<double>& p0x() const = 0;
  virtual const std::vector<double>& p1x() const = 0;
  // False when weight() ignores u, so it is evaluated once per subject.
  virtual bool time_varying() const { return false; }
};

// Monotonicity and principal ignorability: h = e_g(X) from the bundle.
class StandardWeights : public WeightModel {
 public:
  explicit StandardWeights(const PrincipalScores& ps) : ps_(&ps) {}
  StratumWeight weight(int z, Stratum g, std::size_t i, double u) const override;
  double proportion(Stratum g) const override { return ps_->proportion(g); }
  int cell_receipt(int z, Stratum g) const override;
  bool pure_cell(int z, Stratum g) const override;
  std::optional<LinearWeight> linear(Stratum g) const override;
  const std::vector<double>& p0x() const override { return ps_->p0x; }
  const std::vector<double>& p1x() const override { return ps_->p1x; }

 private:
  const PrincipalScores* ps_;
};

struct ArmEstimate {
  double s1 = 0.0;
  double s0 = 0.0;
  double delta = 0.0;
};

// S_{z,g}(u_k) on the table grid for one method. Throws
// DegenerateDenominator when the stratum proportion is below kStratumFloor.
std::vector<double> arm_curve(const NuisanceBundle& nb, const Dataset& ds,
                              const SubjectTable& tab, const WeightModel& wm,
                              int z, Stratum g, Method method);

ArmEstimate sr_weighting(const NuisanceBundle& nb, const Dataset& ds,
                         Stratum g, double u);
ArmEstimate sr_outcome(const NuisanceBundle& nb, const Dataset& ds, Stratum g,
                       double u);
ArmEstimate sr_hybrid(const NuisanceBundle& nb, const Dataset& ds, Stratum g,
                      double u);
ArmEstimate mr_estimate(const NuisanceBundle& nb, const Dataset& ds, Stratum g,
                        double u);

struct StratumCurve {
  Stratum stratum = Stratum::c;
  std::vector<double> s1, s0, delta;
};

struct PsceEstimate {
  Method method = Method::mr;
  std::vector<double> grid;
  std::vector<StratumCurve> curves;

  const StratumCurve& curve(Stratum g) const;
};

// "S1_out_of_range", "S0_out_of_range", both joined by ';', or empty.
std::string range_flags(double s1, double s0);

PsceEstimate psce_curve(const NuisanceBundle& nb, const Dataset& ds,
                        std::span<const double> grid, Method method,
                        std::span<const Stratum> strata);

// Same, reusing a tabulation and an arbitrary weight model.
PsceEstimate psce_curve(const NuisanceBundle& nb, const Dataset& ds,
                        const SubjectTable& tab, const WeightModel& wm,
                        Method method, std::span<const Stratum> strata);

}  // namespace psce
