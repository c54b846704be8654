#include "psce/simulation.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "psce/bootstrap.hpp"
#include "psce/error.hpp"
#include "psce/format.hpp"
#include "psce/rng.hpp"
#include "psce/sensitivity.hpp"

namespace psce {

namespace {

double sigmoid(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

constexpr std::array<std::array<double, 5>, 4> kPsi{{
    {0.0, 0.0, 0.2, 0.4, 0.5},   // (0,0)
    {0.0, 0.0, 0.0, 0.4, 0.2},   // (0,1)
    {0.0, 0.0, 0.0, 0.4, -0.3},  // (1,0)
    {0.0, 0.0, 0.0, -0.3, 0.2},  // (1,1)
}};

double dot5(const std::array<double, 5>& a, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t j = 0; j < 5; ++j) s += a[j] * x[j];
  return s;
}

std::array<double, 5> draw_covariates(std::mt19937_64& gen) {
  std::bernoulli_distribution half(0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::array<double, 5> x{};
  x[0] = half(gen) ? 1.0 : 0.0;
  x[1] = normal(gen);
  x[2] = normal(gen);
  x[3] = x[1] * x[1] - 1.0;
  x[4] = x[2] * x[2] - 1.0;
  return x;
}

void check_dgp(const DgpSpec& dgp) {
  if (dgp.xi1 > 0.0) {
    throw Error(ErrorCode::InvalidConfig,
                "complier tilt needs xi1 <= 0 to keep a proper survival law");
  }
  if (!(dgp.zeta >= 0.0 && dgp.zeta < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "zeta must lie in [0, 1)");
  }
  if (!(dgp.t_max > 0.0)) throw Error(ErrorCode::InvalidConfig, "t_max must be > 0");
}

int stratum_index(Stratum g) { return static_cast<int>(g); }

// Observed cell occupied by stratum g under assignment z.
int cell_of(int z, Stratum g) {
  switch (g) {
    case Stratum::a: return 2 * z + 1;
    case Stratum::n: return 2 * z;
    case Stratum::c: return 2 * z + z;
    case Stratum::d: return 2 * z + (1 - z);
  }
  return 0;
}

std::string oracle_key(const DgpSpec& dgp) {
  std::ostringstream os;
  os << fmt_exact(dgp.xi1) << ' ' << fmt_exact(dgp.zeta) << ' '
     << fmt_exact(dgp.t_max);
  return os.str();
}

}  // namespace

double true_propensity(const DgpSpec& dgp, std::span<const double> x) {
  if (dgp.design.is_randomized()) return dgp.design.assignment_prob;
  return sigmoid(0.5 * x[3] + 0.4 * x[4]);
}

double true_receipt(int z, std::span<const double> x) {
  return sigmoid(-0.5 + z + 0.5 * x[3] + 0.4 * x[4]);
}

double true_hazard(int z, int s, std::span<const double> x) {
  return std::exp(-1.0 + 0.5 * s + dot5(kPsi[2 * z + s], x));
}

double true_censoring_hazard(std::span<const double> x) {
  return std::exp(-2.0 + 0.3 * x[3] + 0.2 * x[4]);
}

std::array<double, 4> true_strata(const DgpSpec& dgp, std::span<const double> x) {
  const double p0 = true_receipt(0, x), p1 = true_receipt(1, x);
  const double ec = (p1 - p0) / (1.0 - dgp.zeta);
  const double ed = dgp.zeta * ec;
  return {p0 - ed, ec, 1.0 - p1 - ed, ed};
}

Dataset simulate_dataset(std::size_t n, const Design& design, std::uint64_t seed) {
  DgpSpec dgp;
  dgp.design = design;
  return simulate_dataset(n, dgp, seed);
}

Dataset simulate_dataset(std::size_t n, const DgpSpec& dgp, std::uint64_t seed) {
  check_dgp(dgp);
  auto gen = substream(seed, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> unit_exp(1.0);
  Eigen::MatrixXd cov(n, kSimCovariates);
  std::vector<int> z(n), s(n), delta(n);
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = draw_covariates(gen);
    for (std::size_t j = 0; j < kSimCovariates; ++j) cov(i, j) = x[j];
    z[i] = unif(gen) < true_propensity(dgp, x) ? 1 : 0;

    // Latent stratum, then the receipt it implies under the drawn arm.
    const auto e = true_strata(dgp, x);
    const double v = unif(gen);
    Stratum g = Stratum::d;
    if (v < e[0]) {
      g = Stratum::a;
    } else if (v < e[0] + e[1]) {
      g = Stratum::c;
    } else if (v < e[0] + e[1] + e[2]) {
      g = Stratum::n;
    }
    const int cell = cell_of(z[i], g);
    s[i] = cell % 2;

    double rate = true_hazard(z[i], s[i], x);
    if (z[i] == 1 && g == Stratum::c) rate -= dgp.xi1 / dgp.t_max;
    const double t = unit_exp(gen) / rate;
    const double c = unit_exp(gen) / true_censoring_hazard(x);
    u[i] = std::min(t, c);
    delta[i] = t <= c ? 1 : 0;
  }
  return Dataset(cov, std::move(z), std::move(s), std::move(u), std::move(delta),
                 {"X1", "X2", "X3", "X4", "X5"}, dgp.design);
}

double OracleTable::at(int z, Stratum g, std::size_t k) const {
  return value[z][stratum_index(g)].at(k);
}

double OracleTable::at(int z, Stratum g, double u) const {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] == u) return at(z, g, k);
  }
  throw Error(ErrorCode::InvalidConfig, "oracle has no time " + fmt_exact(u));
}

OracleTable compute_oracle(const DgpSpec& dgp, std::span<const double> times,
                           std::size_t draws, std::uint64_t seed) {
  check_dgp(dgp);
  constexpr std::size_t kChunks = 64;
  const std::size_t m = times.size();
  // Per chunk: numerators [z][g][k] then denominators [g].
  const std::size_t width = 2 * 4 * m + 4;
  std::vector<std::vector<double>> partial(kChunks, std::vector<double>(width, 0.0));

#pragma omp parallel for schedule(dynamic)
  for (std::size_t c = 0; c < kChunks; ++c) {
    auto gen = substream(seed, c);
    const std::size_t count = draws / kChunks + (c < draws % kChunks ? 1 : 0);
    auto& acc = partial[c];
    std::array<double, 4> rate{};
    for (std::size_t d = 0; d < count; ++d) {
      const auto x = draw_covariates(gen);
      const auto e = true_strata(dgp, x);
      for (int cell = 0; cell < 4; ++cell) rate[cell] = true_hazard(cell / 2, cell % 2, x);
      for (int g = 0; g < 4; ++g) acc[2 * 4 * m + g] += e[g];
      for (int z = 0; z < 2; ++z) {
        for (int g = 0; g < 4; ++g) {
          if (e[g] == 0.0) continue;
          double r = rate[cell_of(z, static_cast<Stratum>(g))];
          if (z == 1 && g == stratum_index(Stratum::c)) r -= dgp.xi1 / dgp.t_max;
          for (std::size_t k = 0; k < m; ++k) {
            acc[(z * 4 + g) * m + k] += e[g] * std::exp(-times[k] * r);
          }
        }
      }
    }
  }
  std::vector<double> total(width, 0.0);
  for (const auto& p : partial) {
    for (std::size_t j = 0; j < width; ++j) total[j] += p[j];
  }
  OracleTable t;
  t.times.assign(times.begin(), times.end());
  t.draws = draws;
  t.seed = seed;
  for (int z = 0; z < 2; ++z) {
    for (int g = 0; g < 4; ++g) {
      auto& v = t.value[z][g];
      v.resize(m);
      const double den = total[2 * 4 * m + g];
      for (std::size_t k = 0; k < m; ++k) {
        v[k] = den > 0.0 ? total[(z * 4 + g) * m + k] / den : std::nan("");
      }
    }
  }
  return t;
}

OracleTable cached_oracle(const std::string& path, const DgpSpec& dgp,
                          std::span<const double> times, std::size_t draws,
                          std::uint64_t seed) {
  using nlohmann::json;
  const std::string key = oracle_key(dgp);
  {
    std::ifstream in(path);
    if (in) {
      try {
        const json j = json::parse(in);
        if (j.at("draws").get<std::size_t>() == draws &&
            j.at("seed").get<std::uint64_t>() == seed &&
            j.at("dgp").get<std::string>() == key &&
            j.at("times").get<std::vector<double>>() ==
                std::vector<double>(times.begin(), times.end())) {
          OracleTable t;
          t.times.assign(times.begin(), times.end());
          t.draws = draws;
          t.seed = seed;
          const auto values = j.at("values");
          for (int z = 0; z < 2; ++z) {
            for (int g = 0; g < 4; ++g) {
              for (const auto& v : values.at(z).at(g)) {
                t.value[z][g].push_back(v.is_null() ? std::nan("") : v.get<double>());
              }
            }
          }
          return t;
        }
      } catch (const json::exception&) {
        // stale or damaged cache: recompute below
      }
    }
  }
  OracleTable t = compute_oracle(dgp, times, draws, seed);
  json values = json::array();
  for (int z = 0; z < 2; ++z) {
    json arm = json::array();
    for (int g = 0; g < 4; ++g) {
      json col = json::array();
      for (double v : t.value[z][g]) {
        if (std::isnan(v)) {
          col.push_back(nullptr);
        } else {
          col.push_back(v);
        }
      }
      arm.push_back(col);
    }
    values.push_back(arm);
  }
  const json j = {{"draws", draws}, {"seed", seed}, {"dgp", key},
                  {"times", t.times}, {"values", values}};
  std::ofstream out(path);
  if (out) out << j.dump(1) << '\n';
  return t;
}

double oracle_truth(Stratum g, int z, double u) {
  if (u <= 0.0) return 1.0;
  static std::mutex mu;
  static std::map<double, OracleTable> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(u);
  if (it == cache.end()) {
    const std::array<double, 1> t{u};
    it = cache.emplace(u, compute_oracle(DgpSpec{}, t)).first;
  }
  return it->second.at(z, g, std::size_t{0});
}

std::string ScenarioFlags::label() const {
  std::string s;
  for (bool b : {pi, e, T, C}) s += b ? 'T' : 'F';
  return s;
}

ScenarioFlags scenario_flags(int id) {
  // (pi, e, T, C)
  static constexpr std::array<std::array<bool, 4>, 8> kMatrix{{
      {true, true, true, true},
      {true, true, false, true},
      {false, true, true, false},
      {true, false, true, false},
      {false, true, false, true},
      {true, false, false, false},
      {false, false, true, false},
      {false, false, false, false},
  }};
  if (id < 1 || id > 8) {
    throw Error(ErrorCode::InvalidConfig, "scenario must be 1..8, got " + std::to_string(id));
  }
  const auto& r = kMatrix[id - 1];
  return {r[0], r[1], r[2], r[3]};
}

ModelSpec model_spec(const ScenarioFlags& flags) {
  const CovariateList wrong = std::vector<int>{0, 1, 2};
  ModelSpec spec;
  spec.propensity = flags.pi ? CovariateList{} : wrong;
  spec.principal = flags.e ? CovariateList{} : wrong;
  spec.outcome = flags.T ? CovariateList{} : wrong;
  spec.censoring = flags.C ? CovariateList{} : wrong;
  return spec;
}

ScenarioSpec ScenarioSpec::scenario(int id, const Design& design) {
  ScenarioSpec s;
  s.id = id;
  s.flags = scenario_flags(id);
  s.dgp.design = design;
  return s;
}

std::string estimand_name(Estimand e, Stratum g) {
  const char* head = e == Estimand::S1 ? "S1_" : e == Estimand::S0 ? "S0_" : "delta_";
  return head + std::string(stratum_name(g));
}

const ScenarioRow& ScenarioReport::row(Method m, Stratum g, Estimand e,
                                       double u) const {
  for (const auto& r : rows) {
    if (r.method == m && r.stratum == g && r.estimand == e && r.u == u) return r;
  }
  throw Error(ErrorCode::InvalidConfig, "no such report row");
}

std::vector<double> scenario_estimates(const ScenarioSpec& spec,
                                       const Dataset& ds) {
  const NuisanceBundle nb = fit_nuisance(ds, model_spec(spec.flags));
  const SubjectTable tab = tabulate(nb, ds, spec.times);
  std::optional<ZetaWeights> zw;
  std::optional<PiViolationWeights> pw;
  std::optional<StandardWeights> sw;
  const WeightModel* wm = nullptr;
  if (spec.eval_zeta > 0.0) {
    zw.emplace(zeta_weights(nb, ZetaSpec{spec.eval_zeta}));
    wm = &*zw;
  } else if (spec.eval_xi1 != 0.0) {
    PiSensitivitySpec ps;
    ps.xi1 = spec.eval_xi1;
    ps.t_max = spec.dgp.t_max;
    pw.emplace(nb.ps, ps);
    wm = &*pw;
  } else {
    sw.emplace(nb.ps);
    wm = &*sw;
  }
  std::vector<double> out;
  out.reserve(spec.methods.size() * spec.strata.size() * 3 * spec.times.size());
  for (Method m : spec.methods) {
    for (Stratum g : spec.strata) {
      const auto s1 = arm_curve(nb, ds, tab, *wm, 1, g, m);
      const auto s0 = arm_curve(nb, ds, tab, *wm, 0, g, m);
      out.insert(out.end(), s1.begin(), s1.end());
      out.insert(out.end(), s0.begin(), s0.end());
      for (std::size_t k = 0; k < s1.size(); ++k) out.push_back(s1[k] - s0[k]);
    }
  }
  return out;
}

namespace {

struct RepOutcome {
  std::optional<std::vector<double>> estimate;
  std::optional<std::vector<char>> covered;
};

RepOutcome run_rep(const ScenarioSpec& spec, const std::vector<double>& truth,
                   std::size_t r) {
  RepOutcome out;
  const Dataset ds = simulate_dataset(spec.n, spec.dgp, derive_seed(spec.seed, r, 0));
  const Estimator est = [&spec](const Dataset& d) { return scenario_estimates(spec, d); };
  try {
    if (spec.bootstrap_B > 0) {
      try {
        const auto boot = bootstrap_serial(ds, est, spec.bootstrap_B, spec.alpha,
                                           derive_seed(spec.seed, r, 1));
        std::vector<char> cov(truth.size());
        for (std::size_t j = 0; j < truth.size(); ++j) {
          cov[j] = boot.lo[j] <= truth[j] && truth[j] <= boot.hi[j];
        }
        out.estimate = boot.point;
        out.covered = std::move(cov);
        return out;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::TooManyFailures) throw;
      }
    }
    out.estimate = est(ds);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw;
  }
  return out;
}

ScenarioReport run_impl(const ScenarioSpec& spec, const OracleTable* oracle,
                        bool parallel) {
  std::optional<OracleTable> own;
  if (!oracle) {
    own = compute_oracle(spec.dgp, spec.times);
    oracle = &*own;
  }
  const std::size_t m = spec.times.size();
  std::vector<double> truth;
  for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
    for (Stratum g : spec.strata) {
      for (int e = 0; e < 3; ++e) {
        for (std::size_t k = 0; k < m; ++k) {
          const double u = spec.times[k];
          const double s1 = oracle->at(1, g, u), s0 = oracle->at(0, g, u);
          truth.push_back(e == 0 ? s1 : e == 1 ? s0 : s1 - s0);
        }
      }
    }
  }

  std::vector<RepOutcome> reps(spec.reps);
  std::optional<Error> fatal;
  const auto nreps = static_cast<std::ptrdiff_t>(spec.reps);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::ptrdiff_t r = 0; r < nreps; ++r) {
    try {
      reps[r] = run_rep(spec, truth, static_cast<std::size_t>(r));
    } catch (const Error& e) {
#pragma omp critical(psce_scenario_fatal)
      if (!fatal) fatal = e;
    }
  }
  if (fatal) throw *fatal;

  ScenarioReport report;
  report.spec = spec;
  std::vector<std::size_t> ok;
  for (std::size_t r = 0; r < reps.size(); ++r) {
    if (reps[r].estimate && reps[r].estimate->size() == truth.size()) {
      ok.push_back(r);
    } else {
      ++report.failed_reps;
    }
  }
  if (static_cast<double>(report.failed_reps) >
      kMaxFailureShare * static_cast<double>(spec.reps)) {
    throw Error(ErrorCode::TooManyFailures,
                std::to_string(report.failed_reps) + " of " +
                    std::to_string(spec.reps) + " replications failed");
  }

  std::size_t j = 0;
  for (Method meth : spec.methods) {
    for (Stratum g : spec.strata) {
      for (Estimand e : {Estimand::S1, Estimand::S0, Estimand::Delta}) {
        for (std::size_t k = 0; k < m; ++k, ++j) {
          ScenarioRow row;
          row.scenario = spec.id;
          row.flags = spec.flags.label();
          row.method = meth;
          row.stratum = g;
          row.estimand = e;
          row.u = spec.times[k];
          row.truth = truth[j];
          double sum = 0.0;
          for (std::size_t r : ok) sum += (*reps[r].estimate)[j];
          const double cnt = static_cast<double>(ok.size());
          row.mean = ok.empty() ? std::nan("") : sum / cnt;
          row.bias = row.mean - row.truth;
          double ss = 0.0;
          for (std::size_t r : ok) {
            const double d = (*reps[r].estimate)[j] - row.mean;
            ss += d * d;
          }
          row.mc_se = ok.size() > 1 ? std::sqrt(ss / (cnt - 1.0)) : std::nan("");
          row.reps_used = ok.size();
          std::size_t hit = 0;
          for (std::size_t r : ok) {
            if (!reps[r].covered) continue;
            ++row.reps_covered;
            hit += (*reps[r].covered)[j] ? 1 : 0;
          }
          if (row.reps_covered > 0) {
            row.coverage = static_cast<double>(hit) / static_cast<double>(row.reps_covered);
          }
          report.rows.push_back(std::move(row));
        }
      }
    }
  }
  return report;
}

}  // namespace

ScenarioReport run_scenario(const ScenarioSpec& spec, const OracleTable* oracle) {
  return run_impl(spec, oracle, true);
}

ScenarioReport run_scenario_serial(const ScenarioSpec& spec,
                                   const OracleTable* oracle) {
  return run_impl(spec, oracle, false);
}

void write_report_csv(const std::vector<ScenarioReport>& reports,
                      std::ostream& out) {
  out << "scenario,flags,design,method,stratum,estimand,u,truth,mean,bias,"
         "mc_se,coverage,reps_used,reps_failed\n";
  for (const auto& rep : reports) {
    const char* design = rep.spec.dgp.design.is_randomized() ? "randomized" : "observational";
    for (const auto& r : rep.rows) {
      out << r.scenario << ',' << r.flags << ',' << design << ','
          << method_name(r.method) << ',' << stratum_name(r.stratum) << ','
          << estimand_name(r.estimand, r.stratum) << ',' << fmt_num(r.u) << ','
          << fmt_num(r.truth) << ',' << fmt_num(r.mean) << ',' << fmt_num(r.bias)
          << ',' << fmt_num(r.mc_se) << ',' << fmt_num(r.coverage) << ','
          << r.reps_used << ',' << rep.failed_reps << '\n';
    }
  }
}

namespace {

std::string coverage_text(double c) {
  if (std::isnan(c)) return "NA";
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.3f", c);
  return buf;
}

}  // namespace

std::string format_report_table(const std::vector<ScenarioReport>& reports) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %-5s %-6s %-9s %5s %8s %8s %8s %8s %8s\n",
                "scenario", "flags", "method", "estimand", "u", "truth", "mean",
                "bias", "MC SE", "coverage");
  os << line;
  for (const auto& rep : reports) {
    for (const auto& r : rep.rows) {
      if (r.stratum != Stratum::c || r.estimand != Estimand::S0) continue;
      std::snprintf(line, sizeof line,
                    "%-8d %-5s %-6s %-9s %5.2f %8.3f %8.3f %8.3f %8.3f %8s\n",
                    r.scenario, r.flags.c_str(), method_name(r.method),
                    estimand_name(r.estimand, r.stratum).c_str(), r.u, r.truth,
                    r.mean, r.bias, r.mc_se, coverage_text(r.coverage).c_str());
      os << line;
    }
  }
  return os.str();
}

}  // namespace psce
