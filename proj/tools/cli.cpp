#include "psce/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <omp.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "psce/bootstrap.hpp"
#include "psce/dataset.hpp"
#include "psce/error.hpp"
#include "psce/estimators.hpp"
#include "psce/format.hpp"
#include "psce/rng.hpp"
#include "psce/sensitivity.hpp"
#include "psce/simulation.hpp"
#include "psce/strata.hpp"

namespace psce::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Each option is registered once: the CLI11 binding writes into a holder and
// the merge step copies it over the config-file value when the flag was given.
class Options {
 public:
  explicit Options(CLI::App& app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& name, T& target, const std::string& help) {
    auto holder = std::make_shared<T>(target);
    CLI::Option* opt = app_.add_option("--" + name, *holder, help);
    if constexpr (!std::is_arithmetic_v<T> && !std::is_same_v<T, std::string>) {
      opt->delimiter(',');
    }
    keys_.push_back(name);
    merges_.push_back([opt, holder, &target, name](const json& file) {
      if (opt->count() > 0) {
        target = *holder;
      } else if (file.contains(name)) {
        try {
          target = file.at(name).get<T>();
        } catch (const json::exception& e) {
          throw Error(ErrorCode::InvalidConfig, "config key '" + name + "': " + e.what());
        }
      }
    });
    return opt;
  }

  void merge(const json& file) const {
    for (const auto& [key, value] : file.items()) {
      if (std::find(keys_.begin(), keys_.end(), key) == keys_.end()) {
        throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
      }
    }
    for (const auto& m : merges_) m(file);
  }

 private:
  CLI::App& app_;
  std::vector<std::string> keys_;
  std::vector<std::function<void(const json&)>> merges_;
};

json read_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  if (j.contains("config")) throw Error(ErrorCode::InvalidConfig, "config files do not nest");
  return j;
}

// Settings that change results; threads, output location and the config
// path do not, so they stay out of the hash.
json resolved(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["input"] = c.input;
  j["covariates"] = c.covariates;
  j["z-col"] = c.z_col;
  j["s-col"] = c.s_col;
  j["time-col"] = c.time_col;
  j["event-col"] = c.event_col;
  j["design"] = c.design;
  j["assign-prob"] = c.assign_prob;
  j["propensity-covariates"] = c.propensity_covariates;
  j["principal-covariates"] = c.principal_covariates;
  j["outcome-covariates"] = c.outcome_covariates;
  j["censoring-covariates"] = c.censoring_covariates;
  j["grid-points"] = c.grid_points;
  j["t-max"] = c.t_max;
  j["methods"] = c.methods;
  j["strata"] = c.strata;
  j["bootstrap-B"] = c.bootstrap_B;
  j["alpha"] = c.alpha;
  j["seed"] = c.seed;
  if (c.command == "sensitivity") {
    j["xi1"] = c.xi1;
    j["xi0"] = c.xi0;
    j["eta1"] = c.eta1;
    j["eta0"] = c.eta0;
    j["zeta"] = c.zeta;
  }
  if (c.command == "simulate") {
    j["scenarios"] = c.scenarios;
    j["reps"] = c.reps;
    j["n"] = c.n;
    j["oracle-draws"] = c.oracle_draws;
  }
  return j;
}

Design parse_design(const RunConfig& c) {
  if (c.design == "observational") return Design::observational();
  if (c.design == "randomized") {
    if (!(c.assign_prob > 0.0 && c.assign_prob < 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "assign-prob must lie in (0, 1)");
    }
    return Design::randomized(c.assign_prob);
  }
  throw Error(ErrorCode::InvalidConfig, "design must be observational or randomized");
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& s : names) {
    const auto m = parse_method(s);
    if (!m) throw Error(ErrorCode::InvalidConfig, "unknown method '" + s + "'");
    out.push_back(*m);
  }
  if (out.empty()) throw Error(ErrorCode::InvalidConfig, "no methods selected");
  return out;
}

std::vector<Stratum> parse_strata(const std::vector<std::string>& names) {
  std::vector<Stratum> out;
  for (const auto& s : names) {
    if (s == "a") out.push_back(Stratum::a);
    else if (s == "c") out.push_back(Stratum::c);
    else if (s == "n") out.push_back(Stratum::n);
    else throw Error(ErrorCode::InvalidConfig, "stratum must be a, c or n, got '" + s + "'");
  }
  if (out.empty()) throw Error(ErrorCode::InvalidConfig, "no strata selected");
  return out;
}

void validate(RunConfig& c) {
  if (c.grid_points < 1) throw Error(ErrorCode::InvalidConfig, "grid-points must be >= 1");
  if (c.t_max < 0.0 || !std::isfinite(c.t_max)) {
    throw Error(ErrorCode::InvalidConfig, "t-max must be positive");
  }
  if (c.bootstrap_B < 0) c.bootstrap_B = c.command == "simulate" ? 500 : 1000;
  if (c.bootstrap_B == 1) throw Error(ErrorCode::InvalidConfig, "bootstrap-B must be 0 or >= 2");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "alpha must lie in (0, 1)");
  }
  if (c.threads < 0) throw Error(ErrorCode::InvalidConfig, "threads must be >= 0");
  for (double e : c.eta1) {
    if (!(e > 0.0)) throw Error(ErrorCode::InvalidConfig, "eta1 values must be > 0");
  }
  for (double e : c.eta0) {
    if (!(e > 0.0)) throw Error(ErrorCode::InvalidConfig, "eta0 values must be > 0");
  }
  for (double z : c.zeta) {
    if (!(z >= 0.0 && z < 1.0)) throw Error(ErrorCode::InvalidConfig, "zeta values must lie in [0, 1)");
  }
  if (c.command == "sensitivity" &&
      (c.xi1.empty() || c.xi0.empty() || c.eta1.empty() || c.eta0.empty()) &&
      c.zeta.empty()) {
    throw Error(ErrorCode::InvalidConfig, "empty sensitivity grid");
  }
  for (int s : c.scenarios) {
    if (s < 1 || s > 8) throw Error(ErrorCode::InvalidConfig, "scenarios are numbered 1..8");
  }
  if (c.reps < 1 || c.n < 10) throw Error(ErrorCode::InvalidConfig, "reps >= 1 and n >= 10 required");
  if (c.oracle_draws < 1000) throw Error(ErrorCode::InvalidConfig, "oracle-draws must be >= 1000");
  parse_design(c);
  parse_methods(c.methods);
  parse_strata(c.strata);
}

Dataset load_input(const RunConfig& c) {
  if (c.input.empty()) throw Error(ErrorCode::InvalidConfig, "--input is required");
  CsvSchema schema;
  schema.covariates = c.covariates;
  schema.z_col = c.z_col;
  schema.s_col = c.s_col;
  schema.time_col = c.time_col;
  schema.event_col = c.event_col;
  return load_csv(c.input, schema, parse_design(c));
}

CovariateList covariate_indices(const Dataset& ds, const std::vector<std::string>& names) {
  if (names.empty()) return std::nullopt;
  const auto& all = ds.covariate_names();
  std::vector<int> idx;
  for (const auto& name : names) {
    const auto it = std::find(all.begin(), all.end(), name);
    if (it == all.end()) throw Error(ErrorCode::MissingColumn, name);
    idx.push_back(static_cast<int>(it - all.begin()));
  }
  return idx;
}

ModelSpec model_spec(const RunConfig& c, const Dataset& ds) {
  ModelSpec m;
  m.propensity = covariate_indices(ds, c.propensity_covariates);
  m.principal = covariate_indices(ds, c.principal_covariates);
  m.outcome = covariate_indices(ds, c.outcome_covariates);
  m.censoring = covariate_indices(ds, c.censoring_covariates);
  return m;
}

std::vector<double> time_grid(const RunConfig& c, const Dataset& ds) {
  double t_max = c.t_max;
  if (t_max == 0.0) {
    std::vector<double> u = ds.u();
    std::sort(u.begin(), u.end());
    t_max = quantile_sorted(u, 0.9);
  }
  return default_grid(t_max, c.grid_points);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

void close_out(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

std::string num(double v) { return fmt_num(v, 10); }

struct Manifest {
  json info = json::object();
  std::vector<std::string> outputs;
};

void write_manifest(const RunConfig& c, const fs::path& dir, const Manifest& m) {
  json j;
  const json cfg = resolved(c);
  j["tool"] = "psce";
  j["version"] = kVersion;
  j["command"] = c.command;
  j["seed"] = c.seed;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(fnv1a(cfg.dump())));
  j["config_hash"] = hash;
  j["config"] = cfg;
  j["outputs"] = m.outputs;
  j["info"] = m.info;
  const fs::path path = dir / "manifest.json";
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  close_out(out, path);
}

// Curve estimates for the selected methods and strata, laid out method,
// stratum, then S1 / S0 / delta blocks over the grid.
std::vector<double> curve_vector(const ModelSpec& models, const std::vector<double>& grid,
                                 const std::vector<Method>& methods,
                                 const std::vector<Stratum>& strata, const Dataset& d) {
  const NuisanceBundle nb = fit_nuisance(d, models);
  const SubjectTable tab = tabulate(nb, d, grid);
  const StandardWeights wm(nb.ps);
  std::vector<double> out;
  for (Method m : methods) {
    for (Stratum g : strata) {
      const auto s1 = arm_curve(nb, d, tab, wm, 1, g, m);
      const auto s0 = arm_curve(nb, d, tab, wm, 0, g, m);
      out.insert(out.end(), s1.begin(), s1.end());
      out.insert(out.end(), s0.begin(), s0.end());
      for (std::size_t k = 0; k < s1.size(); ++k) out.push_back(s1[k] - s0[k]);
    }
  }
  return out;
}

struct Bands {
  std::vector<double> point, se, lo, hi;
  std::size_t failed = 0;
};

Bands run_bootstrap(const RunConfig& c, const Dataset& ds, const Estimator& est) {
  Bands b;
  if (c.bootstrap_B == 0) {
    b.point = est(ds);
    const double na = std::nan("");
    b.se.assign(b.point.size(), na);
    b.lo = b.hi = b.se;
    return b;
  }
  auto r = bootstrap(ds, est, c.bootstrap_B, c.alpha, derive_seed(c.seed, 0, 1));
  b.point = std::move(r.point);
  b.se = std::move(r.se);
  b.lo = std::move(r.lo);
  b.hi = std::move(r.hi);
  b.failed = r.failed_replicates;
  return b;
}

void write_strata_csv(const fs::path& path, const Dataset& ds, const NuisanceBundle& nb) {
  auto out = open_out(path);
  out << "stratum,proportion,covariate,mean,sd,max_asd\n";
  const CovariateSummary sum = strata_covariate_summary(ds, nb.ps);
  for (const auto& st : sum.strata) {
    const double prop = nb.ps.proportion(st.stratum);
    for (std::size_t j = 0; j < sum.covariates.size(); ++j) {
      out << stratum_name(st.stratum) << ',' << num(prop) << ',' << sum.covariates[j] << ','
          << num(st.mean[j]) << ',' << num(st.sd[j]) << ',' << num(sum.max_asd[j]) << '\n';
    }
  }
  close_out(out, path);
}

void fill_bundle_info(Manifest& m, const Dataset& ds, const NuisanceBundle& nb) {
  m.info["n"] = ds.n();
  const auto cells = ds.cell_sizes();
  m.info["cell_sizes"] = {cells[0], cells[1], cells[2], cells[3]};
  m.info["p0_hat"] = nb.ps.p0_hat;
  m.info["p1_hat"] = nb.ps.p1_hat;
  m.info["principal_score_truncations"] = nb.ps.truncations;
  m.info["censor_free_cells"] = nb.censor_free_cells;
}

int cmd_estimate(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  const Dataset ds = load_input(c);
  const ModelSpec models = model_spec(c, ds);
  const auto grid = time_grid(c, ds);
  const auto methods = parse_methods(c.methods);
  const auto strata = parse_strata(c.strata);
  const NuisanceBundle nb = fit_nuisance(ds, models);

  const Estimator est = [&](const Dataset& d) {
    return curve_vector(models, grid, methods, strata, d);
  };
  const Bands b = run_bootstrap(c, ds, est);

  Manifest man;
  const fs::path path = dir / "estimates.csv";
  auto f = open_out(path);
  f << "method,stratum,u,S1,S0,delta,delta_se,delta_lo,delta_hi,flags\n";
  const std::size_t m = grid.size();
  std::size_t base = 0;
  for (Method meth : methods) {
    for (Stratum g : strata) {
      for (std::size_t k = 0; k < m; ++k) {
        const double s1 = b.point[base + k], s0 = b.point[base + m + k];
        const std::size_t d = base + 2 * m + k;
        f << method_name(meth) << ',' << stratum_name(g) << ',' << num(grid[k]) << ','
          << num(s1) << ',' << num(s0) << ',' << num(b.point[d]) << ',' << num(b.se[d])
          << ',' << num(b.lo[d]) << ',' << num(b.hi[d]) << ',' << range_flags(s1, s0) << '\n';
      }
      base += 3 * m;
    }
  }
  close_out(f, path);
  write_strata_csv(dir / "strata.csv", ds, nb);
  man.outputs = {"estimates.csv", "strata.csv"};
  fill_bundle_info(man, ds, nb);
  man.info["bootstrap_failed_replicates"] = b.failed;
  man.info["grid_t_max"] = grid.back();
  write_manifest(c, dir, man);
  out << "wrote " << (dir / "estimates.csv").string() << " and strata.csv\n";
  return kExitOk;
}

int cmd_balance(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  const Dataset ds = load_input(c);
  const NuisanceBundle nb = fit_nuisance(ds, model_spec(c, ds));
  const fs::path path = dir / "balance.csv";
  auto f = open_out(path);
  f << "covariate,stratum,weighted,smd,flag\n";
  Manifest man;
  std::size_t flagged = 0;
  for (bool weighted : {false, true}) {
    const BalanceTable t = smd_balance(ds, nb.ps, weighted);
    man.info[weighted ? "weighted_zero_sd" : "unweighted_zero_sd"] = t.warnings;
    for (const auto& r : t.rows) {
      const std::pair<const char*, double> cols[] = {{"c", r.smd_c}, {"n", r.smd_n}, {"a", r.smd_a}};
      for (const auto& [g, v] : cols) {
        const bool flag = std::abs(v) > kBalanceThreshold;
        if (flag && weighted) ++flagged;
        f << r.covariate << ',' << g << ',' << (weighted ? "true" : "false") << ','
          << num(v) << ',' << (flag ? "true" : "false") << '\n';
      }
    }
  }
  close_out(f, path);
  fill_bundle_info(man, ds, nb);
  man.info["weighted_flags"] = flagged;
  man.outputs = {"balance.csv"};
  write_manifest(c, dir, man);
  out << "wrote " << path.string() << '\n';
  return kExitOk;
}

struct PiSetting {
  double xi1, xi0, eta1, eta0;
};

int cmd_sensitivity(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  const Dataset ds = load_input(c);
  const ModelSpec models = model_spec(c, ds);
  const auto grid = time_grid(c, ds);
  const double t_max = grid.back();
  const auto strata = parse_strata(c.strata);
  const NuisanceBundle nb = fit_nuisance(ds, models);
  const ZetaRange range = zeta_range(nb.ps.p0_hat, nb.ps.p1_hat);

  std::vector<PiSetting> pis;
  for (double a : c.xi1)
    for (double b : c.xi0)
      for (double e1 : c.eta1)
        for (double e0 : c.eta0) pis.push_back({a, b, e1, e0});

  // Zeta values outside the admissible interval are reported, not estimated.
  std::vector<std::string> zeta_status(c.zeta.size());
  for (std::size_t j = 0; j < c.zeta.size(); ++j) {
    if (c.zeta[j] > range.upper) zeta_status[j] = "InadmissibleZeta";
  }
  auto zeta_strata = [&](double z) {
    std::vector<Stratum> g = strata;
    if (z > 0.0) g.push_back(Stratum::d);
    return g;
  };

  const std::size_t m = grid.size();
  const double na = std::nan("");
  // Deltas for every setting; a setting that fails on a dataset yields NaN.
  const Estimator est = [&](const Dataset& d) {
    const NuisanceBundle b = fit_nuisance(d, models);
    const SubjectTable tab = tabulate(b, d, grid);
    std::vector<double> v;
    auto append = [&](const WeightModel* wm, const std::vector<Stratum>& gs) {
      for (Stratum g : gs) {
        if (!wm) {
          v.insert(v.end(), m, na);
          continue;
        }
        try {
          const auto s1 = arm_curve(b, d, tab, *wm, 1, g, Method::mr);
          const auto s0 = arm_curve(b, d, tab, *wm, 0, g, Method::mr);
          for (std::size_t k = 0; k < m; ++k) v.push_back(s1[k] - s0[k]);
        } catch (const Error& e) {
          if (e.category() == ErrorCategory::Config) throw;
          v.insert(v.end(), m, na);
        }
      }
    };
    for (const auto& p : pis) {
      PiSensitivitySpec spec;
      spec.xi1 = p.xi1;
      spec.xi0 = p.xi0;
      spec.eta1 = p.eta1;
      spec.eta0 = p.eta0;
      spec.t_max = t_max;
      const PiViolationWeights wm(b.ps, spec);
      append(&wm, strata);
    }
    for (std::size_t j = 0; j < c.zeta.size(); ++j) {
      const auto gs = zeta_strata(c.zeta[j]);
      std::optional<ZetaWeights> zw;
      if (zeta_status[j].empty()) {
        try {
          zw.emplace(zeta_weights(b, ZetaSpec{c.zeta[j]}));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::InadmissibleZeta) throw;
        }
      }
      append(zw ? &*zw : nullptr, gs);
    }
    return v;
  };
  const Bands b = run_bootstrap(c, ds, est);

  Manifest man;
  std::size_t base = 0;
  {
    const fs::path path = dir / "sensitivity_pi.csv";
    auto f = open_out(path);
    f << "xi1,xi0,eta1,eta0,stratum,u,delta,ci_lo,ci_hi,status\n";
    for (const auto& p : pis) {
      for (Stratum g : strata) {
        const std::string st = std::isnan(b.point[base]) ? "DegenerateDenominator" : "ok";
        for (std::size_t k = 0; k < m; ++k) {
          const std::size_t i = base + k;
          f << num(p.xi1) << ',' << num(p.xi0) << ',' << num(p.eta1) << ',' << num(p.eta0)
            << ',' << stratum_name(g) << ',' << num(grid[k]) << ',' << num(b.point[i]) << ','
            << num(b.lo[i]) << ',' << num(b.hi[i]) << ',' << st << '\n';
        }
        base += m;
      }
    }
    close_out(f, path);
  }
  {
    const fs::path path = dir / "sensitivity_zeta.csv";
    auto f = open_out(path);
    f << "zeta,stratum,u,delta,ci_lo,ci_hi,status\n";
    for (std::size_t j = 0; j < c.zeta.size(); ++j) {
      std::optional<ZetaWeights> zw;
      std::string fail = zeta_status[j];
      if (fail.empty()) {
        try {
          zw.emplace(zeta_weights(nb, ZetaSpec{c.zeta[j]}));
        } catch (const Error& e) {
          fail = to_string(e.code());
        }
      }
      for (Stratum g : zeta_strata(c.zeta[j])) {
        std::string st = fail;
        if (st.empty()) {
          st = zw->proportion(g) >= kStratumFloor && !std::isnan(b.point[base])
                   ? "ok"
                   : "DegenerateDenominator";
        }
        for (std::size_t k = 0; k < m; ++k) {
          const std::size_t i = base + k;
          f << num(c.zeta[j]) << ',' << stratum_name(g) << ',' << num(grid[k]) << ','
            << num(b.point[i]) << ',' << num(b.lo[i]) << ',' << num(b.hi[i]) << ',' << st
            << '\n';
        }
        base += m;
      }
    }
    close_out(f, path);
  }
  {
    const fs::path path = dir / "zeta_range.csv";
    auto f = open_out(path);
    f << "p0_hat,p1_hat,zeta_lower,zeta_upper\n"
      << num(nb.ps.p0_hat) << ',' << num(nb.ps.p1_hat) << ',' << num(range.lower) << ','
      << num(range.upper) << '\n';
    close_out(f, path);
  }
  fill_bundle_info(man, ds, nb);
  man.info["bootstrap_failed_replicates"] = b.failed;
  man.info["zeta_range"] = {range.lower, range.upper};
  man.info["grid_t_max"] = t_max;
  man.outputs = {"sensitivity_pi.csv", "sensitivity_zeta.csv", "zeta_range.csv"};
  write_manifest(c, dir, man);
  out << "wrote sensitivity_pi.csv, sensitivity_zeta.csv and zeta_range.csv to "
      << dir.string() << '\n';
  return kExitOk;
}

int cmd_simulate(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  const Design design = parse_design(c);
  const auto methods = parse_methods(c.methods);
  const auto strata = parse_strata(c.strata);
  std::vector<ScenarioReport> reports;
  std::optional<OracleTable> oracle;
  Manifest man;
  for (int id : c.scenarios) {
    ScenarioSpec spec = ScenarioSpec::scenario(id, design);
    spec.n = static_cast<std::size_t>(c.n);
    spec.reps = static_cast<std::size_t>(c.reps);
    spec.seed = c.seed;
    spec.bootstrap_B = c.bootstrap_B;
    spec.alpha = c.alpha;
    spec.methods = methods;
    spec.strata = strata;
    // Every scenario shares the DGP, so one oracle table serves them all.
    if (!oracle) {
      oracle = compute_oracle(spec.dgp, spec.times, static_cast<std::size_t>(c.oracle_draws));
    }
    out << "scenario " << id << " (" << spec.flags.label() << ")..." << std::flush;
    reports.push_back(run_scenario(spec, &*oracle));
    man.info["failed_reps"][std::to_string(id)] = reports.back().failed_reps;
    out << " done\n";
  }
  {
    const fs::path path = dir / "simulation.csv";
    auto f = open_out(path);
    write_report_csv(reports, f);
    close_out(f, path);
  }
  {
    const fs::path path = dir / "simulation.txt";
    auto f = open_out(path);
    f << format_report_table(reports);
    close_out(f, path);
  }
  man.info["oracle_draws"] = oracle->draws;
  man.info["oracle_seed"] = oracle->seed;
  man.outputs = {"simulation.csv", "simulation.txt"};
  write_manifest(c, dir, man);
  out << format_report_table(reports);
  return kExitOk;
}

int exit_code(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::Config: return kExitConfig;
    case ErrorCategory::Data: return kExitData;
    case ErrorCategory::Numeric: return kExitNumeric;
  }
  return kExitNumeric;
}

const char* category_label(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Data: return "data";
    case ErrorCategory::Numeric: return "numeric";
  }
  return "numeric";
}

}  // namespace

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Principal survival causal effects with noncompliance and censoring", "psce"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  Options opts(app);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its keys");
  opts.add("input", cfg.input, "input CSV");
  opts.add("covariates", cfg.covariates, "covariate columns (default: all other columns)");
  opts.add("z-col", cfg.z_col, "assignment column");
  opts.add("s-col", cfg.s_col, "treatment receipt column");
  opts.add("time-col", cfg.time_col, "observed time column");
  opts.add("event-col", cfg.event_col, "event indicator column");
  opts.add("design", cfg.design, "observational or randomized");
  opts.add("assign-prob", cfg.assign_prob, "P(Z=1) under the randomized design");
  opts.add("propensity-covariates", cfg.propensity_covariates, "covariates of the assignment model");
  opts.add("principal-covariates", cfg.principal_covariates, "covariates of the receipt models");
  opts.add("outcome-covariates", cfg.outcome_covariates, "covariates of the outcome Cox models");
  opts.add("censoring-covariates", cfg.censoring_covariates, "covariates of the censoring Cox models");
  opts.add("grid-points", cfg.grid_points, "number of grid times in (0, t-max]");
  opts.add("t-max", cfg.t_max, "grid end (default: 0.9 quantile of observed times)");
  opts.add("methods", cfg.methods, "sr1, sr2, sr3, mr");
  opts.add("strata", cfg.strata, "a, c, n");
  opts.add("bootstrap-B", cfg.bootstrap_B, "bootstrap replicates (0 disables; default 1000, simulate 500)");
  opts.add("alpha", cfg.alpha, "percentile interval level");
  opts.add("seed", cfg.seed, "master seed");
  opts.add("threads", cfg.threads, "worker threads (0: runtime default)");
  opts.add("out-dir", cfg.out_dir, "output directory");
  opts.add("xi1", cfg.xi1, "extremum parameters for Z=1");
  opts.add("xi0", cfg.xi0, "extremum parameters for Z=0");
  opts.add("eta1", cfg.eta1, "curvature parameters for Z=1");
  opts.add("eta0", cfg.eta0, "curvature parameters for Z=0");
  opts.add("zeta", cfg.zeta, "defier-to-complier ratios");
  opts.add("scenarios", cfg.scenarios, "scenario ids 1..8");
  opts.add("reps", cfg.reps, "Monte Carlo replications per scenario");
  opts.add("n", cfg.n, "sample size per replication");
  opts.add("oracle-draws", cfg.oracle_draws, "covariate draws for the true curves");

  app.add_subcommand("estimate", "principal survival curves and effects");
  app.add_subcommand("balance", "covariate balance across observed cells");
  app.add_subcommand("sensitivity", "sweeps over ignorability and monotonicity violations");
  app.add_subcommand("simulate", "misspecification study on simulated data");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    opts.merge(read_config(config_path));
    cfg.config = config_path;
    cfg.command = app.get_subcommands().front()->get_name();
    validate(cfg);
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
    const fs::path dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
    if (cfg.command == "estimate") return cmd_estimate(cfg, dir, out);
    if (cfg.command == "balance") return cmd_balance(cfg, dir, out);
    if (cfg.command == "sensitivity") return cmd_sensitivity(cfg, dir, out);
    return cmd_simulate(cfg, dir, out);
  } catch (const Error& e) {
    err << "psce: " << category_label(e) << " error: " << e.what() << '\n';
    return exit_code(e);
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"psce"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace psce::cli
