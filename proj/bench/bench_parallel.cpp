// Times the OpenMP kernels against their serial references and checks that
// both produce the same numbers.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include <omp.h>

#include "psce/bootstrap.hpp"
#include "psce/estimators.hpp"
#include "psce/simulation.hpp"

using namespace psce;

namespace {

double seconds(const std::function<void()>& f, int repeat) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < repeat; ++r) f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / repeat;
}

void report(const char* name, double serial, double parallel, bool same) {
  std::printf("%-12s serial %9.4f s  parallel %9.4f s  speedup %5.2fx  %s\n", name,
              serial, parallel, serial / parallel, same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 5000;
  const int B = argc > 2 ? std::atoi(argv[2]) : 40;
  std::printf("threads %d, n %zu, bootstrap B %d\n", omp_get_max_threads(), n, B);

  const Dataset ds = simulate_dataset(n, Design::observational(), 11);
  const NuisanceBundle nb = fit_nuisance(ds);
  const auto grid = default_grid(5.0, 50);

  SubjectTable ts, tp;
  const double t_ser = seconds([&] { ts = tabulate_serial(nb, ds, grid); }, 3);
  const double t_par = seconds([&] { tp = tabulate(nb, ds, grid); }, 3);
  bool same = ts.ipcw == tp.ipcw && ts.bracket == tp.bracket;
  for (int c = 0; c < 4; ++c) same = same && ts.surv[c] == tp.surv[c];
  report("tabulate", t_ser, t_par, same);

  const Estimator est = [&grid](const Dataset& d) {
    const NuisanceBundle b = fit_nuisance(d);
    const PsceEstimate e = psce_curve(b, d, grid, Method::mr, {});
    std::vector<double> out;
    for (const auto& c : e.curves) out.insert(out.end(), c.delta.begin(), c.delta.end());
    return out;
  };
  BootstrapResult bs, bp;
  const double b_ser = seconds([&] { bs = bootstrap_serial(ds, est, B, 0.05, 3); }, 1);
  const double b_par = seconds([&] { bp = bootstrap(ds, est, B, 0.05, 3); }, 1);
  const bool same_boot = bs.replicates == bp.replicates && bs.lo == bp.lo && bs.hi == bp.hi;
  report("bootstrap", b_ser, b_par, same_boot);

  ScenarioSpec spec = ScenarioSpec::scenario(1);
  spec.reps = 40;
  spec.bootstrap_B = 0;
  const OracleTable oracle = compute_oracle(spec.dgp, spec.times, 200'000);
  ScenarioReport rs, rp;
  const double s_ser = seconds([&] { rs = run_scenario_serial(spec, &oracle); }, 1);
  const double s_par = seconds([&] { rp = run_scenario(spec, &oracle); }, 1);
  bool same_rep = rs.rows.size() == rp.rows.size();
  for (std::size_t i = 0; same_rep && i < rs.rows.size(); ++i) {
    same_rep = rs.rows[i].mean == rp.rows[i].mean && rs.rows[i].mc_se == rp.rows[i].mc_se;
  }
  report("scenario", s_ser, s_par, same_rep);
  return same && same_boot && same_rep ? 0 : 1;
}
