#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "psce/error.hpp"
#include "psce/simulation.hpp"

using namespace psce;

namespace {

ScenarioSpec small_spec(int id, std::size_t reps, int B) {
  auto s = ScenarioSpec::scenario(id);
  s.reps = reps;
  s.n = 400;
  s.bootstrap_B = B;
  s.seed = 99;
  return s;
}

bool same_report(const ScenarioReport& a, const ScenarioReport& b) {
  if (a.rows.size() != b.rows.size() || a.failed_reps != b.failed_reps) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const auto& x = a.rows[i];
    const auto& y = b.rows[i];
    const bool cov = (std::isnan(x.coverage) && std::isnan(y.coverage)) || x.coverage == y.coverage;
    if (x.mean != y.mean || x.bias != y.bias || x.mc_se != y.mc_se || !cov ||
        x.truth != y.truth || x.reps_used != y.reps_used) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("simulation_lab") {

TEST_CASE("covariate construction") {
  const std::size_t n = 20'000;
  const Dataset ds = simulate_dataset(n, Design::observational(), 12);
  REQUIRE(ds.num_covariates() == 5);
  const double root_n = std::sqrt(static_cast<double>(n));
  double m1 = 0.0, m4 = 0.0, m5 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x2 = ds.x()(i, 2), x3 = ds.x()(i, 3);
    CHECK(ds.x()(i, 4) == doctest::Approx(x2 * x2 - 1.0));
    CHECK(ds.x()(i, 5) == doctest::Approx(x3 * x3 - 1.0));
    const double x1 = ds.x()(i, 1);
    CHECK((x1 == 0.0 || x1 == 1.0));
    m1 += x1;
    m4 += ds.x()(i, 4);
    m5 += ds.x()(i, 5);
  }
  // sd of X4 and X5 is sqrt(2).
  CHECK(std::abs(m4 / n) <= 3.0 * std::sqrt(2.0) / root_n);
  CHECK(std::abs(m5 / n) <= 3.0 * std::sqrt(2.0) / root_n);
  CHECK(std::abs(m1 / n - 0.5) <= 3.0 * 0.5 / root_n);
}

TEST_CASE("true model values") {
  const std::array<double, 5> zero{};
  // Control non-receipt cell at X = 0: exponential with rate e^-1.
  CHECK(std::log(2.0) / true_hazard(0, 0, zero) == doctest::Approx(std::log(2.0) * std::exp(1.0)));
  CHECK(std::log(2.0) / true_hazard(0, 0, zero) == doctest::Approx(1.886).epsilon(0.002));
  CHECK(true_receipt(0, zero) == doctest::Approx(1.0 / (1.0 + std::exp(0.5))));
  CHECK(true_receipt(1, zero) == doctest::Approx(1.0 / (1.0 + std::exp(-0.5))));
  DgpSpec obs, rnd;
  rnd.design = Design::randomized(0.5);
  const std::array<double, 5> x{1.0, 0.3, -0.2, 0.5, -0.4};
  CHECK(true_propensity(obs, x) == doctest::Approx(1.0 / (1.0 + std::exp(-(0.25 - 0.16)))));
  CHECK(true_propensity(rnd, x) == 0.5);
  CHECK(true_censoring_hazard(zero) == doctest::Approx(std::exp(-2.0)));
  const auto e = true_strata(obs, x);
  CHECK(e[0] + e[1] + e[2] + e[3] == doctest::Approx(1.0));
  CHECK(e[3] == 0.0);
}

TEST_CASE("draws are stable across seeds and reproducible within one") {
  const std::size_t n = 5000;
  std::array<double, 4> share{};
  double events = 0.0;
  const int seeds = 6;
  std::vector<std::array<double, 5>> per_seed;
  for (int sd = 0; sd < seeds; ++sd) {
    const Dataset ds = simulate_dataset(n, Design::observational(), 1000 + sd);
    std::array<double, 5> v{};
    for (std::size_t i = 0; i < n; ++i) {
      v[ds.cell(i)] += 1.0 / n;
      v[4] += ds.delta()[i] / static_cast<double>(n);
    }
    per_seed.push_back(v);
    for (int c = 0; c < 4; ++c) share[c] += v[c] / seeds;
    events += v[4] / seeds;
  }
  for (const auto& v : per_seed) {
    for (int c = 0; c < 4; ++c) {
      CHECK(std::abs(v[c] - share[c]) <= 4.0 * std::sqrt(share[c] * (1 - share[c]) / n));
    }
    CHECK(std::abs(v[4] - events) <= 4.0 * std::sqrt(events * (1 - events) / n));
  }
  const Dataset a = simulate_dataset(300, Design::observational(), 5);
  const Dataset b = simulate_dataset(300, Design::observational(), 5);
  CHECK(a.u() == b.u());
  CHECK(a.s() == b.s());
  CHECK(a.x() == b.x());
}

TEST_CASE("randomized design assigns with probability one half") {
  const Dataset ds = simulate_dataset(20'000, Design::randomized(0.5), 3);
  double z = 0.0;
  for (int v : ds.z()) z += v;
  CHECK(std::abs(z / ds.n() - 0.5) < 3.0 * 0.5 / std::sqrt(20'000.0));
  CHECK(ds.design().is_randomized());
}

TEST_CASE("oracle truths for the control compliers") {
  const std::vector<double> times{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  const auto o = compute_oracle(DgpSpec{}, times);
  CHECK(o.at(0, Stratum::c, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(o.at(0, Stratum::c, 1.0) - 0.695) <= 0.002);
  CHECK(std::abs(o.at(0, Stratum::c, 2.0) - 0.517) <= 0.002);
  CHECK(std::abs(o.at(0, Stratum::c, 3.0) - 0.397) <= 0.002);
  CHECK(std::abs(o.at(0, Stratum::c, 4.0) - 0.309) <= 0.002);
  CHECK(std::abs(o.at(0, Stratum::c, 5.0) - 0.245) <= 0.002);
  CHECK(oracle_truth(Stratum::c, 0, 1.0) == o.at(0, Stratum::c, 1.0));
  for (int z : {0, 1}) {
    for (Stratum g : {Stratum::a, Stratum::c, Stratum::n}) {
      for (std::size_t k = 1; k < times.size(); ++k) {
        CHECK(o.at(z, g, k) < o.at(z, g, k - 1));
      }
    }
  }
  CHECK_THROWS_AS(o.at(0, Stratum::c, 2.5), Error);
}

TEST_CASE("oracle cache round trip") {
  const auto path = std::filesystem::temp_directory_path() / "psce_oracle_cache_test.json";
  std::filesystem::remove(path);
  const std::vector<double> times{1.0, 2.5};
  const auto a = cached_oracle(path.string(), DgpSpec{}, times, 20'000, 4);
  REQUIRE(std::filesystem::exists(path));
  const auto b = cached_oracle(path.string(), DgpSpec{}, times, 20'000, 4);
  const auto c = compute_oracle(DgpSpec{}, times, 20'000, 4);
  for (int z : {0, 1}) {
    for (Stratum g : {Stratum::a, Stratum::c, Stratum::n}) {
      CHECK(a.value[z][static_cast<int>(g)] == b.value[z][static_cast<int>(g)]);
      CHECK(a.value[z][static_cast<int>(g)] == c.value[z][static_cast<int>(g)]);
    }
  }
  // A different draw count is recomputed, not read back.
  const auto d = cached_oracle(path.string(), DgpSpec{}, times, 10'000, 4);
  CHECK(d.draws == 10'000);
  std::filesystem::remove(path);
}

TEST_CASE("scenario matrix") {
  CHECK(scenario_flags(1).label() == "TTTT");
  CHECK(scenario_flags(2).label() == "TTFT");
  CHECK(scenario_flags(7).label() == "FFTF");
  CHECK(scenario_flags(8).label() == "FFFF");
  CHECK_THROWS_AS(scenario_flags(9), Error);
  const auto spec = model_spec(scenario_flags(5));
  CHECK(spec.propensity == CovariateList(std::vector<int>{0, 1, 2}));
  CHECK_FALSE(spec.principal.has_value());
  CHECK(spec.outcome == CovariateList(std::vector<int>{0, 1, 2}));
  CHECK_FALSE(spec.censoring.has_value());
}

TEST_CASE("reports are reproducible and the parallel run matches the serial one") {
  const std::vector<double> times{1.0, 2.0, 3.0, 4.0, 5.0};
  const auto oracle = compute_oracle(DgpSpec{}, times, 200'000);
  const auto spec = small_spec(3, 8, 20);
  const auto a = run_scenario(spec, &oracle);
  const auto b = run_scenario(spec, &oracle);
  const auto s = run_scenario_serial(spec, &oracle);
  CHECK(same_report(a, b));
  CHECK(same_report(a, s));
  for (const auto& r : a.rows) {
    CHECK(r.bias == r.mean - r.truth);
    CHECK(r.mc_se >= 0.0);
    CHECK(r.coverage >= 0.0);
    CHECK(r.coverage <= 1.0);
  }
  // 4 methods, 3 strata, 3 estimands, 5 times.
  CHECK(a.rows.size() == 4 * 3 * 3 * 5);
  std::ostringstream csv;
  write_report_csv({a}, csv);
  std::size_t lines = 0;
  for (char ch : csv.str()) lines += ch == '\n';
  CHECK(lines == a.rows.size() + 1);
  CHECK(format_report_table({a}).find("FTTF") != std::string::npos);
}

TEST_CASE("coverage is NA without a bootstrap") {
  const std::vector<double> times{1.0, 2.0, 3.0, 4.0, 5.0};
  const auto oracle = compute_oracle(DgpSpec{}, times, 100'000);
  const auto r = run_scenario(small_spec(1, 4, 0), &oracle);
  for (const auto& row : r.rows) CHECK(std::isnan(row.coverage));
  CHECK(format_report_table({r}).find("NA") != std::string::npos);
}

}
