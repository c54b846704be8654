#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "psce/error.hpp"
#include "psce/estimators.hpp"
#include "psce/simulation.hpp"
#include "psce/strata.hpp"

using namespace psce;

TEST_SUITE("principal_strata") {

TEST_CASE("scores follow the monotone decomposition") {
  const std::vector<double> p0{0.1, 0.3, 0.0}, p1{0.6, 0.3 + 1e-3, 1.0};
  const auto ps = principal_scores(p0, p1);
  CHECK(ps.truncations == 0);
  CHECK(ps.e_a[0] == doctest::Approx(0.1));
  CHECK(ps.e_c[0] == doctest::Approx(0.5));
  CHECK(ps.e_n[0] == doctest::Approx(0.4));
  CHECK(ps.e_c[2] == doctest::Approx(1.0));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(ps.e_a[i] + ps.e_c[i] + ps.e_n[i] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ps.e_d[i] == 0.0);
  }
}

TEST_CASE("complier scores below the floor are truncated and counted") {
  const std::vector<double> p0{0.5, 0.4}, p1{0.45, 0.4};
  const auto ps = principal_scores(p0, p1);
  CHECK(ps.truncations == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(ps.e_c[i] > 0.0);
    CHECK(ps.e_c[i] < 2e-6);
    CHECK(ps.e_a[i] >= 0.0);
    CHECK(ps.e_n[i] >= 0.0);
    CHECK(ps.e_a[i] + ps.e_c[i] + ps.e_n[i] == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("scores are nonnegative and sum to one for random inputs") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> p0(500), p1(500);
  for (std::size_t i = 0; i < 500; ++i) {
    p0[i] = unif(gen);
    p1[i] = unif(gen);
  }
  const auto ps = principal_scores(p0, p1);
  for (std::size_t i = 0; i < 500; ++i) {
    CHECK(ps.e_a[i] >= 0.0);
    CHECK(ps.e_c[i] >= kStratumFloor * 0.5);
    CHECK(ps.e_n[i] >= 0.0);
    CHECK(ps.e_a[i] + ps.e_c[i] + ps.e_n[i] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("marginal proportions come from the receipt marginals") {
  auto ps = principal_scores(std::vector<double>{0.2}, std::vector<double>{0.7});
  set_marginals(ps, {0.25, 0.65});
  CHECK(ps.proportion(Stratum::a) == doctest::Approx(0.25));
  CHECK(ps.proportion(Stratum::c) == doctest::Approx(0.40));
  CHECK(ps.proportion(Stratum::n) == doctest::Approx(0.35));
  CHECK(ps.proportion(Stratum::d) == 0.0);
}

TEST_CASE("doubly robust receipt marginals survive one wrong model") {
  const Dataset ds = simulate_dataset(20'000, Design::observational(), 77);
  std::vector<double> pi(ds.n()), p0(ds.n()), p1(ds.n()), half(ds.n(), 0.5);
  std::vector<double> x(kSimCovariates);
  double t0 = 0.0, t1 = 0.0;
  DgpSpec dgp;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t j = 0; j < kSimCovariates; ++j) x[j] = ds.x()(i, j + 1);
    pi[i] = true_propensity(dgp, x);
    p0[i] = true_receipt(0, x);
    p1[i] = true_receipt(1, x);
    t0 += p0[i];
    t1 += p1[i];
  }
  t0 /= ds.n();
  t1 /= ds.n();
  const auto both = dr_marginal_pz(ds, pi, p0, p1);
  const auto wrong_receipt = dr_marginal_pz(ds, pi, half, half);
  const auto wrong_prop = dr_marginal_pz(ds, half, p0, p1);
  for (const auto& m : {both, wrong_receipt, wrong_prop}) {
    CHECK(std::abs(m.p0_hat - t0) < 0.02);
    CHECK(std::abs(m.p1_hat - t1) < 0.02);
  }
  // Both wrong: the naive cell share is visibly off.
  const auto neither = dr_marginal_pz(ds, half, half, half);
  CHECK(std::abs(neither.p0_hat - t0) + std::abs(neither.p1_hat - t1) > 0.02);
}

TEST_CASE("absolute standardized difference") {
  CHECK(absolute_standardized_difference(1.0, 1.0, 0.0, 1.0) == doctest::Approx(1.0));
  CHECK(absolute_standardized_difference(0.0, 3.0, 2.0, 1.0) ==
        doctest::Approx(2.0 / std::sqrt(5.0)));
  CHECK(absolute_standardized_difference(1.0, 0.0, 2.0, 0.0) == 0.0);
}

TEST_CASE("constant scores give the overall covariate moments") {
  const Dataset ds = simulate_dataset(300, Design::observational(), 2);
  auto ps = principal_scores(std::vector<double>(300, 0.2), std::vector<double>(300, 0.7));
  set_marginals(ps, {0.2, 0.7});
  const auto sum = strata_covariate_summary(ds, ps);
  REQUIRE(sum.strata.size() == 3);
  for (std::size_t j = 0; j < ds.num_covariates(); ++j) {
    const auto col = ds.x().col(static_cast<Eigen::Index>(j + 1));
    const double m = col.mean();
    const double sd = std::sqrt((col.array() - m).square().mean());
    for (const auto& st : sum.strata) {
      CHECK(st.mean[j] == doctest::Approx(m).epsilon(1e-10));
      CHECK(st.sd[j] == doctest::Approx(sd).epsilon(1e-10));
    }
    CHECK(sum.max_asd[j] < 1e-10);
  }
}

TEST_CASE("an empty stratum raises DegenerateStratum") {
  const Dataset ds = simulate_dataset(100, Design::observational(), 2);
  auto ps = principal_scores(std::vector<double>(100, 0.0), std::vector<double>(100, 0.6));
  set_marginals(ps, {0.0, 0.6});
  CHECK_THROWS_AS(strata_covariate_summary(ds, ps), Error);
}

TEST_CASE("weighting changes nothing when the scores are constant") {
  const Dataset ds = simulate_dataset(800, Design::observational(), 9);
  auto ps = principal_scores(std::vector<double>(800, 0.3), std::vector<double>(800, 0.6));
  set_marginals(ps, {0.3, 0.6});
  const auto u = smd_balance(ds, ps, false);
  const auto w = smd_balance(ds, ps, true);
  REQUIRE(u.rows.size() == ds.num_covariates());
  REQUIRE(w.rows.size() == ds.num_covariates());
  CHECK(w.weighted);
  CHECK_FALSE(u.weighted);
  for (std::size_t j = 0; j < u.rows.size(); ++j) {
    CHECK(u.rows[j].covariate == w.rows[j].covariate);
    CHECK(w.rows[j].smd_c == doctest::Approx(u.rows[j].smd_c).epsilon(1e-12));
    CHECK(w.rows[j].smd_n == doctest::Approx(u.rows[j].smd_n).epsilon(1e-12));
    CHECK(w.rows[j].smd_a == doctest::Approx(u.rows[j].smd_a).epsilon(1e-12));
  }
}

TEST_CASE("unweighted SMD against a hand computation") {
  // X by cell: (1,1): 1, 3; (0,0): 0, 2; (1,0): 5, 5; (0,1): 1, 2.
  const Dataset ds = testing::make_dataset({{1}, {3}, {0}, {2}, {5}, {5}, {1}, {2}},
                                           {1, 1, 0, 0, 1, 1, 0, 0}, {1, 1, 0, 0, 0, 0, 1, 1},
                                           {1, 1, 1, 1, 1, 1, 1, 1}, {1, 1, 1, 1, 1, 1, 1, 1});
  auto ps = principal_scores(std::vector<double>(8, 0.3), std::vector<double>(8, 0.6));
  set_marginals(ps, {0.3, 0.6});
  const auto t = smd_balance(ds, ps, false);
  // Cell variances use n - 1: (1,1) 2, (0,0) 2, (1,0) 0, (0,1) 0.5.
  CHECK(t.rows[0].smd_c == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(t.rows[0].smd_n == doctest::Approx(4.0 / 1.0));
  CHECK(t.rows[0].smd_a == doctest::Approx(0.5 / std::sqrt(1.25)));
}

TEST_CASE("balance needs all four cells") {
  const Dataset ds = testing::make_dataset({{1}, {2}}, {1, 0}, {1, 0}, {1, 1}, {1, 1});
  auto ps = principal_scores(std::vector<double>(2, 0.3), std::vector<double>(2, 0.6));
  try {
    smd_balance(ds, ps, false);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyCell);
  }
}

}
