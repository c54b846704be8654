#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "psce/dataset.hpp"
#include "psce/error.hpp"

using namespace psce;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Io;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

const char* kFour =
    "age,score,Z,S,U,delta\n"
    "40,1.5,1,1,2.5,1\n"
    "52,-0.25,0,0,1.0,0\n"
    "33,0.75,1,0,4.0,1\n"
    "61,2,0,1,0.5,1\n";

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("four-row file loads with an intercept column") {
  std::istringstream in(kFour);
  const Dataset ds = read_csv(in, CsvSchema{});
  CHECK(ds.n() == 4);
  CHECK(ds.dim() == 3);
  CHECK(ds.num_covariates() == 2);
  CHECK(ds.covariate_names() == std::vector<std::string>{"age", "score"});
  for (std::size_t i = 0; i < 4; ++i) CHECK(ds.x()(i, 0) == 1.0);
  CHECK(ds.x()(1, 1) == 52.0);
  CHECK(ds.x()(1, 2) == -0.25);
  CHECK(ds.z() == std::vector<int>{1, 0, 1, 0});
  CHECK(ds.s() == std::vector<int>{1, 0, 0, 1});
  CHECK(ds.delta() == std::vector<int>{1, 0, 1, 1});
  CHECK(ds.u()[3] == 0.5);
}

TEST_CASE("explicit covariate selection and column names") {
  std::istringstream in(
      "a,b,trt,recv,time,ev\n1,2,1,0,3,1\n4,5,0,0,6,0\n");
  CsvSchema schema{{"b"}, "trt", "recv", "time", "ev"};
  const Dataset ds = read_csv(in, schema);
  CHECK(ds.dim() == 2);
  CHECK(ds.x()(1, 1) == 5.0);
  CHECK(ds.u()[1] == 6.0);
}

TEST_CASE("U=0 in row 3 is rejected with the row number") {
  const std::string bad =
      "X,Z,S,U,delta\n1,1,1,1,1\n2,0,0,2,1\n3,1,0,0,1\n";
  auto load = [&] {
    std::istringstream in(bad);
    read_csv(in, CsvSchema{});
  };
  CHECK(code_of(load) == ErrorCode::NonPositiveTime);
  CHECK(message_of(load).find("row=3") != std::string::npos);
}

TEST_CASE("missing delta column names the column") {
  auto load = [] {
    std::istringstream in("X,Z,S,U\n1,1,1,1\n");
    read_csv(in, CsvSchema{});
  };
  CHECK(code_of(load) == ErrorCode::MissingColumn);
  CHECK(message_of(load).find("delta") != std::string::npos);
}

TEST_CASE("non-binary flags and missing values are rejected") {
  auto flag = [] {
    std::istringstream in("X,Z,S,U,delta\n1,2,1,1,1\n");
    read_csv(in, CsvSchema{});
  };
  CHECK(code_of(flag) == ErrorCode::NonBinaryFlag);
  auto missing = [] {
    std::istringstream in("X,Z,S,U,delta\n,1,1,1,1\n");
    read_csv(in, CsvSchema{});
  };
  CHECK(code_of(missing) == ErrorCode::MissingValue);
  auto nan = [] {
    std::istringstream in("X,Z,S,U,delta\nNA,1,1,1,1\n");
    read_csv(in, CsvSchema{});
  };
  CHECK(code_of(nan) == ErrorCode::MissingValue);
}

TEST_CASE("cell_subset filters and preserves order") {
  const Dataset ds = testing::make_dataset({{1}, {2}, {3}}, {1, 1, 0}, {1, 0, 0},
                                           {1, 2, 3}, {1, 1, 1});
  const Dataset c11 = cell_subset(ds, 1, 1);
  CHECK(c11.n() == 1);
  CHECK(c11.x()(0, 1) == 1.0);
  CHECK(code_of([&] { cell_subset(ds, 0, 1); }) == ErrorCode::EmptyCell);
  const Dataset c00 = cell_subset(ds, 0, 0);
  CHECK(c00.u()[0] == 3.0);
}

TEST_CASE("cells partition the sample") {
  std::vector<std::vector<double>> x;
  std::vector<int> z, s, d;
  std::vector<double> u;
  for (int i = 0; i < 37; ++i) {
    x.push_back({static_cast<double>(i)});
    z.push_back(i % 2);
    s.push_back((i / 3) % 2);
    u.push_back(1.0 + i);
    d.push_back(i % 5 != 0);
  }
  const Dataset ds = testing::make_dataset(x, z, s, u, d);
  std::size_t total = 0;
  for (int zz = 0; zz < 2; ++zz)
    for (int ss = 0; ss < 2; ++ss) total += cell_subset(ds, zz, ss).n();
  CHECK(total == ds.n());
  const auto sizes = ds.cell_sizes();
  CHECK(sizes[0] + sizes[1] + sizes[2] + sizes[3] == ds.n());
}

TEST_CASE("write then read reproduces every value bit for bit") {
  const Dataset ds = testing::make_dataset(
      {{0.1, -1.0 / 3.0}, {1e-300, 123456.789}, {2.0 / 7.0, -0.0}}, {1, 0, 1},
      {0, 1, 1}, {0.123456789012345678, 5.5, 1e-9}, {1, 0, 1});
  std::ostringstream out;
  write_csv(ds, out);
  std::istringstream in(out.str());
  const Dataset back = read_csv(in, CsvSchema{});
  CHECK(back.n() == ds.n());
  CHECK(back.x() == ds.x());
  CHECK(back.u() == ds.u());
  CHECK(back.z() == ds.z());
  CHECK(back.s() == ds.s());
  CHECK(back.delta() == ds.delta());
  CHECK(back.covariate_names() == ds.covariate_names());
}

TEST_CASE("take_rows repeats rows in the requested order") {
  const Dataset ds = testing::make_dataset({{1}, {2}, {3}}, {1, 0, 1}, {1, 0, 0},
                                           {1, 2, 3}, {1, 0, 1});
  const std::vector<std::size_t> rows{2, 2, 0};
  const Dataset t = take_rows(ds, rows);
  CHECK(t.n() == 3);
  CHECK(t.x()(0, 1) == 3.0);
  CHECK(t.x()(1, 1) == 3.0);
  CHECK(t.x()(2, 1) == 1.0);
  CHECK(t.delta() == std::vector<int>{1, 1, 1});
}

TEST_CASE("randomized design needs a probability inside (0, 1)") {
  CHECK(code_of([] { Design::randomized(1.0); }) == ErrorCode::InvalidConfig);
  CHECK(Design::randomized(0.5).is_randomized());
}

}
