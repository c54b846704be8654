#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "psce/cli.hpp"
#include "psce/simulation.hpp"

namespace fs = std::filesystem;
using namespace psce;

namespace {

using Table = std::vector<std::vector<std::string>>;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Table read_table(const fs::path& p) {
  Table t;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    if (!line.empty() && line.back() == ',') row.emplace_back();
    t.push_back(row);
  }
  return t;
}

std::size_t column(const Table& t, const std::string& name) {
  for (std::size_t j = 0; j < t.at(0).size(); ++j) {
    if (t[0][j] == name) return j;
  }
  FAIL("no column " << name);
  return 0;
}

struct Workdir {
  fs::path root;
  explicit Workdir(const std::string& tag) {
    root = fs::temp_directory_path() / ("psce_cli_" + tag);
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Workdir() { fs::remove_all(root); }
  fs::path operator/(const std::string& s) const { return root / s; }
};

fs::path write_sample(const Workdir& w, std::size_t n = 1000, std::uint64_t seed = 8) {
  const fs::path p = w / "data.csv";
  write_csv(simulate_dataset(n, Design::observational(), seed), p.string());
  return p;
}

int run(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("fnv1a reference values") {
  CHECK(cli::fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(cli::fnv1a("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("estimate writes every method, stratum and grid time") {
  Workdir w("estimate");
  const auto data = write_sample(w);
  const std::string out = (w / "out").string();
  REQUIRE(run({"estimate", "--input", data.string(), "--grid-points", "7", "--bootstrap-B", "0",
               "--out-dir", out}) == cli::kExitOk);
  const auto t = read_table(fs::path(out) / "estimates.csv");
  CHECK(t.size() == 1 + 4 * 3 * 7);
  const std::size_t lo = column(t, "delta_lo");
  CHECK(t[1][lo] == "NA");
  const auto strata = read_table(fs::path(out) / "strata.csv");
  CHECK(strata.size() == 1 + 3 * 5);
  CHECK(fs::exists(fs::path(out) / "manifest.json"));
}

TEST_CASE("an unknown column is a configuration error naming the column") {
  Workdir w("unknown");
  const auto data = write_sample(w, 200);
  std::string err;
  const int code = run({"estimate", "--input", data.string(), "--covariates", "X1,X9",
                        "--out-dir", (w / "out").string()},
                       &err);
  CHECK(code == cli::kExitConfig);
  CHECK(err.find("X9") != std::string::npos);
  CHECK(run({"estimate", "--input", (w / "missing.csv").string(), "--out-dir",
             (w / "out").string()}) == cli::kExitData);
  CHECK(run({"estimate", "--no-such-flag"}) == cli::kExitConfig);
  CHECK(run({"estimate", "--input", data.string(), "--zeta", "-0.1", "--out-dir",
             (w / "out").string()}) == cli::kExitConfig);
}

TEST_CASE("reruns are byte identical") {
  Workdir w("determinism");
  const auto data = write_sample(w, 500);
  for (const std::string cmd : {"estimate", "balance", "sensitivity"}) {
    std::vector<std::string> base{cmd, "--input", data.string(), "--grid-points", "4",
                                  "--bootstrap-B", "10", "--seed", "5", "--zeta", "0,0.02"};
    auto a = base, b = base;
    a.insert(a.end(), {"--out-dir", (w / "a").string()});
    b.insert(b.end(), {"--out-dir", (w / "b").string(), "--threads", "1"});
    REQUIRE(run(a) == cli::kExitOk);
    REQUIRE(run(b) == cli::kExitOk);
    for (const auto& f : fs::directory_iterator(w / "a")) {
      CHECK(slurp(f.path()) == slurp(w / "b" / f.path().filename().string()));
    }
    fs::remove_all(w / "a");
    fs::remove_all(w / "b");
  }
}

TEST_CASE("config file keys are overridden by flags") {
  Workdir w("config");
  const auto data = write_sample(w, 300);
  {
    std::ofstream cfg(w / "cfg.json");
    cfg << R"({"input": ")" << data.string() << R"(", "grid-points": 3, "bootstrap-B": 0,)"
        << R"( "methods": ["mr"]})";
  }
  REQUIRE(run({"estimate", "--config", (w / "cfg.json").string(), "--grid-points", "5",
               "--out-dir", (w / "out").string()}) == cli::kExitOk);
  CHECK(read_table(w / "out" / "estimates.csv").size() == 1 + 3 * 5);
  {
    std::ofstream cfg(w / "bad.json");
    cfg << R"({"input": "x.csv", "no_such_key": 1})";
  }
  CHECK(run({"estimate", "--config", (w / "bad.json").string()}) == cli::kExitConfig);
}

TEST_CASE("balance table shape") {
  Workdir w("balance");
  const auto data = write_sample(w, 800);
  REQUIRE(run({"balance", "--input", data.string(), "--out-dir", (w / "out").string()}) ==
          cli::kExitOk);
  const auto t = read_table(w / "out" / "balance.csv");
  CHECK(t.size() == 1 + 5 * 3 * 2);
  const std::size_t flag = column(t, "flag");
  for (std::size_t i = 1; i < t.size(); ++i) {
    CHECK((t[i][flag] == "true" || t[i][flag] == "false"));
  }
}

TEST_CASE("sensitivity: zero zeta reproduces the estimate rows; excess zeta is reported") {
  Workdir w("sensitivity");
  const auto data = write_sample(w, 800);
  const std::vector<std::string> common{"--input", data.string(), "--grid-points", "4",
                                        "--bootstrap-B", "20", "--seed", "11"};
  auto est = common;
  est.insert(est.begin(), "estimate");
  est.insert(est.end(), {"--out-dir", (w / "est").string()});
  auto sens = common;
  sens.insert(sens.begin(), "sensitivity");
  sens.insert(sens.end(), {"--out-dir", (w / "sens").string(), "--zeta", "0,0.05,0.9",
                           "--xi1", "-0.2,0", "--xi0", "0,0.2"});
  REQUIRE(run(est) == cli::kExitOk);
  REQUIRE(run(sens) == cli::kExitOk);

  const auto e = read_table(w / "est" / "estimates.csv");
  const auto z = read_table(w / "sens" / "sensitivity_zeta.csv");
  std::map<std::string, std::vector<std::string>> mr;
  const std::size_t em = column(e, "method"), es = column(e, "stratum"), eu = column(e, "u"),
                    ed = column(e, "delta"), elo = column(e, "delta_lo"),
                    ehi = column(e, "delta_hi");
  for (std::size_t i = 1; i < e.size(); ++i) {
    if (e[i][em] == "mr") mr[e[i][es] + "@" + e[i][eu]] = {e[i][ed], e[i][elo], e[i][ehi]};
  }
  const std::size_t zz = column(z, "zeta"), zs = column(z, "stratum"), zu = column(z, "u"),
                    zd = column(z, "delta"), zlo = column(z, "ci_lo"), zhi = column(z, "ci_hi"),
                    zst = column(z, "status");
  std::size_t matched = 0, inadmissible = 0, defier_rows = 0;
  for (std::size_t i = 1; i < z.size(); ++i) {
    const double zeta = std::stod(z[i][zz]);
    if (zeta == 0.0) {
      const auto& ref = mr.at(z[i][zs] + "@" + z[i][zu]);
      CHECK(z[i][zd] == ref[0]);
      CHECK(z[i][zlo] == ref[1]);
      CHECK(z[i][zhi] == ref[2]);
      ++matched;
    } else if (zeta > 0.5) {
      CHECK(z[i][zst] == "InadmissibleZeta");
      ++inadmissible;
    } else {
      CHECK(z[i][zst] == "ok");
      if (z[i][zs] == "d") ++defier_rows;
    }
  }
  CHECK(matched == 3 * 4);
  CHECK(inadmissible > 0);
  CHECK(defier_rows == 4);

  // The 2 x 2 grid over (xi1, xi0), including xi1 < 0 with xi0 > 0.
  const auto p = read_table(w / "sens" / "sensitivity_pi.csv");
  CHECK(p.size() == 1 + 4 * 3 * 4);
  const std::size_t pst = column(p, "status"), px1 = column(p, "xi1"), px0 = column(p, "xi0");
  bool quadrant = false;
  for (std::size_t i = 1; i < p.size(); ++i) {
    CHECK(p[i][pst] == "ok");
    if (std::stod(p[i][px1]) < 0.0 && std::stod(p[i][px0]) > 0.0) quadrant = true;
  }
  CHECK(quadrant);
  CHECK(read_table(w / "sens" / "zeta_range.csv").size() == 2);
}

TEST_CASE("simulate filters scenarios and switches design") {
  Workdir w("simulate");
  for (const std::string design : {"observational", "randomized"}) {
    const std::string out = (w / design).string();
    REQUIRE(run({"simulate", "--scenarios", "1", "--reps", "3", "--n", "300", "--bootstrap-B",
                 "0", "--oracle-draws", "20000", "--design", design, "--out-dir", out}) ==
            cli::kExitOk);
    const auto t = read_table(fs::path(out) / "simulation.csv");
    CHECK(t.size() == 1 + 4 * 3 * 3 * 5);
    const std::size_t sc = column(t, "scenario"), dg = column(t, "design");
    for (std::size_t i = 1; i < t.size(); ++i) {
      CHECK(t[i][sc] == "1");
      CHECK(t[i][dg] == design);
    }
    CHECK(fs::exists(fs::path(out) / "simulation.txt"));
  }
}

}
