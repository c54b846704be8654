#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace psce::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

// Resolved settings after merging the JSON config file with command-line
// flags (flags win). Option names double as JSON keys.
struct RunConfig {
  std::string command;
  std::string input;
  std::string config;
  std::vector<std::string> covariates;
  std::string z_col = "Z";
  std::string s_col = "S";
  std::string time_col = "U";
  std::string event_col = "delta";
  std::string design = "observational";
  double assign_prob = 0.5;
  std::vector<std::string> propensity_covariates;
  std::vector<std::string> principal_covariates;
  std::vector<std::string> outcome_covariates;
  std::vector<std::string> censoring_covariates;
  int grid_points = 50;
  double t_max = 0.0;  // 0: the 0.9 quantile of observed times
  std::vector<std::string> methods{"sr1", "sr2", "sr3", "mr"};
  std::vector<std::string> strata{"a", "c", "n"};
  int bootstrap_B = -1;  // -1: 1000, or 500 for simulate
  double alpha = 0.05;
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out_dir = "psce_out";
  std::vector<double> xi1{0.0};
  std::vector<double> xi0{0.0};
  std::vector<double> eta1{1.0};
  std::vector<double> eta0{1.0};
  std::vector<double> zeta{0.0};
  std::vector<int> scenarios{1, 2, 3, 4, 5, 6, 7, 8};
  int reps = 500;
  int n = 1000;
  long long oracle_draws = 10'000'000;
};

// Parses argv (argv[0] is the program name), runs the command and returns
// the exit status. Diagnostics go to `err`, progress and help to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);

}  // namespace psce::cli
