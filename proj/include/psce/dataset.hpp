#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace psce {

// One observed subject. Inside a Dataset the covariate vector carries the
// leading intercept column, so its length equals Dataset::dim().
struct SubjectRecord {
  std::vector<double> covariates;
  int z = 0;
  int s = 0;
  double u = 0.0;
  int delta = 0;
};

struct Design {
  enum class Kind { Observational, Randomized };
  Kind kind = Kind::Observational;
  double assignment_prob = 0.5;  // only meaningful for Randomized

  static Design observational() { return {}; }
  static Design randomized(double prob);
  bool is_randomized() const { return kind == Kind::Randomized; }
};

// Column mapping for CSV ingestion.
struct CsvSchema {
  std::vector<std::string> covariates;  // empty: every column not used below
  std::string z_col = "Z";
  std::string s_col = "S";
  std::string time_col = "U";
  std::string event_col = "delta";
};

// Immutable observed data {X, Z, S, U, delta}. Column 0 of x() is the
// intercept; columns 1..p hold the named covariates in original scale.
class Dataset {
 public:
  Dataset() = default;

  // `covariates` rows exclude the intercept; it is prepended here.
  Dataset(const Eigen::MatrixXd& covariates, std::vector<int> z,
          std::vector<int> s, std::vector<double> u, std::vector<int> delta,
          std::vector<std::string> covariate_names,
          Design design = Design::observational());

  static Dataset from_records(std::span<const SubjectRecord> records,
                              std::vector<std::string> covariate_names,
                              Design design = Design::observational());

  std::size_t n() const { return z_.size(); }
  // Covariate dimension including the intercept.
  std::size_t dim() const { return static_cast<std::size_t>(x_.cols()); }
  std::size_t num_covariates() const { return names_.size(); }

  const Eigen::MatrixXd& x() const { return x_; }
  const std::vector<int>& z() const { return z_; }
  const std::vector<int>& s() const { return s_; }
  const std::vector<double>& u() const { return u_; }
  const std::vector<int>& delta() const { return delta_; }
  const std::vector<std::string>& covariate_names() const { return names_; }
  const Design& design() const { return design_; }

  SubjectRecord record(std::size_t i) const;

  // Cell index 2*z + s, i.e. (0,0)->0, (0,1)->1, (1,0)->2, (1,1)->3.
  int cell(std::size_t i) const { return 2 * z_[i] + s_[i]; }
  std::array<std::size_t, 4> cell_sizes() const;

 private:
  Eigen::MatrixXd x_;
  std::vector<int> z_, s_, delta_;
  std::vector<double> u_;
  std::vector<std::string> names_;
  Design design_;
};

Dataset load_csv(const std::string& path, const CsvSchema& schema,
                 Design design = Design::observational());
Dataset read_csv(std::istream& in, const CsvSchema& schema,
                 Design design = Design::observational());

// Writes the covariates (without intercept) followed by Z, S, U, delta using
// the default schema column names and round-trip precision.
void write_csv(const Dataset& ds, std::ostream& out);
void write_csv(const Dataset& ds, const std::string& path);

// Rows with Z=z and S=s, order preserved. Throws EmptyCell when none match.
Dataset cell_subset(const Dataset& ds, int z, int s);

// Rows at the given positions (repeats allowed); used for resampling.
Dataset take_rows(const Dataset& ds, std::span<const std::size_t> rows);

}  // namespace psce
