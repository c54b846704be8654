#include "psce/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "psce/error.hpp"
#include "psce/format.hpp"

namespace psce {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? std::string()
                                            : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool is_missing_token(const std::string& f) {
  return f.empty() || f == "NA" || f == "na" || f == "NaN" || f == "nan" ||
         f == ".";
}

double parse_number(const std::string& f, std::size_t row,
                    const std::string& col) {
  if (is_missing_token(f)) {
    throw Error(ErrorCode::MissingValue,
                "row=" + std::to_string(row) + " column=" + col);
  }
  double v = 0.0;
  const auto* end = f.data() + f.size();
  auto [ptr, ec] = std::from_chars(f.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw Error(ErrorCode::MissingValue, "row=" + std::to_string(row) +
                                             " column=" + col +
                                             " unparseable '" + f + "'");
  }
  return v;
}

int parse_flag(const std::string& f, std::size_t row, const std::string& col) {
  const double v = parse_number(f, row, col);
  if (v != 0.0 && v != 1.0) {
    throw Error(ErrorCode::NonBinaryFlag,
                "row=" + std::to_string(row) + " column=" + col);
  }
  return static_cast<int>(v);
}

}  // namespace

Design Design::randomized(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) {
    throw Error(ErrorCode::InvalidConfig,
                "randomized design requires 0 < prob < 1");
  }
  return Design{Kind::Randomized, prob};
}

Dataset::Dataset(const Eigen::MatrixXd& covariates, std::vector<int> z,
                 std::vector<int> s, std::vector<double> u,
                 std::vector<int> delta,
                 std::vector<std::string> covariate_names, Design design)
    : z_(std::move(z)),
      s_(std::move(s)),
      delta_(std::move(delta)),
      u_(std::move(u)),
      names_(std::move(covariate_names)),
      design_(design) {
  const auto n = static_cast<Eigen::Index>(z_.size());
  if (covariates.rows() != n || static_cast<Eigen::Index>(s_.size()) != n ||
      static_cast<Eigen::Index>(u_.size()) != n ||
      static_cast<Eigen::Index>(delta_.size()) != n ||
      static_cast<std::size_t>(covariates.cols()) != names_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "dataset column lengths differ");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i) + 1;
    if ((z_[i] != 0 && z_[i] != 1) || (s_[i] != 0 && s_[i] != 1) ||
        (delta_[i] != 0 && delta_[i] != 1)) {
      throw Error(ErrorCode::NonBinaryFlag, "row=" + std::to_string(row));
    }
    if (!(u_[i] > 0.0) || !std::isfinite(u_[i])) {
      throw Error(ErrorCode::NonPositiveTime, "row=" + std::to_string(row));
    }
    for (Eigen::Index j = 0; j < covariates.cols(); ++j) {
      if (!std::isfinite(covariates(i, j))) {
        throw Error(ErrorCode::MissingValue, "row=" + std::to_string(row));
      }
    }
  }
  x_.resize(n, covariates.cols() + 1);
  x_.col(0).setOnes();
  x_.rightCols(covariates.cols()) = covariates;
}

Dataset Dataset::from_records(std::span<const SubjectRecord> records,
                              std::vector<std::string> covariate_names,
                              Design design) {
  const auto n = records.size();
  const auto p = covariate_names.size();
  Eigen::MatrixXd cov(n, p);
  std::vector<int> z(n), s(n), delta(n);
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records[i];
    if (r.covariates.size() != p) {
      throw Error(ErrorCode::DimensionMismatch,
                  "record " + std::to_string(i + 1) + " has " +
                      std::to_string(r.covariates.size()) + " covariates");
    }
    for (std::size_t j = 0; j < p; ++j) cov(i, j) = r.covariates[j];
    z[i] = r.z;
    s[i] = r.s;
    u[i] = r.u;
    delta[i] = r.delta;
  }
  return Dataset(cov, std::move(z), std::move(s), std::move(u),
                 std::move(delta), std::move(covariate_names), design);
}

SubjectRecord Dataset::record(std::size_t i) const {
  SubjectRecord r;
  r.covariates.resize(dim());
  for (std::size_t j = 0; j < dim(); ++j) r.covariates[j] = x_(i, j);
  r.z = z_[i];
  r.s = s_[i];
  r.u = u_[i];
  r.delta = delta_[i];
  return r;
}

std::array<std::size_t, 4> Dataset::cell_sizes() const {
  std::array<std::size_t, 4> sizes{};
  for (std::size_t i = 0; i < n(); ++i) ++sizes[cell(i)];
  return sizes;
}

Dataset read_csv(std::istream& in, const CsvSchema& schema, Design design) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::Io, "empty CSV (header row required)");
  }
  const auto header = split_line(line);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < header.size(); ++j) index[header[j]] = j;

  auto require = [&](const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) throw Error(ErrorCode::MissingColumn, name);
    return it->second;
  };
  const auto zc = require(schema.z_col);
  const auto sc = require(schema.s_col);
  const auto uc = require(schema.time_col);
  const auto dc = require(schema.event_col);

  std::vector<std::string> names = schema.covariates;
  if (names.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j != zc && j != sc && j != uc && j != dc) names.push_back(header[j]);
    }
  }
  std::vector<std::size_t> cov_cols;
  for (const auto& name : names) cov_cols.push_back(require(name));

  std::vector<std::vector<double>> cov_rows;
  std::vector<int> z, s, delta;
  std::vector<double> u;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    auto fields = split_line(line);
    if (fields.size() < header.size()) fields.resize(header.size());
    std::vector<double> cov(cov_cols.size());
    for (std::size_t j = 0; j < cov_cols.size(); ++j) {
      cov[j] = parse_number(fields[cov_cols[j]], row, names[j]);
    }
    z.push_back(parse_flag(fields[zc], row, schema.z_col));
    s.push_back(parse_flag(fields[sc], row, schema.s_col));
    const double t = parse_number(fields[uc], row, schema.time_col);
    if (!(t > 0.0)) {
      throw Error(ErrorCode::NonPositiveTime, "row=" + std::to_string(row));
    }
    u.push_back(t);
    delta.push_back(parse_flag(fields[dc], row, schema.event_col));
    cov_rows.push_back(std::move(cov));
  }
  Eigen::MatrixXd cov(cov_rows.size(), names.size());
  for (std::size_t i = 0; i < cov_rows.size(); ++i) {
    for (std::size_t j = 0; j < names.size(); ++j) cov(i, j) = cov_rows[i][j];
  }
  return Dataset(cov, std::move(z), std::move(s), std::move(u),
                 std::move(delta), std::move(names), design);
}

Dataset load_csv(const std::string& path, const CsvSchema& schema,
                 Design design) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return read_csv(in, schema, design);
}

void write_csv(const Dataset& ds, std::ostream& out) {
  const CsvSchema defaults;
  for (const auto& name : ds.covariate_names()) out << name << ',';
  out << defaults.z_col << ',' << defaults.s_col << ',' << defaults.time_col
      << ',' << defaults.event_col << '\n';
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t j = 1; j < ds.dim(); ++j) {
      out << fmt_exact(ds.x()(i, j)) << ',';
    }
    out << ds.z()[i] << ',' << ds.s()[i] << ',' << fmt_exact(ds.u()[i]) << ','
        << ds.delta()[i] << '\n';
  }
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  write_csv(ds, out);
}

Dataset take_rows(const Dataset& ds, std::span<const std::size_t> rows) {
  const auto p = ds.num_covariates();
  Eigen::MatrixXd cov(rows.size(), p);
  std::vector<int> z(rows.size()), s(rows.size()), delta(rows.size());
  std::vector<double> u(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto i = rows[k];
    cov.row(k) = ds.x().row(i).tail(p);
    z[k] = ds.z()[i];
    s[k] = ds.s()[i];
    u[k] = ds.u()[i];
    delta[k] = ds.delta()[i];
  }
  return Dataset(cov, std::move(z), std::move(s), std::move(u),
                 std::move(delta), ds.covariate_names(), ds.design());
}

Dataset cell_subset(const Dataset& ds, int z, int s) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    if (ds.z()[i] == z && ds.s()[i] == s) rows.push_back(i);
  }
  if (rows.empty()) {
    throw Error(ErrorCode::EmptyCell, "cell (Z=" + std::to_string(z) +
                                          ",S=" + std::to_string(s) + ")");
  }
  return take_rows(ds, rows);
}

}  // namespace psce
