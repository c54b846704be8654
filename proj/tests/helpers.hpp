#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "psce/dataset.hpp"

namespace testing {

// Coordinate-free zoom search for the maximizer of a concave function:
// evaluate a (2k+1)^d lattice, recentre on the best point, shrink, repeat.
inline Eigen::VectorXd zoom_maximize(const std::function<double(const Eigen::VectorXd&)>& f,
                                     Eigen::VectorXd centre, double half_width,
                                     int rounds = 60, int k = 6) {
  const auto d = centre.size();
  for (int r = 0; r < rounds; ++r) {
    Eigen::VectorXd best = centre;
    double best_val = f(centre);
    std::vector<int> idx(d, -k);
    while (true) {
      Eigen::VectorXd p = centre;
      for (Eigen::Index j = 0; j < d; ++j) p[j] += half_width * idx[j] / k;
      const double v = f(p);
      if (v > best_val) {
        best_val = v;
        best = p;
      }
      Eigen::Index j = 0;
      while (j < d && ++idx[j] > k) idx[j++] = -k;
      if (j == d) break;
    }
    centre = best;
    half_width *= 0.5;
  }
  return centre;
}

inline psce::Dataset make_dataset(const std::vector<std::vector<double>>& x,
                                  std::vector<int> z, std::vector<int> s,
                                  std::vector<double> u, std::vector<int> delta) {
  const std::size_t n = x.size(), p = n ? x[0].size() : 0;
  Eigen::MatrixXd m(n, p);
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("X" + std::to_string(j + 1));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) m(i, j) = x[i][j];
  return psce::Dataset(m, std::move(z), std::move(s), std::move(u), std::move(delta), names);
}

}  // namespace testing
