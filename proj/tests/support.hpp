#pragma once

// Test-side generators and independent oracles. Nothing here calls the
// library code it is used to check.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "merr/point_bag.hpp"

namespace merr::test {

inline PointBag bag_of(std::initializer_list<std::initializer_list<double>> rows) {
  PointMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return PointBag(std::move(m));
}

inline PointBag scalar_bag(std::initializer_list<double> values) {
  PointMatrix m(static_cast<Eigen::Index>(values.size()), 1);
  Eigen::Index i = 0;
  for (double v : values) m(i++, 0) = v;
  return PointBag(std::move(m));
}

inline PointBag random_bag(std::mt19937_64& gen, Eigen::Index n, Eigen::Index d, double shift = 0.0,
                           double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  PointMatrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = shift + scale * normal(gen);
  return PointBag(std::move(m));
}

inline std::vector<PointBag> random_bags(std::mt19937_64& gen, int l, Eigen::Index max_n, Eigen::Index d,
                                         bool equal_sizes = false) {
  std::uniform_int_distribution<Eigen::Index> size(1, max_n);
  std::uniform_real_distribution<double> shift(-1.5, 1.5);
  std::vector<PointBag> bags;
  for (int i = 0; i < l; ++i) bags.push_back(random_bag(gen, equal_sizes ? max_n : size(gen), d, shift(gen)));
  return bags;
}

/// Base kernels written out from their textbook formulas.
inline double oracle_kernel(const std::string& family, double sigma, const double* u, const double* v, int d) {
  double sq = 0.0, l1 = 0.0;
  for (int j = 0; j < d; ++j) {
    sq += (u[j] - v[j]) * (u[j] - v[j]);
    l1 += std::abs(u[j] - v[j]);
  }
  if (family == "gaussian") return std::exp(-sq / (2.0 * sigma * sigma));
  if (family == "laplacian") return std::exp(-l1 / sigma);
  return 1.0 / (1.0 + sq / (sigma * sigma));
}

/// Naive quadruple loop over bag pairs and point pairs.
inline Eigen::MatrixXd oracle_set_gram(const std::string& family, double sigma, const std::vector<PointBag>& bags) {
  const auto l = static_cast<Eigen::Index>(bags.size());
  Eigen::MatrixXd g(l, l);
  for (Eigen::Index i = 0; i < l; ++i)
    for (Eigen::Index j = 0; j < l; ++j) {
      const auto& a = bags[static_cast<std::size_t>(i)].points();
      const auto& b = bags[static_cast<std::size_t>(j)].points();
      double s = 0.0;
      for (Eigen::Index n = 0; n < a.rows(); ++n)
        for (Eigen::Index m = 0; m < b.rows(); ++m)
          s += oracle_kernel(family, sigma, &a(n, 0), &b(m, 0), static_cast<int>(a.cols()));
      g(i, j) = s / static_cast<double>(a.rows() * b.rows());
    }
  return g;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

inline double max_rel_err(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  return (got - want).cwiseAbs().maxCoeff() / std::max(want.cwiseAbs().maxCoeff(), 1e-300);
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("merr_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace merr::test
