#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "merr/point_bag.hpp"

namespace merr {

/// Finite feature map for the gaussian kernel built from the expansion
///
///   exp(-|u-v|^2 / 2s^2) = sum_alpha phi_alpha(u) phi_alpha(v),
///   phi_alpha(x) = exp(-|x|^2 / 2s^2) prod_j (x_j/s)^alpha_j / sqrt(alpha_j!),
///
/// truncated at total degree `degree` around `center`. For a point at scaled
/// radius r the omitted mass sum_{|alpha|>degree} phi_alpha^2 is the Poisson(r^2)
/// upper tail, so the kernel error between two points inside the certified
/// radius is bounded by that tail (Cauchy-Schwarz).
class GaussianTaylorFeatures {
 public:
  /// Smallest degree certifying `tolerance` for all points within `radius`
  /// (Euclidean distance to `center`, unscaled). Returns nullopt when more than
  /// `max_features` features would be needed.
  static std::optional<GaussianTaylorFeatures> certify(double bandwidth, Eigen::RowVectorXd center,
                                                       double radius, double tolerance = 1e-16,
                                                       std::int64_t max_features = 20000);

  /// Center and radius chosen from the bounding box of `bags`, inflated by `margin`.
  static std::optional<GaussianTaylorFeatures> for_bags(double bandwidth,
                                                        std::span<const PointBag> bags,
                                                        double margin = 1.25,
                                                        std::int64_t max_features = 20000);

  int degree() const { return degree_; }
  Eigen::Index dim() const { return center_.size(); }
  Eigen::Index num_features() const { return num_features_; }
  double certified_radius() const { return radius_; }

  /// True when every point of the bag lies inside the certified radius.
  bool covers(const PointBag& bag) const;

  /// Mean feature vector (1/N) sum_n phi(x_n).
  Eigen::VectorXd embed(const PointBag& bag) const;

 private:
  GaussianTaylorFeatures(double bandwidth, Eigen::RowVectorXd center, double radius, int degree);

  double bandwidth_;
  Eigen::RowVectorXd center_;
  double radius_;
  int degree_;
  Eigen::Index num_features_ = 0;
  // Flattened multi-indices, dim() entries per feature.
  std::vector<int> multi_indices_;
};

/// Smallest K with P(Poisson(mean) > K) <= tolerance.
int poisson_tail_degree(double mean, double tolerance);

}  // namespace merr
