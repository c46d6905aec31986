#pragma once

#include <limits>
#include <vector>

#include <Eigen/Core>

#include "merr/point_bag.hpp"

namespace merr {

/// l bags with labels y_i in R^d and a recorded label bound C (||y_i||_2 <= C).
class LabeledDataset {
 public:
  /// Throws InvalidArgument on empty input, row mismatch, inconsistent bag
  /// dimensions, non-finite labels, or a label exceeding `label_bound`.
  LabeledDataset(std::vector<PointBag> bags, Eigen::MatrixXd labels,
                 double label_bound = std::numeric_limits<double>::infinity());

  Eigen::Index size() const { return labels_.rows(); }
  Eigen::Index output_dim() const { return labels_.cols(); }
  Eigen::Index point_dim() const { return bags_.front().dim(); }
  const std::vector<PointBag>& bags() const { return bags_; }
  const Eigen::MatrixXd& labels() const { return labels_; }
  double label_bound() const { return label_bound_; }

  /// Sub-dataset with the given bag indices, in order.
  LabeledDataset subset(const std::vector<Eigen::Index>& indices) const;

 private:
  std::vector<PointBag> bags_;
  Eigen::MatrixXd labels_;
  double label_bound_;
};

}  // namespace merr
