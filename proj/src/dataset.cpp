#include "merr/dataset.hpp"

#include <cmath>
#include <string>

#include "merr/error.hpp"

namespace merr {

LabeledDataset::LabeledDataset(std::vector<PointBag> bags, Eigen::MatrixXd labels, double label_bound)
    : bags_(std::move(bags)), labels_(std::move(labels)), label_bound_(label_bound) {
  if (bags_.empty()) throw InvalidArgument("dataset: no bags");
  if (labels_.rows() != static_cast<Eigen::Index>(bags_.size()))
    throw InvalidArgument("dataset: label rows do not match bag count");
  if (labels_.cols() < 1) throw InvalidArgument("dataset: labels need at least one column");
  if (!labels_.allFinite()) throw InvalidArgument("dataset: non-finite label");
  if (!(label_bound_ > 0.0)) throw InvalidArgument("dataset: label bound must be positive");
  for (const auto& bag : bags_)
    if (bag.dim() != bags_.front().dim()) throw InvalidArgument("dataset: inconsistent point dimension");
  for (Eigen::Index i = 0; i < labels_.rows(); ++i) {
    const double norm = labels_.row(i).norm();
    if (norm > label_bound_)
      throw InvalidArgument("dataset: label " + std::to_string(i) + " has norm " + std::to_string(norm) +
                            " above the bound " + std::to_string(label_bound_));
  }
}

LabeledDataset LabeledDataset::subset(const std::vector<Eigen::Index>& indices) const {
  std::vector<PointBag> bags;
  Eigen::MatrixXd labels(static_cast<Eigen::Index>(indices.size()), labels_.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const Eigen::Index i = indices[r];
    if (i < 0 || i >= size()) throw InvalidArgument("dataset subset: index out of range");
    bags.push_back(bags_[static_cast<std::size_t>(i)]);
    labels.row(static_cast<Eigen::Index>(r)) = labels_.row(i);
  }
  return LabeledDataset(std::move(bags), std::move(labels), label_bound_);
}

}  // namespace merr
