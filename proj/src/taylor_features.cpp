#include "merr/taylor_features.hpp"

#include <cmath>
#include <limits>

#include "merr/error.hpp"

namespace merr {

int poisson_tail_degree(double mean, double tolerance) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw InvalidArgument("poisson_tail_degree: bad mean");
  if (mean == 0.0) return 0;
  // For K + 2 > mean the tail after K is dominated by a geometric series:
  // P(X > K) <= p_{K+1} / (1 - mean / (K + 2)).
  int k = static_cast<int>(std::floor(mean));
  while (true) {
    const double next = static_cast<double>(k + 1);
    const double log_p = -mean + next * std::log(mean) - std::lgamma(next + 1.0);
    const double ratio = mean / (next + 1.0);
    if (ratio < 1.0 && std::exp(log_p) / (1.0 - ratio) <= tolerance) return k;
    ++k;
  }
}

namespace {

// Number of multi-indices in d variables with total degree <= K, or -1 above cap.
std::int64_t graded_count(int degree, Eigen::Index dim, std::int64_t cap) {
  // C(K + d, d) computed incrementally.
  double c = 1.0;
  for (Eigen::Index j = 1; j <= dim; ++j) {
    c = c * static_cast<double>(degree + j) / static_cast<double>(j);
    if (c > static_cast<double>(cap)) return -1;
  }
  return static_cast<std::int64_t>(std::llround(c));
}

void enumerate(int remaining, Eigen::Index pos, std::vector<int>& current, std::vector<int>& out) {
  if (pos == static_cast<Eigen::Index>(current.size())) {
    out.insert(out.end(), current.begin(), current.end());
    return;
  }
  for (int k = 0; k <= remaining; ++k) {
    current[static_cast<std::size_t>(pos)] = k;
    enumerate(remaining - k, pos + 1, current, out);
  }
}

}  // namespace

GaussianTaylorFeatures::GaussianTaylorFeatures(double bandwidth, Eigen::RowVectorXd center, double radius,
                                               int degree)
    : bandwidth_(bandwidth), center_(std::move(center)), radius_(radius), degree_(degree) {
  std::vector<int> current(static_cast<std::size_t>(center_.size()), 0);
  enumerate(degree_, 0, current, multi_indices_);
  num_features_ = static_cast<Eigen::Index>(multi_indices_.size()) / center_.size();
}

std::optional<GaussianTaylorFeatures> GaussianTaylorFeatures::certify(double bandwidth, Eigen::RowVectorXd center,
                                                                      double radius, double tolerance,
                                                                      std::int64_t max_features) {
  if (!(bandwidth > 0.0)) throw InvalidArgument("taylor features: bandwidth must be positive");
  if (center.size() < 1) throw InvalidArgument("taylor features: empty center");
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw InvalidArgument("taylor features: bad radius");
  const double scaled = radius / bandwidth;
  const double mean = scaled * scaled;
  // Degrees beyond a few thousand are never worth it; bail out before the
  // tail search has to walk that far.
  if (mean > 4000.0) return std::nullopt;
  const int degree = poisson_tail_degree(mean, tolerance);
  if (graded_count(degree, center.size(), max_features) < 0) return std::nullopt;
  return GaussianTaylorFeatures(bandwidth, std::move(center), radius, degree);
}

std::optional<GaussianTaylorFeatures> GaussianTaylorFeatures::for_bags(double bandwidth,
                                                                       std::span<const PointBag> bags,
                                                                       double margin,
                                                                       std::int64_t max_features) {
  if (bags.empty()) throw InvalidArgument("taylor features: no bags");
  const Eigen::Index d = bags.front().dim();
  Eigen::RowVectorXd lo = Eigen::RowVectorXd::Constant(d, std::numeric_limits<double>::infinity());
  Eigen::RowVectorXd hi = -lo;
  for (const auto& bag : bags) {
    if (bag.dim() != d) throw InvalidArgument("taylor features: bag dimension mismatch");
    lo = lo.cwiseMin(bag.points().colwise().minCoeff());
    hi = hi.cwiseMax(bag.points().colwise().maxCoeff());
  }
  Eigen::RowVectorXd center = 0.5 * (lo + hi);
  double radius = 0.0;
  for (const auto& bag : bags)
    radius = std::max(radius, (bag.points().rowwise() - center).rowwise().norm().maxCoeff());
  return certify(bandwidth, std::move(center), margin * radius, 1e-16, max_features);
}

bool GaussianTaylorFeatures::covers(const PointBag& bag) const {
  if (bag.dim() != dim()) return false;
  return (bag.points().rowwise() - center_).rowwise().norm().maxCoeff() <= radius_;
}

Eigen::VectorXd GaussianTaylorFeatures::embed(const PointBag& bag) const {
  if (bag.dim() != dim()) throw InvalidArgument("taylor features: dimension mismatch");
  const Eigen::Index d = dim();
  const int kmax = degree_;
  std::vector<double> inv_sqrt(static_cast<std::size_t>(kmax) + 1, 1.0);
  for (int k = 1; k <= kmax; ++k) inv_sqrt[static_cast<std::size_t>(k)] = 1.0 / std::sqrt(static_cast<double>(k));

  // powers[j * (K+1) + k] = exp(-z_j^2/2) z_j^k / sqrt(k!)
  std::vector<double> powers(static_cast<std::size_t>(d * (kmax + 1)));
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(num_features_);
  for (Eigen::Index n = 0; n < bag.size(); ++n) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double z = (bag.points()(n, j) - center_(j)) / bandwidth_;
      double* p = powers.data() + j * (kmax + 1);
      p[0] = std::exp(-0.5 * z * z);
      for (int k = 1; k <= kmax; ++k) p[k] = p[k - 1] * z * inv_sqrt[static_cast<std::size_t>(k)];
    }
    if (d == 1) {
      for (Eigen::Index f = 0; f < num_features_; ++f) sum(f) += powers[static_cast<std::size_t>(f)];
      continue;
    }
    const int* idx = multi_indices_.data();
    for (Eigen::Index f = 0; f < num_features_; ++f, idx += d) {
      double v = 1.0;
      for (Eigen::Index j = 0; j < d; ++j) v *= powers[static_cast<std::size_t>(j * (kmax + 1) + idx[j])];
      sum(f) += v;
    }
  }
  return sum / static_cast<double>(bag.size());
}

}  // namespace merr
