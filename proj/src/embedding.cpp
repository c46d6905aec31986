#include "merr/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include <random>

#include <omp.h>

#include "merr/error.hpp"
#include "merr/rng.hpp"

namespace merr {

namespace {

void check_same_dim(const PointBag& a, const PointBag& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("bag dimension mismatch");
}

// Total order on bags (size, then entries) used to canonicalize summation.
bool canonically_before(const PointBag& a, const PointBag& b) {
  if (&a.points() == &b.points()) return true;
  if (a.size() != b.size()) return a.size() < b.size();
  const double* pa = a.points().data();
  const double* pb = b.points().data();
  const Eigen::Index n = a.points().size();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pa[i] != pb[i]) return pa[i] < pb[i];
  }
  return true;
}

// Row-major double sum: outer loop over `a`, each row accumulated separately.
double set_kernel_sum(const BaseKernelSpec& spec, const PointBag& a, const PointBag& b) {
  const Eigen::Index d = a.dim();
  const double* pa = a.points().data();
  const double* pb = b.points().data();
  double total = 0.0;
  for (Eigen::Index n = 0; n < a.size(); ++n) {
    double row = 0.0;
    for (Eigen::Index m = 0; m < b.size(); ++m)
      row += detail::base_kernel_unchecked(spec.family, spec.bandwidth, pa + n * d, pb + m * d, d);
    total += row;
  }
  return total / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

void check_collection(std::span<const PointBag> bags) {
  if (bags.empty()) throw InvalidArgument("embedding gram: no bags");
  for (const auto& bag : bags) check_same_dim(bags.front(), bag);
}

constexpr Eigen::Index kTile = 16;

}  // namespace

double embedding_inner(const BaseKernelSpec& spec, const PointBag& a, const PointBag& b) {
  validate(spec);
  check_same_dim(a, b);
  return canonically_before(a, b) ? set_kernel_sum(spec, a, b) : set_kernel_sum(spec, b, a);
}

double embedding_sq_dist(const BaseKernelSpec& spec, const PointBag& a, const PointBag& b) {
  const double aa = embedding_inner(spec, a, a);
  const double bb = embedding_inner(spec, b, b);
  const double ab = embedding_inner(spec, a, b);
  return std::max(0.0, aa + bb - 2.0 * ab);
}

EmbeddingGeometry::EmbeddingGeometry(Eigen::MatrixXd inner) : inner_(std::move(inner)) {
  if (inner_.rows() != inner_.cols() || inner_.rows() == 0)
    throw InvalidArgument("EmbeddingGeometry: inner-product matrix must be square and non-empty");
  if (!inner_.allFinite()) throw NumericError("EmbeddingGeometry: non-finite inner product");
  diag_ = inner_.diagonal();
}

double EmbeddingGeometry::sq_dist(Eigen::Index i, Eigen::Index j) const {
  return std::max(0.0, diag_(i) + diag_(j) - 2.0 * inner_(i, j));
}

EmbeddingGeometry embedding_gram(const BaseKernelSpec& spec, std::span<const PointBag> bags) {
  validate(spec);
  check_collection(bags);
  const auto l = static_cast<Eigen::Index>(bags.size());
  const Eigen::Index tiles = (l + kTile - 1) / kTile;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> tile_pairs;
  for (Eigen::Index ti = 0; ti < tiles; ++ti)
    for (Eigen::Index tj = ti; tj < tiles; ++tj) tile_pairs.emplace_back(ti, tj);

  Eigen::MatrixXd inner(l, l);
  const auto n_tiles = static_cast<std::int64_t>(tile_pairs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t t = 0; t < n_tiles; ++t) {
    const auto [ti, tj] = tile_pairs[static_cast<std::size_t>(t)];
    const Eigen::Index i_end = std::min(l, (ti + 1) * kTile);
    const Eigen::Index j_end = std::min(l, (tj + 1) * kTile);
    for (Eigen::Index i = ti * kTile; i < i_end; ++i) {
      for (Eigen::Index j = std::max(i, tj * kTile); j < j_end; ++j) {
        const auto& a = bags[static_cast<std::size_t>(i)];
        const auto& b = bags[static_cast<std::size_t>(j)];
        const double v = canonically_before(a, b) ? set_kernel_sum(spec, a, b) : set_kernel_sum(spec, b, a);
        inner(i, j) = v;
        inner(j, i) = v;
      }
    }
  }
  return EmbeddingGeometry(std::move(inner));
}

EmbeddingGeometry embedding_gram_serial(const BaseKernelSpec& spec, std::span<const PointBag> bags) {
  validate(spec);
  check_collection(bags);
  const auto l = static_cast<Eigen::Index>(bags.size());
  Eigen::MatrixXd inner(l, l);
  for (Eigen::Index i = 0; i < l; ++i) {
    for (Eigen::Index j = 0; j < l; ++j) {
      const auto& a = bags[static_cast<std::size_t>(i)];
      const auto& b = bags[static_cast<std::size_t>(j)];
      double sum = 0.0;
      for (Eigen::Index n = 0; n < a.size(); ++n)
        for (Eigen::Index m = 0; m < b.size(); ++m)
          sum += detail::base_kernel_unchecked(spec.family, spec.bandwidth, a.points().row(n).data(),
                                               b.points().row(m).data(), a.dim());
      inner(i, j) = sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
    }
  }
  return EmbeddingGeometry(std::move(inner));
}

double concentration_radius(double kernel_bound, std::int64_t n_points, double alpha) {
  if (!(kernel_bound > 0.0)) throw InvalidArgument("concentration_radius: B_k must be positive");
  if (n_points < 1) throw InvalidArgument("concentration_radius: N must be >= 1");
  if (!(alpha > 0.0)) throw InvalidArgument("concentration_radius: alpha must be positive");
  return (1.0 + std::sqrt(alpha)) * std::sqrt(2.0 * kernel_bound) / std::sqrt(static_cast<double>(n_points));
}

double median_heuristic_bandwidth(std::span<const PointBag> bags, std::int64_t max_pairs,
                                  std::uint64_t seed) {
  if (bags.empty()) throw InvalidArgument("median heuristic: no bags");
  if (max_pairs < 1) throw InvalidArgument("median heuristic: max_pairs must be >= 1");
  std::vector<const double*> pts;
  const Eigen::Index d = bags.front().dim();
  for (const auto& bag : bags) {
    if (bag.dim() != d) throw InvalidArgument("median heuristic: bag dimension mismatch");
    for (Eigen::Index n = 0; n < bag.size(); ++n) pts.push_back(bag.points().data() + n * d);
  }
  const auto n = static_cast<std::int64_t>(pts.size());
  if (n < 2) throw InvalidArgument("median heuristic: need at least two points");

  auto dist = [d](const double* u, const double* v) {
    double sq = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) sq += (u[j] - v[j]) * (u[j] - v[j]);
    return std::sqrt(sq);
  };

  std::vector<double> dists;
  const double total_pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  if (total_pairs <= static_cast<double>(max_pairs)) {
    for (std::int64_t i = 0; i < n; ++i)
      for (std::int64_t j = i + 1; j < n; ++j) dists.push_back(dist(pts[i], pts[j]));
  } else {
    CounterRng rng(derive_key(seed, StreamKind::pair_sample, {}));
    std::uniform_int_distribution<std::int64_t> pick(0, n - 1);
    dists.reserve(static_cast<std::size_t>(max_pairs));
    while (static_cast<std::int64_t>(dists.size()) < max_pairs) {
      const std::int64_t i = pick(rng);
      const std::int64_t j = pick(rng);
      if (i != j) dists.push_back(dist(pts[i], pts[j]));
    }
  }
  std::sort(dists.begin(), dists.end());
  const std::size_t m = dists.size();
  const double median = (m % 2 == 1) ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
  if (!(median > 0.0)) throw NumericError("median heuristic: zero bandwidth (points coincide)");
  return median;
}

std::string_view to_string(EmbeddingMethod method) {
  switch (method) {
    case EmbeddingMethod::exact: return "exact";
    case EmbeddingMethod::taylor: return "taylor";
    case EmbeddingMethod::automatic: return "auto";
  }
  return "?";
}

EmbeddingMethod parse_embedding_method(std::string_view name) {
  if (name == "exact") return EmbeddingMethod::exact;
  if (name == "taylor") return EmbeddingMethod::taylor;
  if (name == "auto" || name == "automatic") return EmbeddingMethod::automatic;
  throw InvalidArgument("unknown embedding method: " + std::string(name));
}

namespace {

EmbeddingGeometry taylor_geometry(const GaussianTaylorFeatures& features,
                                  std::span<const PointBag> bags, Eigen::MatrixXd& psi) {
  const auto l = static_cast<Eigen::Index>(bags.size());
  psi.resize(l, features.num_features());
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index i = 0; i < l; ++i) psi.row(i) = features.embed(bags[static_cast<std::size_t>(i)]).transpose();
  Eigen::MatrixXd inner = psi * psi.transpose();
  inner = (0.5 * (inner + inner.transpose())).eval();
  return EmbeddingGeometry(std::move(inner));
}

std::vector<PointBag> checked(std::vector<PointBag> bags) {
  check_collection(bags);
  return bags;
}

}  // namespace

Embedder::Embedder(BaseKernelSpec spec, std::vector<PointBag> train, EmbeddingMethod method)
    : spec_(spec), train_(checked(std::move(train))), method_(method), geometry_(Eigen::MatrixXd::Zero(1, 1)) {
  validate(spec_);
  if (method_ != EmbeddingMethod::exact) {
    if (spec_.family == BaseFamily::gaussian) features_ = GaussianTaylorFeatures::for_bags(spec_.bandwidth, train_);
    if (method_ == EmbeddingMethod::taylor && !features_)
      throw InvalidArgument("taylor embedding requires a gaussian base kernel and a bounded feature count");
    if (method_ == EmbeddingMethod::automatic) {
      double points = 0.0;
      for (const auto& bag : train_) points += static_cast<double>(bag.size());
      const double d = static_cast<double>(train_.front().dim());
      const double exact_cost = 0.5 * points * points * d;
      double taylor_cost = 0.0;
      if (features_) {
        const double f = static_cast<double>(features_->num_features());
        const double l = static_cast<double>(train_.size());
        taylor_cost = points * f * d + 0.5 * l * l * f;
      }
      if (!features_ || 4.0 * taylor_cost >= exact_cost) features_.reset();
    }
    method_ = features_ ? EmbeddingMethod::taylor : EmbeddingMethod::exact;
  }
  if (method_ == EmbeddingMethod::taylor) {
    geometry_ = taylor_geometry(*features_, train_, train_features_);
  } else {
    geometry_ = embedding_gram(spec_, train_);
  }
}

Eigen::VectorXd Embedder::cross_inner(const PointBag& test) const {
  check_same_dim(train_.front(), test);
  if (features_ && features_->covers(test)) return train_features_ * features_->embed(test);
  const auto l = static_cast<Eigen::Index>(train_.size());
  Eigen::VectorXd out(l);
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index i = 0; i < l; ++i) out(i) = embedding_inner(spec_, train_[static_cast<std::size_t>(i)], test);
  return out;
}

double Embedder::self_inner(const PointBag& test) const {
  check_same_dim(train_.front(), test);
  if (features_ && features_->covers(test)) return features_->embed(test).squaredNorm();
  return embedding_inner(spec_, test, test);
}

}  // namespace merr
