#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "merr/point_bag.hpp"
#include "merr/taylor_features.hpp"

namespace merr {

/// <mu_a, mu_b>_H = (1/(N_a N_b)) sum_n sum_m k(a_n, b_m), the set kernel.
///
/// The two bags are put in a canonical order before summation, so the
/// result is bit-identical under exchange of the arguments.
double embedding_inner(const BaseKernelSpec& spec, const PointBag& a, const PointBag& b);

/// ||mu_a - mu_b||_H^2, clamped below at zero.
double embedding_sq_dist(const BaseKernelSpec& spec, const PointBag& a, const PointBag& b);

/// Pairwise inner products of a collection of empirical mean embeddings.
class EmbeddingGeometry {
 public:
  /// Symmetrizes nothing; `inner` must already be square and symmetric.
  explicit EmbeddingGeometry(Eigen::MatrixXd inner);

  Eigen::Index size() const { return inner_.rows(); }
  const Eigen::MatrixXd& inner() const { return inner_; }
  double inner(Eigen::Index i, Eigen::Index j) const { return inner_(i, j); }
  const Eigen::VectorXd& diag() const { return diag_; }
  /// Clamped squared RKHS distance between embeddings i and j.
  double sq_dist(Eigen::Index i, Eigen::Index j) const;

 private:
  Eigen::MatrixXd inner_;
  Eigen::VectorXd diag_;
};

/// Tiled OpenMP assembly; entry (i,j) is exactly embedding_inner(bags[i], bags[j]).
EmbeddingGeometry embedding_gram(const BaseKernelSpec& spec, std::span<const PointBag> bags);

/// Single-threaded naive quadruple loop. Reference for tests and benchmarks.
EmbeddingGeometry embedding_gram_serial(const BaseKernelSpec& spec,
                                        std::span<const PointBag> bags);

/// Radius r with P(||mu_x - mu_xhat||_H > r) <= exp(-alpha) for a bag of N points.
double concentration_radius(double kernel_bound, std::int64_t n_points, double alpha);

/// Median pairwise Euclidean distance over at most `max_pairs` point pairs.
double median_heuristic_bandwidth(std::span<const PointBag> bags, std::int64_t max_pairs = 10000,
                                  std::uint64_t seed = 0);

enum class EmbeddingMethod { exact, taylor, automatic };

std::string_view to_string(EmbeddingMethod method);
EmbeddingMethod parse_embedding_method(std::string_view name);

/// Set-kernel geometry of a fixed training collection, plus cross terms
/// against new bags.
///
/// The exact method evaluates every point pair. The taylor method (gaussian
/// base kernel only) represents each embedding by a truncated Taylor feature
/// vector whose truncation error is below 1e-15 for every point inside the
/// certified radius; test bags with points outside it fall back to exact sums.
class Embedder {
 public:
  Embedder(BaseKernelSpec spec, std::vector<PointBag> train, EmbeddingMethod method);

  const BaseKernelSpec& spec() const { return spec_; }
  const std::vector<PointBag>& train_bags() const { return train_; }
  /// Resolved method: never `automatic`.
  EmbeddingMethod method() const { return method_; }
  const EmbeddingGeometry& geometry() const { return geometry_; }

  /// <mu_i, mu_t> for every training bag i.
  Eigen::VectorXd cross_inner(const PointBag& test) const;
  /// <mu_t, mu_t>.
  double self_inner(const PointBag& test) const;

 private:
  BaseKernelSpec spec_;
  std::vector<PointBag> train_;
  EmbeddingMethod method_;
  std::optional<GaussianTaylorFeatures> features_;
  Eigen::MatrixXd train_features_;  // l x F, rows are feature-space embeddings
  EmbeddingGeometry geometry_;
};

}  // namespace merr
