#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "merr/dataset.hpp"
#include "merr/embedding.hpp"
#include "merr/outer_kernel.hpp"

namespace merr {

struct FitOptions {
  EmbeddingMethod embedding = EmbeddingMethod::exact;
};

/// Factorized (K + l*lambda*I + jitter*I) and the dual coefficients of the
/// closed-form mean-embedding ridge regressor f(mu) = k(mu) alpha.
class TrainedModel {
 public:
  /// Refactorizes the regularized Gram with the given jitter and adopts
  /// precomputed duals (used when loading a persisted model).
  TrainedModel(std::shared_ptr<const Embedder> embedder, OuterKernelSpec outer, double lambda,
               Eigen::MatrixXd duals, double jitter);

  const BaseKernelSpec& base() const { return embedder_->spec(); }
  const OuterKernelSpec& outer() const { return outer_; }
  double lambda() const { return lambda_; }
  double jitter_used() const { return jitter_; }
  const Eigen::MatrixXd& duals() const { return duals_; }
  /// Lower-triangular Cholesky factor of K + l*lambda*I + jitter*I.
  const Eigen::MatrixXd& factor() const { return factor_; }
  const Eigen::MatrixXd& gram() const { return gram_; }
  const Embedder& embedder() const { return *embedder_; }
  const std::vector<PointBag>& train_bags() const { return embedder_->train_bags(); }
  Eigen::Index size() const { return duals_.rows(); }
  Eigen::Index output_dim() const { return duals_.cols(); }

 private:
  friend TrainedModel fit(const LabeledDataset&, const BaseKernelSpec&, const OuterKernelSpec&, double,
                          const FitOptions&);
  TrainedModel() = default;

  std::shared_ptr<const Embedder> embedder_;
  OuterKernelSpec outer_;
  double lambda_ = 0.0;
  double jitter_ = 0.0;
  Eigen::MatrixXd gram_;
  Eigen::MatrixXd factor_;
  Eigen::MatrixXd duals_;
};

/// Solves (K + l*lambda*I) alpha = Y. Tries without jitter first, then
/// escalates jitter geometrically from 1e-12 to 1e-6 (times trace(K)/l).
/// Throws SingularSystemError when every attempt fails.
TrainedModel fit(const LabeledDataset& data, const BaseKernelSpec& base, const OuterKernelSpec& outer,
                 double lambda, const FitOptions& options = {});

/// One row per test bag: k(test) * alpha.
Eigen::MatrixXd predict(const TrainedModel& model, std::span<const PointBag> test_bags);

/// (1/n) sum_i ||f(mu_i) - y_i||^2.
double empirical_risk(const TrainedModel& model, const LabeledDataset& data);

/// Mean squared distance between predictions and Bayes regression values.
/// Equals the excess risk when label noise is additive and independent of x.
double excess_risk_estimate(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& bayes_values,
                            double noise_variance);

/// ||(K + l*lambda*I) alpha - Y||_F for the model's own training labels.
double dual_residual(const TrainedModel& model, const Eigen::MatrixXd& labels);

struct CrossValidationResult {
  double best_lambda = 0.0;
  /// (lambda, mean held-out risk), lambda ascending.
  std::vector<std::pair<double, double>> curve;
};

/// Bag-level K-fold cross-validation over `lambda_grid`. Ties in mean risk
/// go to the largest lambda.
CrossValidationResult cross_validate(const LabeledDataset& data, const BaseKernelSpec& base,
                                     const OuterKernelSpec& outer, std::vector<double> lambda_grid,
                                     int folds, std::uint64_t seed, const FitOptions& options = {});

/// 20 log-spaced values in [1e-8, 1e1] * trace(K)/l.
std::vector<double> default_lambda_grid(const Eigen::MatrixXd& outer_gram, int count = 20);

}  // namespace merr
