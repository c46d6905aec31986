#pragma once

#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "merr/dataset.hpp"
#include "merr/point_bag.hpp"

namespace merr::synthetic {

enum class MeanLaw { uniform_box, gaussian };

/// Gaussian-location meta distribution: x_i = N(m_i, sigma^2 I) with m_i drawn
/// from a uniform box [lo,hi]^d or from N(0, tau^2 I).
struct MetaDistributionSpec {
  int dim = 1;
  MeanLaw mean_law = MeanLaw::uniform_box;
  double lo = 0.0;
  double hi = 1.0;
  double tau = 1.0;
  double component_sigma = 1.0;
};

void validate(const MetaDistributionSpec& spec);

enum class LabelKind { mean_norm_sq, gaussian_entropy, linear_of_mean };

std::string_view to_string(LabelKind kind);
LabelKind parse_label_kind(std::string_view name);
std::string_view to_string(MeanLaw law);
MeanLaw parse_mean_law(std::string_view name);

/// Regression target f_rho of a synthetic problem plus its additive label noise.
struct LabelFunctional {
  LabelKind kind = LabelKind::mean_norm_sq;
  int output_dim = 1;  // only linear_of_mean may use more than one output
  double noise_sigma = 0.0;
  double clip_bound = std::numeric_limits<double>::infinity();
  std::uint64_t matrix_seed = 0;  // seeds the fixed matrix of linear_of_mean
};

/// sup ||f_rho(x)|| over the support of the mean law (infinite when unbounded).
double noiseless_label_bound(const LabelFunctional& functional, const MetaDistributionSpec& meta);

/// Rejects a clip bound that noiseless labels could exceed under `meta`.
void validate(const LabelFunctional& functional, const MetaDistributionSpec& meta);

/// The fixed d_out x d matrix of linear_of_mean.
Eigen::MatrixXd linear_map(const LabelFunctional& functional, int dim);

/// l mean vectors; mean i depends only on (seed, i).
std::vector<Eigen::VectorXd> sample_meta(const MetaDistributionSpec& spec, std::int64_t l, std::uint64_t seed);

/// Bag i holds N draws from N(means[i], sigma^2 I); point n of bag i depends
/// only on (seed, i, n).
std::vector<PointBag> sample_bags(const std::vector<Eigen::VectorXd>& means, double sigma, std::int64_t N,
                                  std::uint64_t seed);

/// Regenerates bag `index` of sample_bags on its own.
PointBag sample_bag(const Eigen::VectorXd& mean, double sigma, std::int64_t N, std::uint64_t seed,
                    std::int64_t index);

/// f_rho at the distribution N(mean, sigma^2 I).
Eigen::VectorXd true_regression_value(const LabelFunctional& functional, const Eigen::VectorXd& mean, double sigma);

struct SyntheticDataset {
  LabeledDataset data;
  Eigen::MatrixXd bayes;  // l x d_out noiseless regression values
  std::vector<Eigen::VectorXd> means;
};

/// Two-stage sample with labels = f_rho + N(0, noise_sigma^2). Throws
/// InvalidArgument when a label exceeds the clip bound.
SyntheticDataset make_dataset(const MetaDistributionSpec& meta, const LabelFunctional& functional, std::int64_t l,
                              std::int64_t N, std::uint64_t seed);

/// <mu_x, mu_x'> for x = N(m1, s^2 I), x' = N(m2, s^2 I) under a gaussian base
/// kernel of bandwidth sigma_k.
double population_embedding_inner(double sigma_k, double sigma, const Eigen::VectorXd& m1, const Eigen::VectorXd& m2);

/// mu_x(u) = E k(X, u) for X = N(m, s^2 I).
double population_embedding_eval(double sigma_k, double sigma, const Eigen::VectorXd& m, const double* u);

/// ||mu_x - mu_xhat||_H^2 for x = N(m, s^2 I) and a bag drawn from it.
double population_sq_dist(double sigma_k, double sigma, const Eigen::VectorXd& m, const PointBag& bag);

}  // namespace merr::synthetic
