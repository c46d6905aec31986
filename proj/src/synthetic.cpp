#include "merr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <string>

#include "merr/embedding.hpp"
#include "merr/error.hpp"
#include "merr/rng.hpp"

namespace merr::synthetic {

void validate(const MetaDistributionSpec& spec) {
  if (spec.dim < 1) throw InvalidArgument("meta: dimension must be >= 1");
  if (!(spec.component_sigma > 0.0)) throw InvalidArgument("meta: component sigma must be positive");
  if (spec.mean_law == MeanLaw::uniform_box && !(spec.lo <= spec.hi))
    throw InvalidArgument("meta: uniform box needs lo <= hi");
  if (spec.mean_law == MeanLaw::gaussian && !(spec.tau > 0.0)) throw InvalidArgument("meta: tau must be positive");
}

std::string_view to_string(LabelKind kind) {
  switch (kind) {
    case LabelKind::mean_norm_sq: return "mean_norm_sq";
    case LabelKind::gaussian_entropy: return "gaussian_entropy";
    case LabelKind::linear_of_mean: return "linear_of_mean";
  }
  return "?";
}

LabelKind parse_label_kind(std::string_view name) {
  if (name == "mean_norm_sq") return LabelKind::mean_norm_sq;
  if (name == "gaussian_entropy") return LabelKind::gaussian_entropy;
  if (name == "linear_of_mean") return LabelKind::linear_of_mean;
  throw InvalidArgument("unknown label functional: " + std::string(name));
}

std::string_view to_string(MeanLaw law) { return law == MeanLaw::uniform_box ? "uniform" : "gaussian"; }

MeanLaw parse_mean_law(std::string_view name) {
  if (name == "uniform" || name == "uniform_box") return MeanLaw::uniform_box;
  if (name == "gaussian") return MeanLaw::gaussian;
  throw InvalidArgument("unknown mean law: " + std::string(name));
}

Eigen::MatrixXd linear_map(const LabelFunctional& functional, int dim) {
  Eigen::MatrixXd a(functional.output_dim, dim);
  for (int r = 0; r < functional.output_dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      CounterRng rng(derive_key(functional.matrix_seed, StreamKind::linear_map,
                                {static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c)}));
      std::normal_distribution<double> normal;
      a(r, c) = normal(rng) / std::sqrt(static_cast<double>(dim));
    }
  }
  return a;
}

double noiseless_label_bound(const LabelFunctional& functional, const MetaDistributionSpec& meta) {
  validate(meta);
  const double d = static_cast<double>(meta.dim);
  if (functional.kind == LabelKind::gaussian_entropy)
    return std::abs(0.5 * d * std::log(2.0 * std::numbers::pi * std::numbers::e * meta.component_sigma * meta.component_sigma));
  if (meta.mean_law == MeanLaw::gaussian) return std::numeric_limits<double>::infinity();
  const double corner = std::max(std::abs(meta.lo), std::abs(meta.hi));
  if (functional.kind == LabelKind::mean_norm_sq) return d * corner * corner;
  const double max_mean_norm = std::sqrt(d) * corner;
  return linear_map(functional, meta.dim).norm() * max_mean_norm;  // Frobenius >= spectral norm
}

void validate(const LabelFunctional& functional, const MetaDistributionSpec& meta) {
  if (functional.output_dim < 1) throw InvalidArgument("functional: output dimension must be >= 1");
  if (functional.kind != LabelKind::linear_of_mean && functional.output_dim != 1)
    throw InvalidArgument("functional: only linear_of_mean supports vector outputs");
  if (!(functional.noise_sigma >= 0.0)) throw InvalidArgument("functional: noise sigma must be nonnegative");
  if (!(functional.clip_bound > 0.0)) throw InvalidArgument("functional: clip bound must be positive");
  const double bound = noiseless_label_bound(functional, meta);
  if (bound > functional.clip_bound)
    throw InvalidArgument("functional: clip bound " + std::to_string(functional.clip_bound) +
                          " is below the noiseless label range " + std::to_string(bound));
}

std::vector<Eigen::VectorXd> sample_meta(const MetaDistributionSpec& spec, std::int64_t l, std::uint64_t seed) {
  validate(spec);
  if (l < 1) throw InvalidArgument("sample_meta: l must be >= 1");
  std::vector<Eigen::VectorXd> means(static_cast<std::size_t>(l));
  for (std::int64_t i = 0; i < l; ++i) {
    CounterRng rng(derive_key(seed, StreamKind::meta, {static_cast<std::uint64_t>(i)}));
    Eigen::VectorXd m(spec.dim);
    if (spec.mean_law == MeanLaw::uniform_box) {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (int j = 0; j < spec.dim; ++j) m(j) = spec.lo + (spec.hi - spec.lo) * u(rng);
    } else {
      std::normal_distribution<double> g(0.0, spec.tau);
      for (int j = 0; j < spec.dim; ++j) m(j) = g(rng);
    }
    means[static_cast<std::size_t>(i)] = std::move(m);
  }
  return means;
}

PointBag sample_bag(const Eigen::VectorXd& mean, double sigma, std::int64_t N, std::uint64_t seed,
                    std::int64_t index) {
  if (N < 1) throw InvalidArgument("sample_bags: N must be >= 1");
  if (!(sigma >= 0.0)) throw InvalidArgument("sample_bags: sigma must be nonnegative");
  const Eigen::Index d = mean.size();
  PointMatrix pts(N, d);
  for (std::int64_t n = 0; n < N; ++n) {
    CounterRng rng(derive_key(seed, StreamKind::points,
                              {static_cast<std::uint64_t>(index), static_cast<std::uint64_t>(n)}));
    std::normal_distribution<double> g;
    for (Eigen::Index j = 0; j < d; ++j) pts(n, j) = mean(j) + sigma * g(rng);
  }
  return PointBag(std::move(pts));
}

std::vector<PointBag> sample_bags(const std::vector<Eigen::VectorXd>& means, double sigma, std::int64_t N,
                                  std::uint64_t seed) {
  if (N < 1) throw InvalidArgument("sample_bags: N must be >= 1");
  if (!(sigma >= 0.0)) throw InvalidArgument("sample_bags: sigma must be nonnegative");
  for (const auto& m : means)
    if (!m.allFinite()) throw InvalidArgument("sample_bags: means must be finite");
  const auto l = static_cast<std::int64_t>(means.size());
  std::vector<std::optional<PointBag>> slots(means.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < l; ++i)
    slots[static_cast<std::size_t>(i)] = sample_bag(means[static_cast<std::size_t>(i)], sigma, N, seed, i);
  std::vector<PointBag> bags;
  bags.reserve(slots.size());
  for (auto& s : slots) bags.push_back(std::move(*s));
  return bags;
}

Eigen::VectorXd true_regression_value(const LabelFunctional& functional, const Eigen::VectorXd& mean, double sigma) {
  switch (functional.kind) {
    case LabelKind::mean_norm_sq: return Eigen::VectorXd::Constant(1, mean.squaredNorm());
    case LabelKind::gaussian_entropy: {
      const double d = static_cast<double>(mean.size());
      return Eigen::VectorXd::Constant(1, 0.5 * d * std::log(2.0 * std::numbers::pi * std::numbers::e * sigma * sigma));
    }
    case LabelKind::linear_of_mean: return linear_map(functional, static_cast<int>(mean.size())) * mean;
  }
  return {};
}

SyntheticDataset make_dataset(const MetaDistributionSpec& meta, const LabelFunctional& functional, std::int64_t l,
                              std::int64_t N, std::uint64_t seed) {
  validate(functional, meta);
  auto means = sample_meta(meta, l, seed);
  auto bags = sample_bags(means, meta.component_sigma, N, seed);
  Eigen::MatrixXd bayes(l, functional.output_dim);
  const Eigen::MatrixXd a = functional.kind == LabelKind::linear_of_mean ? linear_map(functional, meta.dim)
                                                                          : Eigen::MatrixXd();
  for (std::int64_t i = 0; i < l; ++i) {
    const auto& m = means[static_cast<std::size_t>(i)];
    bayes.row(i) = functional.kind == LabelKind::linear_of_mean
                       ? Eigen::VectorXd(a * m).transpose()
                       : true_regression_value(functional, m, meta.component_sigma).transpose();
  }
  Eigen::MatrixXd labels = bayes;
  if (functional.noise_sigma > 0.0) {
    for (std::int64_t i = 0; i < l; ++i) {
      CounterRng rng(derive_key(seed, StreamKind::label_noise, {static_cast<std::uint64_t>(i)}));
      std::normal_distribution<double> g(0.0, functional.noise_sigma);
      for (Eigen::Index c = 0; c < labels.cols(); ++c) labels(i, c) += g(rng);
    }
  }
  for (std::int64_t i = 0; i < l; ++i)
    if (labels.row(i).norm() > functional.clip_bound)
      throw InvalidArgument("make_dataset: label " + std::to_string(i) + " exceeds the clip bound");
  return {LabeledDataset(std::move(bags), std::move(labels), functional.clip_bound), std::move(bayes), std::move(means)};
}

double population_embedding_inner(double sigma_k, double sigma, const Eigen::VectorXd& m1, const Eigen::VectorXd& m2) {
  const double s2 = sigma_k * sigma_k + 2.0 * sigma * sigma;
  const double d = static_cast<double>(m1.size());
  return std::pow(sigma_k * sigma_k / s2, d / 2.0) * std::exp(-(m1 - m2).squaredNorm() / (2.0 * s2));
}

double population_embedding_eval(double sigma_k, double sigma, const Eigen::VectorXd& m, const double* u) {
  const double s2 = sigma_k * sigma_k + sigma * sigma;
  double sq = 0.0;
  for (Eigen::Index j = 0; j < m.size(); ++j) sq += (u[j] - m(j)) * (u[j] - m(j));
  return std::pow(sigma_k * sigma_k / s2, static_cast<double>(m.size()) / 2.0) * std::exp(-sq / (2.0 * s2));
}

double population_sq_dist(double sigma_k, double sigma, const Eigen::VectorXd& m, const PointBag& bag) {
  if (bag.dim() != m.size()) throw InvalidArgument("population_sq_dist: dimension mismatch");
  double cross = 0.0;
  for (Eigen::Index n = 0; n < bag.size(); ++n)
    cross += population_embedding_eval(sigma_k, sigma, m, bag.points().data() + n * bag.dim());
  cross /= static_cast<double>(bag.size());
  const BaseKernelSpec spec{BaseFamily::gaussian, sigma_k};
  return std::max(0.0, population_embedding_inner(sigma_k, sigma, m, m) - 2.0 * cross +
                           embedding_inner(spec, bag, bag));
}

}  // namespace merr::synthetic
