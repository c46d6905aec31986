#include "merr/regressor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>

#include "merr/error.hpp"
#include "merr/rng.hpp"

namespace merr {

namespace {

struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

Eigen::MatrixXd regularized(const Eigen::MatrixXd& gram, double lambda, double jitter) {
  const auto l = static_cast<double>(gram.rows());
  Eigen::MatrixXd a = gram;
  a.diagonal().array() += l * lambda + jitter;
  return a;
}

Factorization factorize(const Eigen::MatrixXd& gram, double lambda) {
  const double l = static_cast<double>(gram.rows());
  double scale = gram.trace() / l;
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
  std::vector<double> jitters{0.0};
  for (double j = 1e-12; j <= 1e-6 * (1.0 + 1e-9); j *= 10.0) jitters.push_back(j * scale);
  for (double jitter : jitters) {
    Factorization f{Eigen::LLT<Eigen::MatrixXd>(regularized(gram, lambda, jitter)), jitter};
    if (f.llt.info() == Eigen::Success && f.llt.matrixLLT().allFinite()) return f;
  }
  throw SingularSystemError("fit: regularized Gram is not positive definite after jitter escalation");
}

void check_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be positive and finite");
}

}  // namespace

TrainedModel::TrainedModel(std::shared_ptr<const Embedder> embedder, OuterKernelSpec outer, double lambda,
                           Eigen::MatrixXd duals, double jitter)
    : embedder_(std::move(embedder)), outer_(outer), lambda_(lambda), jitter_(jitter), duals_(std::move(duals)) {
  check_lambda(lambda_);
  validate(outer_);
  if (!embedder_) throw InvalidArgument("model: missing embedder");
  if (duals_.rows() != embedder_->geometry().size()) throw InvalidArgument("model: dual rows do not match bags");
  gram_ = outer_gram(outer_, embedder_->geometry());
  Eigen::LLT<Eigen::MatrixXd> llt(regularized(gram_, lambda_, jitter_));
  if (llt.info() != Eigen::Success) throw SingularSystemError("model: stored jitter does not factorize the system");
  factor_ = llt.matrixL();
}

TrainedModel fit(const LabeledDataset& data, const BaseKernelSpec& base, const OuterKernelSpec& outer,
                 double lambda, const FitOptions& options) {
  check_lambda(lambda);
  validate(base);
  validate(outer);
  TrainedModel model;
  model.embedder_ = std::make_shared<const Embedder>(base, data.bags(), options.embedding);
  model.outer_ = outer;
  model.lambda_ = lambda;
  model.gram_ = outer_gram(outer, model.embedder_->geometry());
  Factorization f = factorize(model.gram_, lambda);
  model.jitter_ = f.jitter;
  model.factor_ = f.llt.matrixL();
  model.duals_ = f.llt.solve(data.labels());
  if (!model.duals_.allFinite()) throw NumericError("fit: non-finite dual coefficients");
  return model;
}

Eigen::MatrixXd predict(const TrainedModel& model, std::span<const PointBag> test_bags) {
  const Embedder& emb = model.embedder();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(test_bags.size()), model.output_dim());
  for (std::size_t t = 0; t < test_bags.size(); ++t) {
    const PointBag& bag = test_bags[t];
    if (bag.dim() != model.train_bags().front().dim()) throw InvalidArgument("predict: dimension mismatch");
    const Eigen::RowVectorXd row =
        outer_cross(model.outer(), emb.geometry().diag(), emb.self_inner(bag), emb.cross_inner(bag));
    out.row(static_cast<Eigen::Index>(t)) = row * model.duals();
  }
  return out;
}

double empirical_risk(const TrainedModel& model, const LabeledDataset& data) {
  if (data.size() == 0) throw InvalidArgument("empirical_risk: empty dataset");
  const Eigen::MatrixXd pred = predict(model, data.bags());
  if (pred.cols() != data.output_dim()) throw InvalidArgument("empirical_risk: output dimension mismatch");
  return (pred - data.labels()).rowwise().squaredNorm().mean();
}

double excess_risk_estimate(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& bayes_values,
                            double noise_variance) {
  if (predictions.rows() != bayes_values.rows() || predictions.cols() != bayes_values.cols())
    throw InvalidArgument("excess_risk_estimate: shape mismatch");
  if (predictions.rows() == 0) throw InvalidArgument("excess_risk_estimate: no test items");
  if (!(noise_variance >= 0.0)) throw InvalidArgument("excess_risk_estimate: negative noise variance");
  return (predictions - bayes_values).rowwise().squaredNorm().mean();
}

double dual_residual(const TrainedModel& model, const Eigen::MatrixXd& labels) {
  return (regularized(model.gram(), model.lambda(), 0.0) * model.duals() - labels).norm();
}

std::vector<double> default_lambda_grid(const Eigen::MatrixXd& outer_gram, int count) {
  if (count < 2) throw InvalidArgument("lambda grid needs at least two values");
  double scale = outer_gram.trace() / static_cast<double>(outer_gram.rows());
  if (!(scale > 0.0)) scale = 1.0;
  std::vector<double> grid;
  const double lo = std::log10(1e-8), hi = std::log10(1e1);
  for (int i = 0; i < count; ++i)
    grid.push_back(scale * std::pow(10.0, lo + (hi - lo) * static_cast<double>(i) / (count - 1)));
  return grid;
}

CrossValidationResult cross_validate(const LabeledDataset& data, const BaseKernelSpec& base,
                                     const OuterKernelSpec& outer, std::vector<double> lambda_grid,
                                     int folds, std::uint64_t seed, const FitOptions& options) {
  if (lambda_grid.empty()) throw InvalidArgument("cross_validate: empty lambda grid");
  for (double lambda : lambda_grid) check_lambda(lambda);
  const Eigen::Index l = data.size();
  if (folds < 2 || folds > l) throw InvalidArgument("cross_validate: need 2 <= folds <= number of bags");
  std::sort(lambda_grid.begin(), lambda_grid.end());

  const Embedder embedder(base, data.bags(), options.embedding);
  const Eigen::MatrixXd gram = outer_gram(outer, embedder.geometry());

  std::vector<Eigen::Index> order(static_cast<std::size_t>(l));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  CounterRng rng(derive_key(seed, StreamKind::fold_shuffle, {}));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> mean_risk(lambda_grid.size(), 0.0);
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, held;
    for (std::size_t p = 0; p < order.size(); ++p)
      (static_cast<int>(p % static_cast<std::size_t>(folds)) == f ? held : train).push_back(order[p]);
    const auto nt = static_cast<Eigen::Index>(train.size());
    const auto nh = static_cast<Eigen::Index>(held.size());
    Eigen::MatrixXd k_train(nt, nt), k_cross(nh, nt), y_train(nt, data.output_dim()), y_held(nh, data.output_dim());
    for (Eigen::Index a = 0; a < nt; ++a) {
      y_train.row(a) = data.labels().row(train[a]);
      for (Eigen::Index b = 0; b < nt; ++b) k_train(a, b) = gram(train[a], train[b]);
    }
    for (Eigen::Index a = 0; a < nh; ++a) {
      y_held.row(a) = data.labels().row(held[a]);
      for (Eigen::Index b = 0; b < nt; ++b) k_cross(a, b) = gram(held[a], train[b]);
    }
    for (std::size_t g = 0; g < lambda_grid.size(); ++g) {
      const Factorization fac = factorize(k_train, lambda_grid[g]);
      const Eigen::MatrixXd alpha = fac.llt.solve(y_train);
      mean_risk[g] += (k_cross * alpha - y_held).rowwise().squaredNorm().mean() / folds;
    }
  }

  CrossValidationResult result;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < lambda_grid.size(); ++g) {
    result.curve.emplace_back(lambda_grid[g], mean_risk[g]);
    // Ascending scan with <= hands ties to the larger lambda.
    if (g == 0 || mean_risk[g] <= best + 1e-12 * std::abs(best)) {
      best = std::min(best, mean_risk[g]);
      result.best_lambda = lambda_grid[g];
    }
  }
  return result;
}

}  // namespace merr
