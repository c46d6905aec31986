#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include <Eigen/Dense>

#include "merr/error.hpp"
#include "merr/regressor.hpp"
#include "support.hpp"

using namespace merr;
using merr::test::scalar_bag;

namespace {

const BaseKernelSpec kGauss{BaseFamily::gaussian, 1.0};
const OuterKernelSpec kLinear{OuterFamily::linear, 1.0};

LabeledDataset random_dataset(std::mt19937_64& gen, int l, int d_out, Eigen::Index d = 2, Eigen::Index n = 8) {
  auto bags = test::random_bags(gen, l, n, d);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd Y(l, d_out);
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < d_out; ++j) Y(i, j) = normal(gen);
  return LabeledDataset(std::move(bags), Y);
}

}  // namespace

TEST_SUITE("regressor") {

TEST_CASE("dataset validation") {
  std::vector<PointBag> bags{scalar_bag({0.0}), scalar_bag({1.0})};
  CHECK_THROWS_AS(LabeledDataset({}, Eigen::MatrixXd(0, 1)), InvalidArgument);
  CHECK_THROWS_AS(LabeledDataset(bags, Eigen::MatrixXd::Zero(3, 1)), InvalidArgument);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 1);
  bad(1, 0) = std::nan("");
  CHECK_THROWS_AS(LabeledDataset(bags, bad), InvalidArgument);
  Eigen::MatrixXd big(2, 2);
  big << 3, 4, 0, 1;
  CHECK_THROWS_AS(LabeledDataset(bags, big, 4.9), InvalidArgument);
  CHECK_NOTHROW(LabeledDataset(bags, big, 5.0));
  std::vector<PointBag> mixed{scalar_bag({0.0}), test::bag_of({{0.0, 1.0}})};
  CHECK_THROWS_AS(LabeledDataset(mixed, Eigen::MatrixXd::Zero(2, 1)), InvalidArgument);
  const LabeledDataset ds(bags, big);
  const auto sub = ds.subset({1});
  CHECK(sub.size() == 1);
  CHECK(sub.labels()(0, 1) == 1.0);
  CHECK(sub.bags()[0].points()(0, 0) == 1.0);
}

TEST_CASE("single-bag closed forms") {
  std::vector<PointBag> one{scalar_bag({0.0})};
  const LabeledDataset ds(one, Eigen::MatrixXd::Constant(1, 1, 2.0));
  const auto m = fit(ds, kGauss, kLinear, 1.0);
  CHECK(m.duals()(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(predict(m, one)(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  const auto tiny = fit(ds, kGauss, kLinear, 1e-12);
  CHECK(tiny.duals()(0, 0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(predict(tiny, one)(0, 0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(empirical_risk(m, ds) == doctest::Approx(1.0).epsilon(1e-14));

  const LabeledDataset zero(one, Eigen::MatrixXd::Zero(1, 1));
  CHECK(fit(zero, kGauss, kLinear, 0.3).duals()(0, 0) == 0.0);
  CHECK_THROWS_AS(fit(ds, kGauss, kLinear, 0.0), InvalidArgument);
  CHECK_THROWS_AS(fit(ds, kGauss, kLinear, -1.0), InvalidArgument);
}

TEST_CASE("duals match an explicit inverse") {
  std::mt19937_64 gen(61);
  std::uniform_int_distribution<int> l_dist(1, 8);
  std::uniform_real_distribution<double> log_lambda(-6.0, 0.0);
  const OuterFamily families[] = {OuterFamily::linear, OuterFamily::gaussian, OuterFamily::cauchy,
                                  OuterFamily::invmultiquadric};
  for (int trial = 0; trial < 40; ++trial) {
    const int l = l_dist(gen);
    const auto ds = random_dataset(gen, l, 2);
    const OuterKernelSpec outer{families[trial % 4], 0.9};
    const double lambda = std::pow(10.0, log_lambda(gen));
    const auto m = fit(ds, kGauss, outer, lambda);
    const Eigen::MatrixXd K = outer_gram(outer, embedding_gram(kGauss, ds.bags()));
    const Eigen::MatrixXd A = K + l * lambda * Eigen::MatrixXd::Identity(l, l);
    const Eigen::MatrixXd oracle = A.inverse() * ds.labels();
    CHECK((m.duals() - oracle).norm() / oracle.norm() <= 1e-10);
    CHECK(m.jitter_used() == 0.0);
    const Eigen::MatrixXd reconstructed = m.factor() * m.factor().transpose();
    CHECK((reconstructed - A).norm() / A.norm() <= 1e-8);
    CHECK(dual_residual(m, ds.labels()) <= 1e-8 * ds.labels().norm());
  }
}

TEST_CASE("interpolation at tiny lambda on well-conditioned grams") {
  std::mt19937_64 gen(67);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto ds = random_dataset(gen, 6, 1, 1, 3);
    const Eigen::MatrixXd K = embedding_gram(kGauss, ds.bags()).inner();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
    if (eig.eigenvalues().minCoeff() < 1e-6) continue;
    const auto m = fit(ds, kGauss, kLinear, 1e-10);
    const double resid = (predict(m, ds.bags()) - ds.labels()).cwiseAbs().maxCoeff();
    CHECK(resid <= 1e-4 * ds.labels().cwiseAbs().maxCoeff());
    ++checked;
  }
  CHECK(checked >= 5);
}

TEST_CASE("ridge shrinkage and objective bounds") {
  std::mt19937_64 gen(71);
  for (int trial = 0; trial < 30; ++trial) {
    const auto ds = random_dataset(gen, 10, 2);
    const double l = 10.0;
    double previous_risk = -1.0;
    for (double lambda : {1e-5, 1e-3, 1e-1, 1.0, 10.0}) {
      const auto m = fit(ds, kGauss, kLinear, lambda);
      const Eigen::MatrixXd& a = m.duals();
      const double penalty = l * lambda * (a.transpose() * m.gram() * a).trace();
      CHECK(penalty <= ds.labels().squaredNorm() * (1.0 + 1e-12));
      CHECK(a.norm() <= ds.labels().norm() / (l * lambda) * (1.0 + 1e-12));
      const double risk = empirical_risk(m, ds);
      CHECK(risk >= previous_risk - 1e-12);
      previous_risk = risk;
    }
  }
}

TEST_CASE("vector outputs decouple into scalar fits") {
  std::mt19937_64 gen(73);
  for (int trial = 0; trial < 10; ++trial) {
    const auto ds = random_dataset(gen, 7, 3);
    const OuterKernelSpec outer{OuterFamily::gaussian, 0.7};
    const auto joint = fit(ds, kGauss, outer, 0.01);
    const auto test_bags = test::random_bags(gen, 4, 8, 2);
    const auto joint_pred = predict(joint, test_bags);
    for (int j = 0; j < 3; ++j) {
      const LabeledDataset col(ds.bags(), ds.labels().col(j));
      const auto single = fit(col, kGauss, outer, 0.01);
      CHECK((single.duals().col(0) - joint.duals().col(j)).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK((predict(single, test_bags).col(0) - joint_pred.col(j)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("predictions ignore the order of training bags") {
  std::mt19937_64 gen(79);
  const auto ds = random_dataset(gen, 9, 2);
  std::vector<Eigen::Index> perm(9);
  for (Eigen::Index i = 0; i < 9; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::shuffle(perm.begin(), perm.end(), gen);
  const auto shuffled = ds.subset(perm);
  const auto test_bags = test::random_bags(gen, 5, 8, 2);
  const OuterKernelSpec outer{OuterFamily::cauchy, 1.0};
  const auto a = predict(fit(ds, kGauss, outer, 1e-3), test_bags);
  const auto b = predict(fit(shuffled, kGauss, outer, 1e-3), test_bags);
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("rank-deficient grams are rescued by jitter") {
  std::vector<PointBag> bags(4, scalar_bag({0.5, 1.5}));
  Eigen::MatrixXd Y(4, 1);
  Y << 1, 1, 1, 1;
  const LabeledDataset ds(bags, Y);
  const auto m = fit(ds, kGauss, kLinear, 1e-300);
  CHECK(m.jitter_used() > 0.0);
  CHECK(m.jitter_used() <= 1e-6 * m.gram().trace() / 4.0 * (1.0 + 1e-12));
  CHECK(predict(m, std::vector<PointBag>{bags[0]})(0, 0) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("risk helpers") {
  Eigen::MatrixXd p(1, 2), y(1, 2);
  p << 0, 0;
  y << 1, 1;
  CHECK(excess_risk_estimate(p, y, 0.0) == 2.0);
  Eigen::MatrixXd p1(1, 1), y1(1, 1);
  p1 << 0.5;
  y1 << 1.0;
  CHECK(excess_risk_estimate(p1, y1, 0.1) == 0.25);
  Eigen::MatrixXd p2(2, 2), y2 = Eigen::MatrixXd::Zero(2, 2);
  p2 << 1, 0, 0, 1;
  CHECK(excess_risk_estimate(p2, y2, 0.0) == 1.0);
  CHECK(excess_risk_estimate(y2, y2, 0.0) == 0.0);
  CHECK_THROWS_AS(excess_risk_estimate(p1, y2, 0.0), InvalidArgument);

  std::vector<PointBag> bags{scalar_bag({0.0}), scalar_bag({1.0})};
  auto embedder = std::make_shared<const Embedder>(kGauss, bags, EmbeddingMethod::exact);
  const TrainedModel zero(embedder, kLinear, 0.5, Eigen::MatrixXd::Zero(2, 2), 0.0);
  CHECK(predict(zero, bags).isZero(0.0));
  Eigen::MatrixXd Y(2, 2);
  Y << 1, 1, 0, 0;
  CHECK(empirical_risk(zero, LabeledDataset(bags, Y)) == 1.0);
  CHECK(empirical_risk(zero, LabeledDataset(bags, Eigen::MatrixXd::Zero(2, 2))) == 0.0);
  CHECK_THROWS_AS(predict(zero, std::vector<PointBag>{test::bag_of({{0.0, 0.0}})}), InvalidArgument);
}

TEST_CASE("cross-validation contract") {
  std::mt19937_64 gen(83);
  const auto ds = random_dataset(gen, 12, 1);
  const auto one = cross_validate(ds, kGauss, kLinear, {0.07}, 3, 1);
  CHECK(one.best_lambda == 0.07);
  CHECK(one.curve.size() == 1);
  const std::vector<double> grid{1.0, 1e-3, 1e-1, 1e-2};
  const auto res = cross_validate(ds, kGauss, kLinear, grid, 4, 5);
  REQUIRE(res.curve.size() == 4);
  for (std::size_t i = 0; i < res.curve.size(); ++i) {
    CHECK(res.curve[i].second >= 0.0);
    if (i > 0) CHECK(res.curve[i].first > res.curve[i - 1].first);
  }
  const auto again = cross_validate(ds, kGauss, kLinear, grid, 4, 5);
  CHECK(again.best_lambda == res.best_lambda);
  CHECK_THROWS_AS(cross_validate(ds, kGauss, kLinear, {}, 3, 1), InvalidArgument);
  CHECK_THROWS_AS(cross_validate(ds, kGauss, kLinear, {0.1}, 13, 1), InvalidArgument);
  CHECK_THROWS_AS(cross_validate(ds, kGauss, kLinear, {0.1}, 1, 1), InvalidArgument);
  CHECK_THROWS_AS(cross_validate(ds, kGauss, kLinear, {-0.1}, 3, 1), InvalidArgument);

  // Identical held-out risks tie; the largest lambda wins.
  const LabeledDataset zeros(ds.bags(), Eigen::MatrixXd::Zero(12, 1));
  CHECK(cross_validate(zeros, kGauss, kLinear, {1e-3, 1e-2, 1e-1}, 3, 2).best_lambda == 1e-1);
}

TEST_CASE("noiseless interpolable data prefers the smallest lambda") {
  // Labels are an exact linear function of the embedding: y_i = <mu_i, mu_ref>.
  std::mt19937_64 gen(89);
  auto bags = test::random_bags(gen, 30, 6, 1);
  const auto ref = test::random_bag(gen, 4, 1);
  Eigen::MatrixXd Y(30, 1);
  for (int i = 0; i < 30; ++i) Y(i, 0) = embedding_inner(kGauss, bags[static_cast<std::size_t>(i)], ref);
  const LabeledDataset ds(bags, Y);
  const std::vector<double> grid{1e-9, 1e-7, 1e-5, 1e-3, 1e-1};
  const auto res = cross_validate(ds, kGauss, kLinear, grid, 5, 3);
  bool increasing = true;
  for (std::size_t i = 1; i < res.curve.size(); ++i) increasing &= res.curve[i].second > res.curve[i - 1].second;
  if (increasing) CHECK(res.best_lambda == 1e-9);
  CHECK(res.curve.back().second > res.curve.front().second);
}

TEST_CASE("default lambda grid") {
  const Eigen::MatrixXd K = 2.0 * Eigen::MatrixXd::Identity(3, 3);
  const auto grid = default_lambda_grid(K);
  REQUIRE(grid.size() == 20);
  CHECK(grid.front() == doctest::Approx(2e-8).epsilon(1e-12));
  CHECK(grid.back() == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(std::is_sorted(grid.begin(), grid.end()));
}

}
