#include "merr/outer_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "merr/error.hpp"

namespace merr {

namespace {

constexpr double kSqDistTolerance = 1e-12;

double nonlinear(const OuterKernelSpec& spec, double sq) {
  const double t = spec.theta;
  switch (spec.family) {
    case OuterFamily::gaussian: return std::exp(-sq / (2.0 * t * t));
    case OuterFamily::exponential: return std::exp(-std::sqrt(sq) / (2.0 * t * t));
    case OuterFamily::cauchy: return 1.0 / (1.0 + sq / (t * t));
    case OuterFamily::tstudent: return 1.0 / (1.0 + std::pow(std::sqrt(sq), t));
    case OuterFamily::invmultiquadric: return 1.0 / std::sqrt(sq + t * t);
    case OuterFamily::linear: break;
  }
  throw InvalidArgument("nonlinear outer kernel requested for the linear family");
}

double checked_sq_dist(double aa, double bb, double ab) {
  const double sq = aa + bb - 2.0 * ab;
  if (!std::isfinite(sq)) throw NumericError("outer kernel: non-finite geometry");
  if (sq < -kSqDistTolerance) throw NumericError("outer kernel: inconsistent geometry (negative squared distance)");
  return std::max(0.0, sq);
}

}  // namespace

void validate(const OuterKernelSpec& spec) {
  if (spec.family == OuterFamily::linear) return;
  if (!(spec.theta > 0.0) || !std::isfinite(spec.theta))
    throw InvalidArgument("outer kernel theta must be positive and finite");
  if (spec.family == OuterFamily::tstudent && spec.theta > 2.0)
    throw InvalidArgument("tstudent outer kernel requires theta <= 2");
}

std::string_view to_string(OuterFamily family) {
  switch (family) {
    case OuterFamily::linear: return "linear";
    case OuterFamily::gaussian: return "gaussian_K";
    case OuterFamily::exponential: return "exponential_K";
    case OuterFamily::cauchy: return "cauchy_K";
    case OuterFamily::tstudent: return "tstudent_K";
    case OuterFamily::invmultiquadric: return "invmultiquadric_K";
  }
  return "?";
}

OuterFamily parse_outer_family(std::string_view name) {
  if (name == "linear") return OuterFamily::linear;
  if (name == "gaussian_K" || name == "gaussian") return OuterFamily::gaussian;
  if (name == "exponential_K" || name == "exponential") return OuterFamily::exponential;
  if (name == "cauchy_K" || name == "cauchy") return OuterFamily::cauchy;
  if (name == "tstudent_K" || name == "tstudent") return OuterFamily::tstudent;
  if (name == "invmultiquadric_K" || name == "invmultiquadric") return OuterFamily::invmultiquadric;
  throw InvalidArgument("unknown outer kernel family: " + std::string(name));
}

double holder_exponent(const OuterKernelSpec& spec) {
  validate(spec);
  switch (spec.family) {
    case OuterFamily::exponential: return 0.5;
    case OuterFamily::tstudent: return spec.theta / 2.0;
    default: return 1.0;
  }
}

double outer_bound(const OuterKernelSpec& spec, double base_bound) {
  validate(spec);
  switch (spec.family) {
    case OuterFamily::linear: return base_bound;
    case OuterFamily::invmultiquadric: return 1.0 / spec.theta;
    default: return 1.0;
  }
}

double outer_eval(const OuterKernelSpec& spec, double inner_aa, double inner_bb, double inner_ab) {
  validate(spec);
  const double sq = checked_sq_dist(inner_aa, inner_bb, inner_ab);
  if (spec.family == OuterFamily::linear) return inner_ab;
  return nonlinear(spec, sq);
}

Eigen::MatrixXd outer_gram(const OuterKernelSpec& spec, const EmbeddingGeometry& geom) {
  validate(spec);
  if (spec.family == OuterFamily::linear) return geom.inner();
  const Eigen::Index l = geom.size();
  Eigen::MatrixXd out(l, l);
  for (Eigen::Index i = 0; i < l; ++i) {
    out(i, i) = nonlinear(spec, checked_sq_dist(geom.diag()(i), geom.diag()(i), geom.inner(i, i)));
    for (Eigen::Index j = i + 1; j < l; ++j) {
      const double v = nonlinear(spec, checked_sq_dist(geom.diag()(i), geom.diag()(j), geom.inner(i, j)));
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

Eigen::RowVectorXd outer_cross(const OuterKernelSpec& spec, const Eigen::VectorXd& train_diag,
                               double test_self, const Eigen::VectorXd& cross_inner) {
  if (train_diag.size() != cross_inner.size()) throw InvalidArgument("outer_cross: size mismatch");
  Eigen::RowVectorXd row(cross_inner.size());
  for (Eigen::Index i = 0; i < row.size(); ++i) row(i) = outer_eval(spec, train_diag(i), test_self, cross_inner(i));
  return row;
}

Eigen::RowVectorXd outer_cross(const OuterKernelSpec& spec, const BaseKernelSpec& base,
                               std::span<const PointBag> train_bags, const PointBag& test_bag) {
  validate(spec);
  const auto l = static_cast<Eigen::Index>(train_bags.size());
  Eigen::VectorXd diag(l), cross(l);
  for (Eigen::Index i = 0; i < l; ++i) {
    const auto& bag = train_bags[static_cast<std::size_t>(i)];
    diag(i) = embedding_inner(base, bag, bag);
    cross(i) = embedding_inner(base, bag, test_bag);
  }
  return outer_cross(spec, diag, embedding_inner(base, test_bag, test_bag), cross);
}

}  // namespace merr
