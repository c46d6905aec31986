#include "merr/point_bag.hpp"

#include <cmath>
#include <string>

#include "merr/error.hpp"

namespace merr {

PointBag::PointBag(PointMatrix points) {
  if (points.rows() < 1) throw InvalidArgument("PointBag: empty bag");
  if (points.cols() < 1) throw InvalidArgument("PointBag: zero-dimensional points");
  if (!points.allFinite()) throw InvalidArgument("PointBag: non-finite entry");
  points_ = std::make_shared<const PointMatrix>(std::move(points));
}

void validate(const BaseKernelSpec& spec) {
  if (!(spec.bandwidth > 0.0) || !std::isfinite(spec.bandwidth))
    throw InvalidArgument("base kernel bandwidth must be positive and finite");
}

std::string_view to_string(BaseFamily family) {
  switch (family) {
    case BaseFamily::gaussian: return "gaussian";
    case BaseFamily::laplacian: return "laplacian";
    case BaseFamily::cauchy: return "cauchy";
  }
  return "?";
}

BaseFamily parse_base_family(std::string_view name) {
  if (name == "gaussian") return BaseFamily::gaussian;
  if (name == "laplacian") return BaseFamily::laplacian;
  if (name == "cauchy") return BaseFamily::cauchy;
  throw InvalidArgument("unknown base kernel family: " + std::string(name));
}

double base_kernel_eval(const BaseKernelSpec& spec, PointRef u, PointRef v) {
  validate(spec);
  if (u.size() != v.size()) throw InvalidArgument("base_kernel_eval: dimension mismatch");
  if (!u.allFinite() || !v.allFinite()) throw InvalidArgument("base_kernel_eval: non-finite input");
  const Eigen::RowVectorXd uu = u;
  const Eigen::RowVectorXd vv = v;
  return detail::base_kernel_unchecked(spec.family, spec.bandwidth, uu.data(), vv.data(), uu.size());
}

}  // namespace merr
