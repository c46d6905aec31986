#pragma once

#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace merr {

/// Row-major so each sample is contiguous in memory.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using PointRef = Eigen::Ref<const Eigen::RowVectorXd>;

/// A finite sample {x_1, ..., x_N} from one unobserved distribution.
///
/// Immutable; copies share the underlying storage, so bags can be passed
/// around by value and read concurrently.
class PointBag {
 public:
  /// Throws InvalidArgument for an empty bag, zero columns or non-finite entries.
  explicit PointBag(PointMatrix points);

  Eigen::Index size() const { return points_->rows(); }
  Eigen::Index dim() const { return points_->cols(); }
  const PointMatrix& points() const { return *points_; }
  auto point(Eigen::Index n) const { return points_->row(n); }

 private:
  std::shared_ptr<const PointMatrix> points_;
};

enum class BaseFamily { gaussian, laplacian, cauchy };

/// Bounded radial kernel on the point space. Every family has k(u,u) = 1.
struct BaseKernelSpec {
  BaseFamily family = BaseFamily::gaussian;
  double bandwidth = 1.0;

  /// sup_u k(u,u); equals 1 for all supported families.
  static constexpr double bound() { return 1.0; }
};

void validate(const BaseKernelSpec& spec);

std::string_view to_string(BaseFamily family);
BaseFamily parse_base_family(std::string_view name);

/// k(u,v). Throws on dimension mismatch or non-finite input.
double base_kernel_eval(const BaseKernelSpec& spec, PointRef u, PointRef v);

namespace detail {
// Unchecked evaluation over raw rows; callers guarantee matching dimension.
inline double base_kernel_unchecked(BaseFamily family, double bandwidth, const double* u,
                                    const double* v, Eigen::Index d);
}  // namespace detail

}  // namespace merr

#include "merr/detail/base_kernel_inl.hpp"
