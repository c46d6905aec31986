#pragma once

#include <span>
#include <string_view>

#include <Eigen/Core>

#include "merr/embedding.hpp"
#include "merr/point_bag.hpp"

namespace merr {

/// Kernels K(mu_a, mu_b) on mean embeddings. All nonlinear families depend on
/// the embeddings only through D = ||mu_a - mu_b||_H.
enum class OuterFamily { linear, gaussian, exponential, cauchy, tstudent, invmultiquadric };

struct OuterKernelSpec {
  OuterFamily family = OuterFamily::linear;
  double theta = 1.0;  // unused by the linear family
};

/// Throws InvalidArgument for theta <= 0 on a nonlinear family, and for
/// tstudent with theta > 2 (no Hoelder exponent is available there).
void validate(const OuterKernelSpec& spec);

std::string_view to_string(OuterFamily family);
OuterFamily parse_outer_family(std::string_view name);

/// Hoelder exponent h of the canonical feature map, in (0, 1].
double holder_exponent(const OuterKernelSpec& spec);

/// sup_mu K(mu, mu) given the base-kernel bound B_k.
double outer_bound(const OuterKernelSpec& spec, double base_bound = BaseKernelSpec::bound());

/// K evaluated from the three inner products of the pair.
/// Throws NumericError when the implied squared distance is below -1e-12.
double outer_eval(const OuterKernelSpec& spec, double inner_aa, double inner_bb, double inner_ab);

/// [K(mu_i, mu_j)]_{ij}. The linear family returns the inner products unchanged.
Eigen::MatrixXd outer_gram(const OuterKernelSpec& spec, const EmbeddingGeometry& geom);

/// Row [K(mu_i, mu_t)]_i between training bags and one test bag (exact set kernel).
Eigen::RowVectorXd outer_cross(const OuterKernelSpec& spec, const BaseKernelSpec& base,
                               std::span<const PointBag> train_bags, const PointBag& test_bag);

/// Same row, from precomputed inner products.
Eigen::RowVectorXd outer_cross(const OuterKernelSpec& spec, const Eigen::VectorXd& train_diag,
                               double test_self, const Eigen::VectorXd& cross_inner);

}  // namespace merr
