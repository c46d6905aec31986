#pragma once

#include <cmath>

namespace merr::detail {

inline double base_kernel_unchecked(BaseFamily family, double bandwidth, const double* u,
                                    const double* v, Eigen::Index d) {
  switch (family) {
    case BaseFamily::gaussian: {
      double sq = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double diff = u[j] - v[j];
        sq += diff * diff;
      }
      return std::exp(-sq / (2.0 * bandwidth * bandwidth));
    }
    case BaseFamily::laplacian: {
      double l1 = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) l1 += std::abs(u[j] - v[j]);
      return std::exp(-l1 / bandwidth);
    }
    case BaseFamily::cauchy: {
      double sq = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double diff = u[j] - v[j];
        sq += diff * diff;
      }
      return 1.0 / (1.0 + sq / (bandwidth * bandwidth));
    }
  }
  return 0.0;
}

}  // namespace merr::detail
