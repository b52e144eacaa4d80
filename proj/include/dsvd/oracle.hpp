#pragma once

#include <Eigen/SVD>

#include "dsvd/core.hpp"

namespace dsvd {

template <class S>
struct DenseSvd {
  Mat<S> U;
  RealVector sigma;  // descending
  Mat<S> V;
};

/// Centralized reference SVD (full U and V, singular values descending).
template <class S>
DenseSvd<S> centralized_svd_oracle(const Mat<S>& a) {
  require(a.allFinite(), "centralized_svd_oracle: non-finite entries");
  Eigen::BDCSVD<Mat<S>> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

/// Rotates every column so its first largest-magnitude entry is real and
/// non-negative. Used to compare vectors whose global phase is free.
template <class S>
Mat<S> normalize_phase(Mat<S> m) {
  for (Eigen::Index k = 0; k < m.cols(); ++k) {
    Eigen::Index best = 0;
    double mag = -1.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (std::abs(m(i, k)) > mag * (1.0 + 1e-12)) {
        mag = std::abs(m(i, k));
        best = i;
      }
    if (mag > 0.0) m.col(k) *= conj(m(best, k)) / mag;
  }
  return m;
}

/// Orthogonal projector onto the span of the given columns.
template <class S>
Mat<S> column_projector(const Mat<S>& basis) {
  return basis * basis.adjoint();
}

}  // namespace dsvd
