#pragma once

#include <vector>

#include "dsvd/evd.hpp"

namespace dsvd {

/**
 * Decentralized SVD of a row-partitioned N x T matrix R as seen by the
 * network: node i owns row i of U and its own copies of the singular values
 * and (optionally) of the right singular vectors.
 */
template <class S>
struct NodeSvd {
  std::vector<RealVector> sigma;  // per node, descending
  Mat<S> u;                       // row i held by node i
  std::vector<Mat<S>> v;          // per node T x m copies; empty when not requested
};

namespace detail {

// Deterministic orthonormal completion: columns flagged in `missing` are
// replaced by Gram-Schmidt on the standard basis against every kept column.
template <class S>
void complete_columns(Mat<S>& v, const std::vector<bool>& missing) {
  const Eigen::Index t = v.rows();
  Eigen::Index next_basis = 0;
  for (Eigen::Index k = 0; k < v.cols(); ++k) {
    if (!missing[std::size_t(k)]) continue;
    v.col(k).setZero();
    while (next_basis < t) {
      Vec<S> c = Vec<S>::Unit(t, next_basis++);
      // two passes keep the completion orthogonal to working precision
      for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index j = 0; j < v.cols(); ++j) {
          if (j == k || v.col(j).squaredNorm() == 0.0) continue;
          c -= v.col(j) * v.col(j).dot(c);
        }
      const double nrm = c.norm();
      if (nrm > 1e-8) {
        v.col(k) = c / nrm;
        break;
      }
    }
  }
}

}  // namespace detail

/**
 * v_n = C_T{R, u_n} / sigma_n at every node. Only columns with sigma above
 * the zero threshold are exchanged (T instances each); the rest are
 * completed locally. `sigma` holds each node's singular values.
 */
template <class S>
std::vector<Mat<S>> right_singular_vectors(const Mat<S>& r_rows, const Mat<S>& u_rows,
                                           const std::vector<RealVector>& sigma,
                                           ConsensusEngine& engine) {
  const Eigen::Index n = r_rows.rows(), t = r_rows.cols(), m = u_rows.cols();
  require(u_rows.rows() == n && Eigen::Index(sigma.size()) == n,
          "right_singular_vectors: inconsistent node count");
  // Every node must agree on which columns are exchanged. The first node's
  // values decide; other nodes differ from them only by consensus error.
  const RealVector& ref = sigma.front();
  const double sigma_max = ref.size() ? ref.maxCoeff() : 0.0;
  std::vector<Eigen::Index> positive;
  std::vector<bool> missing(std::size_t(m), true);
  for (Eigen::Index k = 0; k < m; ++k)
    if (sigma_max > 0.0 && ref(k) > kZeroSigmaRel * sigma_max) {
      positive.push_back(k);
      missing[std::size_t(k)] = false;
    }
  const auto p = Eigen::Index(positive.size());
  Mat<S> contributions(n, t * p);
  for (Eigen::Index c = 0; c < p; ++c)
    for (Eigen::Index tt = 0; tt < t; ++tt)
      contributions.col(c * t + tt) = r_rows.col(tt).conjugate().cwiseProduct(u_rows.col(positive[std::size_t(c)]));
  const Mat<S> est = engine.estimate(contributions);
  std::vector<Mat<S>> out(std::size_t(n), Mat<S>::Zero(t, m));
  for (Eigen::Index i = 0; i < n; ++i) {
    Mat<S>& v = out[std::size_t(i)];
    for (Eigen::Index c = 0; c < p; ++c) {
      const Eigen::Index k = positive[std::size_t(c)];
      v.col(k) = est.row(i).segment(c * t, t).transpose() / sigma[std::size_t(i)](k);
    }
    detail::complete_columns(v, missing);
  }
  return out;
}

namespace detail {

template <class S>
NodeSvd<S> finish_svd1(const Mat<S>& r_rows, const std::vector<EvdNodeState<S>>& states,
                       ConsensusEngine& engine, bool compute_right) {
  NodeSvd<S> out;
  out.u = stack_rows(states);
  for (const auto& st : states) out.sigma.push_back(sigma_from_eigvals(st.eigvals, "d-SVD1"));
  if (compute_right) out.v = right_singular_vectors(r_rows, out.u, out.sigma, engine);
  return out;
}

}  // namespace detail

/**
 * d-raSVD1: the left singular vectors of R are the eigenvectors of
 * R R^H = sum_t r(t) r(t)^H, built column by column with T rank-one
 * updates. NT instances, plus NT for the right vectors.
 */
template <class S>
NodeSvd<S> dra_svd1(const Mat<S>& r_rows, ConsensusEngine& engine, bool compute_right = true,
                    const SecularOptions& opt = {}) {
  const Eigen::Index n = r_rows.rows();
  require(n == Eigen::Index(engine.n_nodes()), "dra_svd1: row count differs from node count");
  require(n <= r_rows.cols(), "dra_svd1: needs N <= T");
  auto states = init_evd_states<S>(std::size_t(n), std::size_t(n));
  for (Eigen::Index t = 0; t < r_rows.cols(); ++t) dra_evd_update<S>(states, r_rows.col(t), 1.0, engine, opt);
  return detail::finish_svd1(r_rows, states, engine, compute_right);
}

/// Truncated d-raSVD1 tracking the d leading singular triplets:
/// (d+1)T instances for the updates and dT for the right vectors.
template <class S>
NodeSvd<S> dtra_svd1(const Mat<S>& r_rows, Eigen::Index d, ConsensusEngine& engine,
                     bool compute_right = true, const SecularOptions& opt = {}) {
  const Eigen::Index n = r_rows.rows();
  require(n == Eigen::Index(engine.n_nodes()), "dtra_svd1: row count differs from node count");
  require(d >= 1 && d < n, "dtra_svd1: need 1 <= d < N");
  auto states = init_evd_states<S>(std::size_t(n), std::size_t(d));
  for (Eigen::Index t = 0; t < r_rows.cols(); ++t) dtra_evd_update<S>(states, r_rows.col(t), 1.0, engine, opt);
  return detail::finish_svd1(r_rows, states, engine, compute_right);
}

}  // namespace dsvd
