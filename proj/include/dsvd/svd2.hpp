#pragma once

#include <cmath>
#include <vector>

#include "dsvd/evd.hpp"

namespace dsvd {

/// d-raSVD2 node state: the EVD state of M_U = R R^H plus the singular
/// values and this node's row of the scaled right factor V-breve = V Sigma.
template <class S>
struct Svd2NodeState : EvdNodeState<S> {
  RealVector sigma;
  RowVec<S> vbreve_row;
};

/// Zero state of an N x N outer-product sum tracked in m dimensions
/// (m = N for d-raSVD2, m = d for the truncated variant).
template <class S>
std::vector<Svd2NodeState<S>> init_svd2_states(std::size_t n_nodes, std::size_t m) {
  auto base = init_evd_states<S>(n_nodes, m);
  std::vector<Svd2NodeState<S>> states(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    static_cast<EvdNodeState<S>&>(states[i]) = base[i];
    states[i].sigma = RealVector::Zero(Eigen::Index(m));
    states[i].vbreve_row = RowVec<S>::Zero(Eigen::Index(m));
  }
  return states;
}

namespace detail {

// Both eigenpairs of B = [[beta, 1], [1, 0]]: gamma1 > 0 > gamma2 with
// gamma1 * gamma2 = -1 and eigenvectors proportional to (gamma, 1).
struct TwoByTwo {
  double gamma1, gamma2;
  double phi1x, phi1y, phi2x, phi2y;
};

inline TwoByTwo outer_pair_evd(double beta) {
  TwoByTwo e{};
  e.gamma1 = beta >= 0.0 ? 0.5 * (beta + std::sqrt(beta * beta + 4.0))
                         : 2.0 / (std::sqrt(beta * beta + 4.0) - beta);
  e.gamma2 = -1.0 / e.gamma1;
  const double n1 = std::hypot(e.gamma1, 1.0), n2 = std::hypot(e.gamma2, 1.0);
  e.phi1x = e.gamma1 / n1;
  e.phi1y = 1.0 / n1;
  e.phi2x = e.gamma2 / n2;
  e.phi2y = 1.0 / n2;
  return e;
}

template <class S>
void svd2_update(std::vector<Svd2NodeState<S>>& states, const Vec<S>& x, const Vec<S>& y,
                 ConsensusEngine& engine, bool truncated, const SecularOptions& opt) {
  const Eigen::Index n = x.size();
  require(y.size() == n && n == Eigen::Index(engine.n_nodes()), "d-SVD2: sample length mismatch");
  check_states(states, n);
  const Eigen::Index m = states.front().u_row.size();

  // beta = ||y||^2 (one instance)
  Vec<S> energy_contrib(n);
  for (Eigen::Index i = 0; i < n; ++i) energy_contrib(i) = S(abs2(y(i)));
  const Mat<S> beta = engine.estimate(energy_contrib);

  // V-breve^H y = Sigma V^H y (m instances); directions with zero singular
  // value carry no information and are dropped before forming y-tilde = R y.
  Mat<S> vb(n, m);
  for (Eigen::Index i = 0; i < n; ++i) vb.row(i) = states[std::size_t(i)].vbreve_row;
  const Mat<S> w = project_consensus(engine, vb, y);

  Vec<S> q1(n), q2(n);
  RealVector gamma1(n), gamma2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& st = states[std::size_t(i)];
    const double smax = st.sigma.size() ? st.sigma.maxCoeff() : 0.0;
    S ytilde = S(0);
    for (Eigen::Index k = 0; k < m; ++k)
      if (st.sigma(k) > 1e-12 * smax) ytilde += st.u_row(k) * w(i, k);
    const TwoByTwo e = outer_pair_evd(std::real(S(beta(i, 0))));
    gamma1(i) = e.gamma1;
    gamma2(i) = e.gamma2;
    q1(i) = e.phi1x * x(i) + e.phi1y * ytilde;
    q2(i) = e.phi2x * x(i) + e.phi2y * ytilde;
  }

  // Two consecutive rank-one modifications, gamma1 q1 q1^H then gamma2 q2 q2^H.
  Mat<S> z1;
  if (truncated) {
    z1 = augment_with_representative(states, q1, engine);
    for (auto& st : states) {
      st.vbreve_row.conservativeResize(m + 1);
      st.vbreve_row(m) = S(0);
    }
  } else {
    z1 = project_consensus(engine, stack_rows(states), q1);
  }
  const auto w1 = apply_rank_one(states, z1, gamma1, opt);
  const Mat<S> z2 = project_consensus(engine, stack_rows(states), q2);
  const auto w2 = apply_rank_one(states, z2, gamma2, opt);

  // x-breve = U(t)^H x, then V-breve(t) = V-breve(t-1) W' W'' + y x-breve^H.
  const Mat<S> xb = project_consensus(engine, stack_rows(states), x);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& st = states[std::size_t(i)];
    st.vbreve_row = (st.vbreve_row * w1[std::size_t(i)]->W) * w2[std::size_t(i)]->W +
                    y(i) * xb.row(i).conjugate();
  }
  if (truncated) {
    truncate_states(states, m);
    for (auto& st : states) st.vbreve_row.conservativeResize(m);
  }
  for (auto& st : states) st.sigma = sigma_from_eigvals(st.eigvals, "d-SVD2");
}

}  // namespace detail

/**
 * d-raSVD2: folds one sample pair into the SVD of R = sum_t x(t) y(t)^H
 * using only the state of the previous step. 4N+1 instances per pair.
 */
template <class S>
void dra_svd2_update(std::vector<Svd2NodeState<S>>& states, const Vec<S>& x, const Vec<S>& y,
                     ConsensusEngine& engine, const SecularOptions& opt = {}) {
  require(states.size() == engine.n_nodes() &&
              states.front().u_row.size() == Eigen::Index(engine.n_nodes()),
          "dra_svd2_update: states must track all N directions");
  detail::svd2_update(states, x, y, engine, false, opt);
}

/// Truncated d-raSVD2 keeping the d leading triplets; 4(d+1) instances per
/// pair. The tracked dimension is taken from the states.
template <class S>
void dtra_svd2_update(std::vector<Svd2NodeState<S>>& states, const Vec<S>& x, const Vec<S>& y,
                      ConsensusEngine& engine, const SecularOptions& opt = {}) {
  require(!states.empty() && states.front().u_row.size() >= 1 &&
              states.front().u_row.size() < Eigen::Index(engine.n_nodes()),
          "dtra_svd2_update: need 1 <= d < N");
  detail::svd2_update(states, x, y, engine, true, opt);
}

/// Right singular vectors V = V-breve Sigma^{-1}, stacked by node rows.
/// Columns whose singular value is numerically zero are left at zero.
template <class S>
Mat<S> svd2_right_vectors(const std::vector<Svd2NodeState<S>>& states) {
  const auto n = Eigen::Index(states.size());
  const Eigen::Index m = states.front().vbreve_row.size();
  Mat<S> v = Mat<S>::Zero(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& st = states[std::size_t(i)];
    const double smax = st.sigma.size() ? st.sigma.maxCoeff() : 0.0;
    for (Eigen::Index k = 0; k < m; ++k)
      if (st.sigma(k) > kZeroSigmaRel * smax) v(i, k) = st.vbreve_row(k) / st.sigma(k);
  }
  return v;
}

}  // namespace dsvd
