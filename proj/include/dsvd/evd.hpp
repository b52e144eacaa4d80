#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "dsvd/consensus.hpp"
#include "dsvd/secular.hpp"

namespace dsvd {

template <class S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;

/// What node i keeps between rank-one updates: every tracked eigenvalue and
/// its own row of the eigenvector matrix.
template <class S>
struct EvdNodeState {
  using Scalar = S;
  std::size_t node_id = 0;
  RealVector eigvals;  // descending
  RowVec<S> u_row;
};

/// Tracked dimension d for the truncated variant; the representative
/// direction is appended only for the duration of an update.
template <class S>
using TruncatedState = EvdNodeState<S>;

/// Zero eigenvalues and u_row = e_i restricted to the first m coordinates.
template <class S>
std::vector<EvdNodeState<S>> init_evd_states(std::size_t n_nodes, std::size_t m) {
  require(n_nodes > 0 && m > 0, "init_evd_states: sizes must be positive");
  require(m <= n_nodes, "init_evd_states: tracked dimension exceeds node count");
  std::vector<EvdNodeState<S>> states(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    states[i].node_id = i;
    states[i].eigvals = RealVector::Zero(Eigen::Index(m));
    states[i].u_row = RowVec<S>::Zero(Eigen::Index(m));
    if (i < m) states[i].u_row(Eigen::Index(i)) = S(1);
  }
  return states;
}

/// Stacks the nodes' rows into the N x m eigenvector matrix.
template <class State, class S = typename State::Scalar>
Mat<S> stack_rows(const std::vector<State>& states) {
  require(!states.empty(), "stack_rows: no states");
  Mat<S> u(Eigen::Index(states.size()), states.front().u_row.size());
  for (std::size_t i = 0; i < states.size(); ++i) u.row(Eigen::Index(i)) = states[i].u_row;
  return u;
}

/// Singular values below this fraction of the largest are treated as zero
/// when forming right singular vectors.
inline constexpr double kZeroSigmaRel = 1e-7;

/// Singular values from eigenvalues of a Gram matrix. Negative roundoff up to
/// 1e-9 of the trace is clamped; anything larger means the update diverged.
inline RealVector sigma_from_eigvals(const RealVector& eigvals, const char* who) {
  const double trace = eigvals.cwiseMax(0.0).sum();
  RealVector sigma(eigvals.size());
  for (Eigen::Index k = 0; k < eigvals.size(); ++k) {
    if (eigvals(k) < -1e-9 * std::max(trace, 1e-300))
      throw NumericalError(std::string(who) + ": Gram eigenvalue " + std::to_string(eigvals(k)) +
                           " is negative beyond roundoff");
    sigma(k) = std::sqrt(std::max(eigvals(k), 0.0));
  }
  return sigma;
}

template <class S>
using SharedEvd = std::shared_ptr<const RankOneEvd<S>>;

namespace detail {

// Every node solves its local rank-one problem (with its own estimate of z
// and, for the SVD2 updates, its own rho) and rotates its row. Nodes holding
// bit-identical inputs (always the case with exact consensus) share one solve.
template <class State, class S = typename State::Scalar>
std::vector<SharedEvd<S>> apply_rank_one(std::vector<State>& states, const Mat<S>& z_rows,
                                         const RealVector& rho, const SecularOptions& opt) {
  std::vector<SharedEvd<S>> out(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto r = Eigen::Index(i);
    if (i > 0 && rho(r) == rho(r - 1) && states[i].eigvals == states[i - 1].eigvals &&
        z_rows.row(r) == z_rows.row(r - 1)) {
      out[i] = out[i - 1];
    } else {
      const Vec<S> z = z_rows.row(r).transpose();
      out[i] = std::make_shared<const RankOneEvd<S>>(
          rank_one_diag_evd(states[i].eigvals, z, rho(r), opt));
    }
  }
  // Rows are rotated only after every node solved, since the cache above
  // compares against the pre-update eigenvalues of the previous node.
  for (std::size_t i = 0; i < states.size(); ++i) {
    states[i].eigvals = out[i]->eigvals;
    states[i].u_row = states[i].u_row * out[i]->W;
  }
  return out;
}

template <class State>
void check_states(const std::vector<State>& states, Eigen::Index n) {
  require(Eigen::Index(states.size()) == n,
          "d-EVD: " + std::to_string(states.size()) + " states for " + std::to_string(n) + " nodes");
  for (const auto& s : states)
    require(s.eigvals.size() == s.u_row.size() && s.eigvals.size() == states.front().eigvals.size(),
            "d-EVD: inconsistent node state dimensions");
}

/**
 * Appends the representative direction for x to every node's basis:
 * a = C_d{U, x} and ||x||^2 from one more instance, then
 * z_{d+1} = sqrt(||x||^2 - ||a||^2) and p_i = (x_i - U_i a) / z_{d+1}.
 * Returns the (d+1)-entry rank-one vectors, one row per node.
 */
template <class State, class S = typename State::Scalar>
Mat<S> augment_with_representative(std::vector<State>& states, const Vec<S>& x,
                                   ConsensusEngine& engine) {
  const Eigen::Index n = x.size();
  const Eigen::Index d = states.front().u_row.size();
  Mat<S> contributions(n, d + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    contributions.row(i).head(d) = states[std::size_t(i)].u_row.conjugate() * x(i);
    contributions(i, d) = S(abs2(x(i)));
  }
  Mat<S> z = engine.estimate(contributions);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& st = states[std::size_t(i)];
    const RowVec<S> a = z.row(i).head(d);
    const double energy = std::real(S(z(i, d)));
    double radicand = energy - a.squaredNorm();
    if (radicand < -1e-9 * std::abs(energy))
      throw NumericalError("d-TraEVD: node " + std::to_string(i) +
                           " complement energy is negative beyond tolerance (" +
                           std::to_string(radicand) + "); consensus estimates diverged");
    radicand = std::max(radicand, 0.0);
    const double zlast = std::sqrt(radicand);
    S p = S(0);
    z(i, d) = S(0);
    if (zlast > 1e-12 * std::sqrt(std::max(energy, 0.0))) {
      p = (x(i) - (st.u_row * a.transpose())(0, 0)) / zlast;
      z(i, d) = S(zlast);
    }
    st.eigvals.conservativeResize(d + 1);
    st.eigvals(d) = 0.0;
    st.u_row.conservativeResize(d + 1);
    st.u_row(d) = p;
  }
  return z;
}

template <class State>
void truncate_states(std::vector<State>& states, Eigen::Index d) {
  for (auto& st : states) {
    st.eigvals.conservativeResize(d);
    st.u_row.conservativeResize(d);
  }
}

}  // namespace detail

/**
 * One decentralized rank-one update M <- M + rho x x^H over the full
 * eigenspace. Charges N instances for z = C_N{U, x}. Returns each node's
 * local rotation W (shared between nodes that solved identical problems).
 */
template <class S>
std::vector<SharedEvd<S>> dra_evd_update(std::vector<EvdNodeState<S>>& states, const Vec<S>& x,
                                         double rho, ConsensusEngine& engine,
                                         const SecularOptions& opt = {}) {
  require(rho != 0.0, "dra_evd_update: rho must be nonzero");
  require(x.size() == Eigen::Index(engine.n_nodes()), "dra_evd_update: signal length mismatch");
  detail::check_states(states, x.size());
  const Mat<S> z = project_consensus(engine, stack_rows(states), x);
  return detail::apply_rank_one(states, z, RealVector::Constant(x.size(), rho), opt);
}

/**
 * Truncated update tracking the d leading eigenpairs. The basis is
 * augmented with the representative direction of x, the rank-one problem is
 * solved in dimension d+1, and the smallest pair is dropped again. Charges
 * d+1 instances. Only Gram-type updates (rho > 0) are meaningful here.
 */
template <class S>
void dtra_evd_update(std::vector<TruncatedState<S>>& states, const Vec<S>& x, double rho,
                     ConsensusEngine& engine, const SecularOptions& opt = {}) {
  require(rho > 0.0, "dtra_evd_update: rho must be positive");
  require(x.size() == Eigen::Index(engine.n_nodes()), "dtra_evd_update: signal length mismatch");
  detail::check_states(states, x.size());
  const Eigen::Index d = states.front().u_row.size();
  require(d >= 1, "dtra_evd_update: d must be >= 1");
  const Mat<S> z = detail::augment_with_representative(states, x, engine);
  detail::apply_rank_one(states, z, RealVector::Constant(x.size(), rho), opt);
  detail::truncate_states(states, d);
}

}  // namespace dsvd
