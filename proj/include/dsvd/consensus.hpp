#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dsvd/core.hpp"
#include "dsvd/graph.hpp"

namespace dsvd {

/// Counts consensus instances: one network-wide scalar summation each.
/// A complex scalar counts as one instance.
class CostLedger {
 public:
  void charge(std::uint64_t k) { instances_ += k; }
  std::uint64_t instances() const { return instances_; }

 private:
  std::uint64_t instances_ = 0;
};

enum class EngineKind { exact, average_consensus, push_sum };

inline std::string_view to_string(EngineKind kind) {
  switch (kind) {
    case EngineKind::exact: return "exact";
    case EngineKind::average_consensus: return "ac";
    case EngineKind::push_sum: return "ps";
  }
  return "?";
}

inline EngineKind parse_engine_kind(std::string_view name) {
  if (name == "exact") return EngineKind::exact;
  if (name == "ac") return EngineKind::average_consensus;
  if (name == "ps") return EngineKind::push_sum;
  throw PreconditionError("unknown consensus engine '" + std::string(name) +
                          "' (expected exact, ac or ps)");
}

/**
 * Network summation primitive over a fixed connected graph.
 *
 * Every call takes one local contribution per node and per parallel instance
 * (an N x k block, row i held by node i) and returns, for every node, its
 * estimate of the k column sums. The exact engine returns the true sums at
 * every node. Average consensus runs synchronous Metropolis mixing and scales
 * the averaged iterate by N. Push-sum keeps value and weight iterates (weights
 * start at 1), splits both uniformly over the node and its neighbors each
 * round, and reports N * value / weight.
 *
 * Both iterative protocols are linear in the contributions, so the engine
 * runs the configured rounds once on the basis signals and applies the
 * resulting N x N transfer matrix to every later call. simulate_rounds()
 * executes the message passing directly and serves as the reference.
 */
class ConsensusEngine {
 public:
  ConsensusEngine(EngineKind kind, Graph graph, int iterations = 0)
      : kind_(kind), graph_(std::move(graph)), iterations_(iterations) {
    if (!graph_.is_connected())
      throw ConnectivityError("consensus: graph with " + std::to_string(graph_.n_nodes()) +
                              " nodes is not connected");
    require(kind_ == EngineKind::exact || iterations_ >= 1,
            "consensus: iterative engines need at least one iteration");
    if (kind_ != EngineKind::exact) build_transfer();
  }

  static ConsensusEngine exact(const Graph& g) { return {EngineKind::exact, g}; }
  static ConsensusEngine average_consensus(const Graph& g, int iterations) {
    return {EngineKind::average_consensus, g, iterations};
  }
  static ConsensusEngine push_sum(const Graph& g, int iterations) {
    return {EngineKind::push_sum, g, iterations};
  }

  EngineKind kind() const { return kind_; }
  bool is_exact() const { return kind_ == EngineKind::exact; }
  int iterations() const { return iterations_; }
  const Graph& graph() const { return graph_; }
  std::size_t n_nodes() const { return graph_.n_nodes(); }
  CostLedger& ledger() { return ledger_; }
  const CostLedger& ledger() const { return ledger_; }

  /// Per-node estimates of the column sums of an N x k contribution block.
  template <class Derived>
  Mat<typename Derived::Scalar> estimate(const Eigen::MatrixBase<Derived>& contributions) {
    using S = typename Derived::Scalar;
    require(contributions.rows() == Eigen::Index(n_nodes()),
            "consensus: contribution block has " + std::to_string(contributions.rows()) +
                " rows, graph has " + std::to_string(n_nodes()) + " nodes");
    ledger_.charge(std::uint64_t(contributions.cols()));
    if (kind_ == EngineKind::exact) {
      const Eigen::Matrix<S, 1, Eigen::Dynamic> sums = contributions.colwise().sum();
      return sums.replicate(contributions.rows(), 1);
    }
    return transfer_.template cast<S>() * contributions;
  }

  /// Round-by-round message passing for a single signal; no ledger charge.
  template <class S>
  Vec<S> simulate_rounds(const Vec<S>& x) const {
    require(x.size() == Eigen::Index(n_nodes()), "consensus: signal length mismatch");
    const auto n = Eigen::Index(n_nodes());
    if (kind_ == EngineKind::exact) return Vec<S>::Constant(n, x.sum());
    if (kind_ == EngineKind::average_consensus) {
      Vec<S> state = x;
      for (int r = 0; r < iterations_; ++r) {
        Vec<S> next(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          S acc = weights_(i, i) * state(i);
          for (std::size_t j : graph_.neighbors(std::size_t(i)))
            acc += weights_(i, Eigen::Index(j)) * state(Eigen::Index(j));
          next(i) = acc;
        }
        state = next;
      }
      return state * double(n);
    }
    Vec<S> value = x;
    RealVector weight = RealVector::Ones(n);
    for (int r = 0; r < iterations_; ++r) {
      Vec<S> next_value = Vec<S>::Zero(n);
      RealVector next_weight = RealVector::Zero(n);
      for (Eigen::Index j = 0; j < n; ++j) {
        const double share = 1.0 / double(graph_.degree(std::size_t(j)) + 1);
        next_value(j) += share * value(j);
        next_weight(j) += share * weight(j);
        for (std::size_t i : graph_.neighbors(std::size_t(j))) {
          next_value(Eigen::Index(i)) += share * value(j);
          next_weight(Eigen::Index(i)) += share * weight(j);
        }
      }
      value = next_value;
      weight = next_weight;
    }
    Vec<S> out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = double(n) * value(i) / weight(i);
    return out;
  }

  /// Linear map from contributions to per-node estimates (identity scaled
  /// sums for the exact engine).
  RealMatrix transfer_matrix() const {
    if (kind_ == EngineKind::exact)
      return RealMatrix::Ones(Eigen::Index(n_nodes()), Eigen::Index(n_nodes()));
    return transfer_;
  }

 private:
  void build_transfer() {
    const auto n = Eigen::Index(n_nodes());
    if (kind_ == EngineKind::average_consensus) {
      weights_ = metropolis_weights(graph_);
      RealMatrix state = RealMatrix::Identity(n, n);
      for (int r = 0; r < iterations_; ++r) state = weights_ * state;
      transfer_ = double(n) * state;
      return;
    }
    RealMatrix mixing = RealMatrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double share = 1.0 / double(graph_.degree(std::size_t(j)) + 1);
      mixing(j, j) = share;
      for (std::size_t i : graph_.neighbors(std::size_t(j))) mixing(Eigen::Index(i), j) = share;
    }
    RealMatrix state = RealMatrix::Identity(n, n);
    RealVector weight = RealVector::Ones(n);
    for (int r = 0; r < iterations_; ++r) {
      state = mixing * state;
      weight = mixing * weight;
    }
    transfer_ = double(n) * weight.cwiseInverse().asDiagonal() * state;
  }

  EngineKind kind_;
  Graph graph_;
  int iterations_ = 0;
  RealMatrix weights_;
  RealMatrix transfer_;
  CostLedger ledger_;
};

/// Scalar-sum primitive: every node's estimate of sum_i x_i. One instance.
template <class S>
Vec<S> sum_consensus(ConsensusEngine& engine, const GraphSignal<S>& x) {
  return engine.estimate(x);
}

/**
 * Inner-product primitive: node i contributes rows X_i (width a) and Y_i
 * (width b); every node receives its a x b estimate of X^H Y. Charges a*b
 * instances.
 */
template <class S>
std::vector<Mat<S>> inner_product_consensus(ConsensusEngine& engine, const Mat<S>& x_rows,
                                            const Mat<S>& y_rows) {
  require(x_rows.rows() == y_rows.rows(), "inner_product_consensus: row count mismatch");
  const Eigen::Index n = x_rows.rows(), a = x_rows.cols(), b = y_rows.cols();
  Mat<S> contributions(n, a * b);
  for (Eigen::Index q = 0; q < b; ++q)
    for (Eigen::Index p = 0; p < a; ++p)
      contributions.col(q * a + p) = x_rows.col(p).conjugate().cwiseProduct(y_rows.col(q));
  const Mat<S> est = engine.estimate(contributions);
  std::vector<Mat<S>> out(std::size_t(n), Mat<S>(a, b));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index q = 0; q < b; ++q)
      for (Eigen::Index p = 0; p < a; ++p) out[std::size_t(i)](p, q) = est(i, q * a + p);
  return out;
}

/// Per-node estimates of U^H x: row i of the result is node i's estimate.
/// Charges U.cols() instances.
template <class S>
Mat<S> project_consensus(ConsensusEngine& engine, const Mat<S>& u_rows, const Vec<S>& x) {
  require(u_rows.rows() == x.size(), "project_consensus: row count mismatch");
  Mat<S> contributions = u_rows.conjugate();
  contributions.array().colwise() *= x.array();
  return engine.estimate(contributions);
}

}  // namespace dsvd
