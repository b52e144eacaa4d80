#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dsvd/svd1.hpp"

namespace dsvd {

namespace detail {

template <class S>
Vec<S> random_signal(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec<S> v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if constexpr (is_complex_v<S>) {
      const double re = g(rng);
      v(i) = S(re, g(rng));
    } else {
      v(i) = g(rng);
    }
  }
  return v;
}

// Node-wise C_T{R, u}: row i of the result is node i's estimate of R^H u.
template <class S>
Mat<S> gram_projection(ConsensusEngine& engine, const Mat<S>& r_rows, const Vec<S>& u) {
  Mat<S> contributions = r_rows.conjugate();
  contributions.array().colwise() *= u.array();
  return engine.estimate(contributions);
}

// Each node rescales its entry by its own estimate of the norm (one instance).
template <class S>
void normalize_signal(ConsensusEngine& engine, Vec<S>& u) {
  Vec<S> energy(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) energy(i) = S(abs2(u(i)));
  const Mat<S> est = engine.estimate(energy);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double e = std::real(S(est(i, 0)));
    if (e > 0.0) u(i) /= std::sqrt(e);
  }
}

}  // namespace detail

/**
 * d-PM baseline for the row-partitioned SVD: deflated power iterations on
 * R R^H, one vector at a time. Vector n costs P(T + n - 1) + T + 2 instances
 * and the right vectors NT, which adds up to
 * N(TP+T+2) + PN(N-1)/2 + NT for the full decomposition.
 */
template <class S>
NodeSvd<S> dpm_svd1(const Mat<S>& r_rows, int power_iterations, Eigen::Index n_vectors,
                    ConsensusEngine& engine, std::uint64_t seed, bool compute_right = true) {
  const Eigen::Index n = r_rows.rows(), t = r_rows.cols();
  require(n == Eigen::Index(engine.n_nodes()), "dpm_svd1: row count differs from node count");
  require(power_iterations >= 1, "dpm_svd1: need at least one power iteration");
  require(n_vectors >= 1 && n_vectors <= std::min(n, t), "dpm_svd1: n_vectors out of range");
  std::mt19937_64 rng(seed);
  Mat<S> u_all = Mat<S>::Zero(n, n_vectors);
  Mat<S> lambda(n, n_vectors);

  for (Eigen::Index k = 0; k < n_vectors; ++k) {
    Vec<S> u = detail::random_signal<S>(n, rng);
    for (int p = 0; p < power_iterations; ++p) {
      const Mat<S> c = detail::gram_projection(engine, r_rows, u);
      // Local step u_i <- (R c)_i / ||c||^2. The node already holds all of c,
      // so this rescaling needs no exchange and keeps the iterate bounded.
      Vec<S> next(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double cn = c.row(i).squaredNorm();
        next(i) = cn > 0.0 ? S((r_rows.row(i) * c.row(i).transpose())(0, 0) / cn) : S(0);
      }
      if (k > 0) {
        const Mat<S> g = project_consensus(engine, Mat<S>(u_all.leftCols(k)), next);
        for (Eigen::Index i = 0; i < n; ++i)
          next(i) -= (u_all.row(i).head(k) * g.row(i).transpose())(0, 0);
      }
      u = next;
    }
    detail::normalize_signal(engine, u);
    const Mat<S> c = detail::gram_projection(engine, r_rows, u);
    Vec<S> rayleigh(n);
    for (Eigen::Index i = 0; i < n; ++i)
      rayleigh(i) = conj(u(i)) * (r_rows.row(i) * c.row(i).transpose())(0, 0);
    lambda.col(k) = engine.estimate(rayleigh);
    u_all.col(k) = u;
  }

  NodeSvd<S> out;
  out.u = u_all;
  for (Eigen::Index i = 0; i < n; ++i) {
    RealVector s(n_vectors);
    for (Eigen::Index k = 0; k < n_vectors; ++k) s(k) = std::sqrt(std::max(std::real(S(lambda(i, k))), 0.0));
    out.sigma.push_back(s);
  }
  if (compute_right) out.v = right_singular_vectors(r_rows, out.u, out.sigma, engine);
  return out;
}

/// Dominant singular triplet of R = X Y^H at every node.
template <class S>
struct DominantTriplet {
  RealVector sigma;  // per node
  Vec<S> u;          // entry i held by node i
  Vec<S> v;
};

/**
 * d-pmSVD2 baseline (batch): interleaved power updates
 *   u <- X (Y^H v) + alpha u,  v <- Y (X^H u) + alpha v
 * with both iterates normalized every iteration, and
 * sigma_1 = |(X^H u)^H (Y^H v)| at the end. P(2T+2) + 2T instances.
 */
template <class S>
DominantTriplet<S> dpm_svd2(const Mat<S>& x_rows, const Mat<S>& y_rows, int power_iterations,
                            double alpha, ConsensusEngine& engine, std::uint64_t seed) {
  const Eigen::Index n = x_rows.rows();
  require(y_rows.rows() == n && y_rows.cols() == x_rows.cols(), "dpm_svd2: X and Y shapes differ");
  require(n == Eigen::Index(engine.n_nodes()), "dpm_svd2: row count differs from node count");
  require(alpha > 0.0 && alpha < 1.0, "dpm_svd2: alpha must lie in (0, 1)");
  require(power_iterations >= 1, "dpm_svd2: need at least one power iteration");
  std::mt19937_64 rng(seed);
  Vec<S> u = detail::random_signal<S>(n, rng);
  Vec<S> v = detail::random_signal<S>(n, rng);
  for (int p = 0; p < power_iterations; ++p) {
    const Mat<S> vh = detail::gram_projection(engine, y_rows, v);
    const Mat<S> uh = detail::gram_projection(engine, x_rows, u);
    Vec<S> un(n), vn(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      un(i) = (x_rows.row(i) * vh.row(i).transpose())(0, 0) + alpha * u(i);
      vn(i) = (y_rows.row(i) * uh.row(i).transpose())(0, 0) + alpha * v(i);
    }
    u = un;
    v = vn;
    detail::normalize_signal(engine, u);
    detail::normalize_signal(engine, v);
  }
  const Mat<S> vh = detail::gram_projection(engine, y_rows, v);
  const Mat<S> uh = detail::gram_projection(engine, x_rows, u);
  DominantTriplet<S> out{RealVector(n), u, v};
  for (Eigen::Index i = 0; i < n; ++i) out.sigma(i) = std::abs(S(uh.row(i).dot(vh.row(i))));
  return out;
}

}  // namespace dsvd
