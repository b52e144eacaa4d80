#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "dsvd/core.hpp"

namespace dsvd {

struct SecularOptions {
  /// Stopping tolerance on the change of the root iterate (taken or estimated).
  double tol = 1e-9;
  /// Absolute mode compares changes in the caller's eigenvalue units, the
  /// default compares them with the distance from the root to its nearest pole.
  bool absolute_tol = false;
  int max_iter = 50;
  /// Relative threshold for zero-z and coincident-eigenvalue deflation.
  double deflation_tol = 1e-12;
  /// Eigenvalues closer than tie_tol * max(1, max|lambda|) share a sort slot.
  double tie_tol = 1e-6;
};

/// Diagonal-plus-rank-one problem diag(lambdas) + rho z z^H.
template <class S>
struct RankOneProblem {
  RealVector lambdas;  // descending
  Vec<S> z;
  double rho = 1.0;
};

template <class S>
struct RankOneEvd {
  RealVector eigvals;  // descending up to tie clusters
  Mat<S> W;            // columns are eigenvectors, rows follow the input order
  std::vector<std::size_t> perm;
  int max_iterations = 0;  // largest root-finder iteration count over all roots
};

struct SecularRoot {
  double value = 0.0;
  int iterations = 0;
};

/**
 * Canonical descending order shared by every node. After a stable
 * descending sort, runs of values whose consecutive gaps are at most
 * tie_tol form one cluster; members of a cluster keep their input order.
 * Entry k of the result is the input index placed at position k.
 */
inline std::vector<std::size_t> unify_sort_permutation(const RealVector& values,
                                                       double tie_tol) {
  const auto m = std::size_t(values.size());
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values(Eigen::Index(a)) > values(Eigen::Index(b));
  });
  std::size_t start = 0;
  while (start < m) {
    std::size_t end = start + 1;
    while (end < m && values(Eigen::Index(order[end - 1])) - values(Eigen::Index(order[end])) <=
                          tie_tol)
      ++end;
    std::sort(order.begin() + std::ptrdiff_t(start), order.begin() + std::ptrdiff_t(end));
    start = end;
  }
  return order;
}

/// Reorders eigvals and the columns of W by unify_sort_permutation.
template <class S>
std::vector<std::size_t> unify_sort_order(RealVector& eigvals, Mat<S>& W, double tie_tol) {
  require(W.cols() == eigvals.size(), "unify_sort_order: W column count mismatch");
  std::vector<std::size_t> perm = unify_sort_permutation(eigvals, tie_tol);
  RealVector sorted(eigvals.size());
  Mat<S> permuted(W.rows(), W.cols());
  for (std::size_t k = 0; k < perm.size(); ++k) {
    sorted(Eigen::Index(k)) = eigvals(Eigen::Index(perm[k]));
    permuted.col(Eigen::Index(k)) = W.col(Eigen::Index(perm[k]));
  }
  eigvals = std::move(sorted);
  W = std::move(permuted);
  return perm;
}

namespace detail {

// Secular equation in canonical form: ascending strictly increasing poles d,
// positive weights w = |z|^2, rho > 0, all divided by a common scale.
//   f(lambda) = 1 + rho * sum_k w_k / (d_k - lambda)
// Root j lies in (d_j, d_{j+1}); the last root lies in (d_{m-1}, d_{m-1} + rho*sum w).
// Each root is stored as an origin pole plus an offset so that differences
// d_k - root stay accurate next to the pole.
struct CanonicalSecular {
  std::vector<double> d;
  std::vector<double> w;
  double rho = 1.0;
  double scale = 1.0;

  struct Root {
    std::size_t origin = 0;
    double eta = 0.0;
    int iterations = 0;
  };

  double difference(std::size_t k, const Root& r) const { return (d[k] - d[r.origin]) - r.eta; }

  double value(const Root& r) const { return d[r.origin] + r.eta; }

  // Root j in the caller's units, clipped to its interlacing interval.
  double unscaled_value(const Root& r, std::size_t j) const {
    const double upper = j + 1 < d.size() ? raw_d[j + 1] : raw_outer;
    return std::clamp(value(r) * scale, raw_d[j], upper);
  }

  std::vector<double> raw_d;
  double raw_outer = 0.0;

  Root solve(std::size_t j, const SecularOptions& opt) const {
    const std::size_t m = d.size();
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const bool last = j + 1 == m;
    const double wsum = std::accumulate(w.begin(), w.end(), 0.0);

    Root root;
    double lo = 0.0, hi = 0.0;
    const double outer = rho * wsum;
    if (last) {
      root.origin = j;
      lo = 0.0;
      hi = outer;
      root.eta = 0.5 * hi;
    } else {
      const double gap = d[j + 1] - d[j];
      root.origin = j;
      root.eta = 0.5 * gap;
      if (evaluate(root, j).f >= 0.0) {
        lo = 0.0;
        hi = 0.5 * gap;
      } else {
        root.origin = j + 1;
        root.eta = -0.5 * gap;
        lo = -0.5 * gap;
        hi = 0.0;
      }
    }

    if (m == 1) {
      root.eta = outer;
    } else {
      // the model built at the bracket midpoint gives the starting iterate
      const double guess = step(root, j, lo, hi);
      if (guess > lo && guess < hi) root.eta = guess;
    }

    Eval e = evaluate(root, j);
    if (e.f == 0.0 || std::abs(e.f) <= 8.0 * eps * e.magnitude) return root;
    for (int it = 1; it <= opt.max_iter; ++it) {
      root.iterations = it;
      if (e.f < 0.0) lo = std::max(lo, root.eta);
      else hi = std::min(hi, root.eta);

      double next = step(root, j, lo, hi);
      const double bound_here = opt.absolute_tol ? opt.tol / scale : opt.tol * std::abs(root.eta);
      // A step below the tolerance means the iterate already sits on the root,
      // even when the proposal lands on a bracket end.
      if (std::abs(next - root.eta) <= bound_here) {
        if (next > lo && next < hi) root.eta = next;
        return root;
      }
      // The outer end of the last interval is itself a root when m = 1.
      if (last && hi == outer && next > hi) next = hi;
      if (!(next > lo && (next < hi || (last && next == outer)))) next = 0.5 * (lo + hi);
      const double change = next - root.eta;
      root.eta = next;
      e = evaluate(root, j);
      const double bound = opt.absolute_tol ? opt.tol / scale : opt.tol * std::abs(root.eta);
      // In absolute mode the Newton estimate of the next change also counts.
      const double estimate = std::abs(e.f) / (e.dpsi + e.dphi);
      if (e.f == 0.0 || std::abs(change) <= bound || (opt.absolute_tol && estimate <= bound) ||
          std::abs(e.f) <= 8.0 * eps * e.magnitude)
        return root;
    }
    throw ConvergenceError("secular: root " + std::to_string(j) + " did not converge in " +
                               std::to_string(opt.max_iter) + " iterations",
                           value(root) * scale);
  }

 private:
  struct Eval {
    double f = 0.0;
    double psi = 0.0, dpsi = 0.0;  // poles at or left of d_j
    double phi = 0.0, dphi = 0.0;  // poles right of d_j
    double magnitude = 0.0;        // 1 + sum of |terms|, for the roundoff test
  };

  Eval evaluate(const Root& r, std::size_t j) const {
    Eval e;
    for (std::size_t k = 0; k < d.size(); ++k) {
      const double inv = 1.0 / difference(k, r);
      const double term = rho * w[k] * inv;
      if (k <= j) {
        e.psi += term;
        e.dpsi += term * inv;
      } else {
        e.phi += term;
        e.dphi += term * inv;
      }
    }
    e.f = 1.0 + e.psi + e.phi;
    e.magnitude = 1.0 + std::abs(e.psi) + std::abs(e.phi);
    return e;
  }

  // Local model of f around the iterate r: the two poles a < b bounding the
  // root enter exactly, and the remaining sums on each side are replaced by
  // osculatory approximants p + q/(d_k - x) placed at their nearest pole. The
  // model is increasing between its poles, so its root in (lo, hi) is found by
  // Newton steps safeguarded with bisection. Coordinates are relative to
  // r.origin. NaN when the model has no root in (lo, hi).
  double model_root(const Root& r, std::size_t a, double lo, double hi) const {
    const std::size_t m = d.size(), b = a + 1;
    double c = 1.0;
    struct Pole {
      double at, weight;
    };
    Pole poles[4];
    int count = 0;
    auto osculate = [&](std::size_t from, std::size_t to, std::size_t nearest) {
      double s = 0.0, ds = 0.0;
      for (std::size_t k = from; k < to; ++k) {
        const double inv = 1.0 / difference(k, r);
        s += rho * w[k] * inv;
        ds += rho * w[k] * inv * inv;
      }
      const double delta = difference(nearest, r);
      c += s - ds * delta;
      poles[count++] = {d[nearest] - d[r.origin], ds * delta * delta};
    };
    if (a > 0) osculate(0, a, a - 1);
    if (b + 1 < m) osculate(b + 1, m, b + 1);
    poles[count++] = {d[a] - d[r.origin], rho * w[a]};
    poles[count++] = {d[b] - d[r.origin], rho * w[b]};

    auto g = [&](double x, double& slope) {
      double v = c;
      slope = 0.0;
      for (int k = 0; k < count; ++k) {
        const double inv = 1.0 / (poles[k].at - x);
        v += poles[k].weight * inv;
        slope += poles[k].weight * inv * inv;
      }
      return v;
    };
    double slope = 0.0;
    double x = std::clamp(r.eta, lo, hi);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    double L = lo, H = hi;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (int it = 0; it < 200; ++it) {
      const double v = g(x, slope);
      if (v == 0.0) return x;
      if (v < 0.0) L = x;
      else H = x;
      double next = x - v / slope;
      if (!(next > L && next < H)) next = 0.5 * (L + H);
      if (std::abs(next - x) <= 2.0 * eps * std::max(std::abs(x), std::abs(H - L)) || H - L <= 4.0 * eps * std::max(std::abs(L), std::abs(H)))
        return next;
      x = next;
    }
    return x;
  }

  double step(const Root& r, std::size_t j, double lo, double hi) const {
    if (d.size() == 1) return rho * w[0];
    const std::size_t a = j + 1 < d.size() ? j : j - 1;
    return model_root(r, a, lo, hi);
  }
};

struct DescendingSolution {
  CanonicalSecular problem;
  std::vector<CanonicalSecular::Root> roots;  // canonical ascending order
  bool negated = false;
};

// lambdas strictly descending, weights positive, rho nonzero.
inline CanonicalSecular make_canonical(const std::vector<double>& lambdas,
                                       const std::vector<double>& weights, double rho,
                                       bool& negated) {
  const std::size_t m = lambdas.size();
  CanonicalSecular c;
  negated = rho < 0.0;
  c.d.resize(m);
  c.w.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    // rho > 0: reverse to ascending. rho < 0: negate, already ascending.
    const std::size_t src = negated ? k : m - 1 - k;
    c.d[k] = negated ? -lambdas[src] : lambdas[src];
    c.w[k] = weights[src];
  }
  const double r = std::abs(rho);
  c.raw_d = c.d;
  c.raw_outer = c.d[m - 1] + r * std::accumulate(c.w.begin(), c.w.end(), 0.0);
  double scale = r * std::accumulate(c.w.begin(), c.w.end(), 0.0);
  for (double v : c.d) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) scale = 1.0;
  for (double& v : c.d) v /= scale;
  c.rho = r / scale;
  c.scale = scale;
  return c;
}

// Canonical index of the root that belongs to descending position i.
inline std::size_t canonical_index(std::size_t i, std::size_t m, bool negated) {
  return negated ? i : m - 1 - i;
}

inline std::size_t source_index(std::size_t k, std::size_t m, bool negated) {
  return negated ? k : m - 1 - k;
}

}  // namespace detail

/**
 * One eigenvalue of a deflated problem (strictly descending lambdas, nonzero
 * z entries) by rational function approximation. i is 0-based in descending
 * order of the updated eigenvalues.
 */
template <class S>
SecularRoot solve_secular_root(const RankOneProblem<S>& problem, std::size_t i,
                               const SecularOptions& opt = {}) {
  const auto m = std::size_t(problem.lambdas.size());
  require(m > 0 && std::size_t(problem.z.size()) == m, "secular: dimension mismatch");
  require(problem.rho != 0.0, "secular: rho must be nonzero");
  require(i < m, "secular: root index out of range");
  std::vector<double> lambdas(m), weights(m);
  for (std::size_t k = 0; k < m; ++k) {
    lambdas[k] = problem.lambdas(Eigen::Index(k));
    weights[k] = abs2(problem.z(Eigen::Index(k)));
    require(weights[k] > 0.0, "secular: problem is not deflated (zero z entry)");
    require(k == 0 || lambdas[k] < lambdas[k - 1],
            "secular: problem is not deflated (lambdas not strictly descending)");
  }
  bool negated = false;
  const detail::CanonicalSecular c = detail::make_canonical(lambdas, weights, problem.rho, negated);
  const std::size_t j = detail::canonical_index(i, m, negated);
  detail::CanonicalSecular::Root root;
  try {
    root = c.solve(j, opt);
  } catch (const ConvergenceError& e) {
    // report the last iterate in the caller's coordinates
    throw ConvergenceError(e.what(), negated ? -e.last_iterate() : e.last_iterate());
  }
  const double value = c.unscaled_value(root, j);
  return {negated ? -value : value, root.iterations};
}

/**
 * Eigendecomposition of diag(lambdas) + rho z z^H.
 *
 * Entries with negligible z, and diagonal entries that coincide to within
 * the deflation tolerance (after a Givens rotation that concentrates their
 * z weight on one index), pass through unchanged. The remaining roots come
 * from the secular solver; eigenvectors use z entries recomputed from the
 * computed roots so that W stays orthonormal even for clustered roots.
 */
template <class S>
RankOneEvd<S> rank_one_diag_evd(const RealVector& lambdas, const Vec<S>& z, double rho,
                                const SecularOptions& opt = {}) {
  const Eigen::Index m = lambdas.size();
  require(z.size() == m, "rank_one_diag_evd: z length must match lambdas");
  require(rho != 0.0, "rank_one_diag_evd: rho must be nonzero");
  require(lambdas.allFinite() && z.allFinite(), "rank_one_diag_evd: non-finite input");

  RankOneEvd<S> out;
  out.eigvals.resize(m);
  out.W = Mat<S>::Zero(m, m);
  if (m == 0) return out;

  // Work in descending order of the input diagonal.
  std::vector<std::size_t> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lambdas(Eigen::Index(a)) > lambdas(Eigen::Index(b));
  });
  std::vector<double> lam(order.size());
  std::vector<S> zz(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    lam[k] = lambdas(Eigen::Index(order[k]));
    zz[k] = z(Eigen::Index(order[k]));
  }

  const double znorm = z.norm();
  double scale = std::abs(rho) * znorm * znorm;
  for (double v : lam) scale = std::max(scale, std::abs(v));
  const double tie = opt.tie_tol * std::max(1.0, lambdas.cwiseAbs().maxCoeff());

  struct Rotation {
    std::size_t p, k;
    S c, s;
  };
  std::vector<Rotation> rotations;
  std::vector<std::size_t> active;
  std::vector<bool> deflated(order.size(), false);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double zk = std::abs(zz[k]);
    if (zk <= opt.deflation_tol * znorm || std::abs(rho) * zk * znorm <= opt.deflation_tol * scale) {
      deflated[k] = true;
      continue;
    }
    if (!active.empty()) {
      const std::size_t p = active.back();
      if (lam[p] - lam[k] <= opt.deflation_tol * scale) {
        const double r = std::hypot(std::abs(zz[p]), zk);
        const S c = zz[p] / r, s = zz[k] / r;
        const double cc = abs2(c), ss = abs2(s);
        const double lp = cc * lam[p] + ss * lam[k];
        const double lk = ss * lam[p] + cc * lam[k];
        lam[p] = lp;
        lam[k] = lk;
        zz[p] = S(r);
        zz[k] = S(0);
        rotations.push_back({p, k, c, s});
        deflated[k] = true;
        continue;
      }
    }
    active.push_back(k);
  }

  // Columns in the working (sorted) basis: roots first, then deflated entries.
  Mat<S> Wsorted = Mat<S>::Zero(m, m);
  RealVector values(m);
  Eigen::Index col = 0;
  const std::size_t n_active = active.size();
  if (n_active > 0) {
    std::vector<double> al(n_active), aw(n_active);
    for (std::size_t a = 0; a < n_active; ++a) {
      al[a] = lam[active[a]];
      aw[a] = abs2(zz[active[a]]);
    }
    bool negated = false;
    const detail::CanonicalSecular c = detail::make_canonical(al, aw, rho, negated);
    std::vector<detail::CanonicalSecular::Root> roots(n_active);
    for (std::size_t j = 0; j < n_active; ++j) {
      roots[j] = c.solve(j, opt);
      out.max_iterations = std::max(out.max_iterations, roots[j].iterations);
    }
    // Recompute |z| from the roots (canonical order), keep the phase of z.
    std::vector<double> zhat(n_active);
    for (std::size_t k = 0; k < n_active; ++k) {
      double prod = -c.difference(k, roots[n_active - 1]);
      for (std::size_t j = 0; j + 1 < n_active; ++j) {
        const double num = -c.difference(k, roots[j]);
        if (j < k) prod *= num / (c.d[j] - c.d[k]);
        else prod *= num / (c.d[j + 1] - c.d[k]);
      }
      zhat[k] = std::sqrt(std::max(prod / c.rho, 0.0));
    }
    for (std::size_t i = 0; i < n_active; ++i) {
      const std::size_t j = detail::canonical_index(i, n_active, negated);
      Vec<S> v(static_cast<Eigen::Index>(n_active));
      for (std::size_t k = 0; k < n_active; ++k) {
        const std::size_t a = detail::source_index(k, n_active, negated);
        const S zk = zz[active[a]];
        const double mag = std::abs(zk);
        const S phase = mag > 0.0 ? S(zk / mag) : S(1);
        v(Eigen::Index(a)) = phase * (zhat[k] / c.difference(k, roots[j]));
      }
      v /= v.norm();
      // Rotate the phase so the entry at the root's lower canonical pole is
      // real positive. As that pole's z entry shrinks the vector tends to +e_k,
      // the same column deflation would give, so nodes whose z differ by noise
      // around zero still agree on the column.
      const S lead = v(Eigen::Index(detail::source_index(j, n_active, negated)));
      if (std::abs(lead) > 0.0) v *= conj(lead) / std::abs(lead);
      for (std::size_t a = 0; a < n_active; ++a) Wsorted(Eigen::Index(active[a]), col) = v(Eigen::Index(a));
      const double value = c.unscaled_value(roots[j], j);
      values(col) = negated ? -value : value;
      ++col;
    }
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (!deflated[k]) continue;
    Wsorted(Eigen::Index(k), col) = S(1);
    values(col) = lam[k];
    ++col;
  }
  for (auto it = rotations.rbegin(); it != rotations.rend(); ++it) {
    const auto p = Eigen::Index(it->p), k = Eigen::Index(it->k);
    const Eigen::Matrix<S, 1, Eigen::Dynamic> rp = Wsorted.row(p), rk = Wsorted.row(k);
    Wsorted.row(p) = it->c * rp - conj(it->s) * rk;
    Wsorted.row(k) = it->s * rp + conj(it->c) * rk;
  }
  for (std::size_t k = 0; k < order.size(); ++k)
    out.W.row(Eigen::Index(order[k])) = Wsorted.row(Eigen::Index(k));
  out.eigvals = values;
  out.perm = unify_sort_order(out.eigvals, out.W, tie);
  return out;
}

}  // namespace dsvd
