#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "dsvd/power.hpp"
#include "dsvd/scene.hpp"
#include "dsvd/svd1.hpp"

namespace dsvd {

/// Squared pairwise distances of the columns of X (h x N) via the Gram identity.
inline RealMatrix edm_from_coords(const RealMatrix& x) {
  require(x.allFinite(), "edm_from_coords: non-finite coordinates");
  const RealMatrix gram = x.transpose() * x;
  const RealVector d = gram.diagonal();
  const auto n = x.cols();
  RealMatrix r = d.replicate(1, n) + d.transpose().replicate(n, 1) - 2.0 * gram;
  // The identity is exact in theory; clean up the roundoff it leaves behind.
  r = 0.5 * (r + r.transpose()).eval();
  r = r.cwiseMax(0.0);
  r.diagonal().setZero();
  return r;
}

struct EdmProblem {
  RealMatrix coords;  // h x N
  RealMatrix edm;
  BoolMatrix mask;  // observed entries, diagonal included
  std::vector<std::size_t> anchors;

  Eigen::Index n_nodes() const { return coords.cols(); }
  Eigen::Index dim() const { return coords.rows(); }
  RealMatrix observed() const { return mask.select(edm, RealMatrix::Zero(edm.rows(), edm.cols())); }
};

inline EdmProblem make_edm_problem(const RealMatrix& coords, const Graph& mask_graph,
                                   std::vector<std::size_t> anchors) {
  const auto n = coords.cols();
  require(Eigen::Index(mask_graph.n_nodes()) == n, "edm problem: mask and coordinates disagree on N");
  require(anchors.size() >= std::size_t(coords.rows()) + 1, "edm problem: need at least h+1 anchors");
  for (std::size_t a : anchors) require(a < std::size_t(n), "edm problem: anchor index out of range");
  EdmProblem p;
  p.coords = coords;
  p.edm = edm_from_coords(coords);
  p.mask = BoolMatrix::Identity(n, n);
  for (const Edge& e : mask_graph.edges()) {
    p.mask(Eigen::Index(e.a), Eigen::Index(e.b)) = true;
    p.mask(Eigen::Index(e.b), Eigen::Index(e.a)) = true;
  }
  p.anchors = std::move(anchors);
  return p;
}

/// The first `count` entries of a seeded shuffle of 0..n-1, sorted.
inline std::vector<std::size_t> pick_anchors(std::size_t n, std::size_t count, std::uint64_t seed) {
  require(count <= n, "pick_anchors: more anchors than nodes");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct SvtConfig {
  double tau = 0.0;
  double mu = 1.5;
  int max_iter = 200;
  // relative asymmetry of the shrunk iterate tolerated before giving up
  double symmetry_tol = 0.25;
};

struct Svd1Backend {
  enum class Kind { dra, dtra, dpm };
  Kind kind = Kind::dra;
  Eigen::Index d = 0;          // dtra: tracked dimension
  int power_iterations = 0;    // dpm
  Eigen::Index n_vectors = 0;  // dpm
  std::uint64_t seed = 0;      // dpm start vectors

  static Svd1Backend dra() { return {}; }
  static Svd1Backend dtra(Eigen::Index d) { return {Kind::dtra, d, 0, 0, 0}; }
  static Svd1Backend dpm(int p, Eigen::Index vectors, std::uint64_t seed) {
    return {Kind::dpm, 0, p, vectors, seed};
  }
};

inline NodeSvd<double> run_svd1_backend(const RealMatrix& rows, const Svd1Backend& b,
                                        ConsensusEngine& engine, std::uint64_t round) {
  switch (b.kind) {
    case Svd1Backend::Kind::dtra: return dtra_svd1(rows, b.d, engine);
    case Svd1Backend::Kind::dpm: return dpm_svd1(rows, b.power_iterations, b.n_vectors, engine, b.seed + round);
    case Svd1Backend::Kind::dra: break;
  }
  return dra_svd1(rows, engine);
}

struct SvtResult {
  RealMatrix estimate;   // row i: node i's shrunk row of the final step
  NodeSvd<double> svd;   // decomposition behind `estimate`
  double max_asymmetry = 0.0;
};

/**
 * Decentralized SVT. Node i holds row i of the iterate and of the observed
 * EDM; each step shrinks the iterate through the chosen d-SVD and corrects
 * it on the observed entries:
 *   R~(t) = sum_n [sigma_n - tau]^+ u_n v_n^T,   R(t) = R(t-1) + mu (R^ - A .* R~(t)).
 * Node i multiplies its own V copy into its row, so no row of V is stored
 * beyond the current one in a real deployment.
 */
inline SvtResult d_svt(const RealMatrix& masked_rows, const BoolMatrix& mask_rows, const SvtConfig& cfg,
                       ConsensusEngine& engine, const Svd1Backend& backend = {}) {
  const Eigen::Index n = masked_rows.rows();
  require(masked_rows.cols() == n && mask_rows.rows() == n && mask_rows.cols() == n,
          "d_svt: expected square N x N rows");
  require(mask_rows == mask_rows.transpose(), "d_svt: mask must be symmetric");
  require(cfg.tau > 0.0, "d_svt: tau must be positive");
  require(cfg.mu > 0.0, "d_svt: mu must be positive");
  require(cfg.max_iter >= 1, "d_svt: need at least one iteration");

  const RealMatrix maskd = mask_rows.cast<double>();
  RealMatrix iterate = RealMatrix::Zero(n, n);
  SvtResult out;
  for (int t = 0; t < cfg.max_iter; ++t) {
    NodeSvd<double> svd = run_svd1_backend(iterate, backend, engine, std::uint64_t(t));
    const Eigen::Index m = svd.u.cols();
    RealMatrix shrunk(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const RealVector s = (svd.sigma[std::size_t(i)].array() - cfg.tau).cwiseMax(0.0);
      const RealVector w = svd.u.row(i).transpose().cwiseProduct(s);
      shrunk.row(i) = (svd.v[std::size_t(i)].leftCols(m) * w).transpose();
    }
    if (!shrunk.allFinite()) throw NumericalError("d_svt: non-finite iterate at step " + std::to_string(t + 1));
    const double scale = shrunk.norm();
    const double asym = scale > 0.0 ? (shrunk - shrunk.transpose()).norm() / scale : 0.0;
    out.max_asymmetry = std::max(out.max_asymmetry, asym);
    if (asym > cfg.symmetry_tol)
      throw NumericalError("d_svt: shrunk iterate lost symmetry (relative asymmetry " + std::to_string(asym) +
                           ") at step " + std::to_string(t + 1));
    iterate += cfg.mu * (masked_rows - maskd.cwiseProduct(shrunk));
    out.estimate = std::move(shrunk);
    out.svd = std::move(svd);
  }
  return out;
}

/**
 * For a symmetric matrix u_n = delta_n v_n. Each column is decided at the
 * entry where v is largest in magnitude; entries where both u and v fall
 * below 1e-12 are skipped in favour of the next largest. A column with no
 * usable entry gets +1.
 */
inline RealVector symmetric_sign_factors(const RealMatrix& u, const RealMatrix& v) {
  require(u.rows() == v.rows() && u.cols() == v.cols(), "symmetric_sign_factors: shape mismatch");
  RealVector delta = RealVector::Ones(u.cols());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(u.rows()));
  for (Eigen::Index k = 0; k < u.cols(); ++k) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return std::abs(v(a, k)) > std::abs(v(b, k)); });
    for (Eigen::Index r : order) {
      if (std::abs(u(r, k)) < 1e-12 && std::abs(v(r, k)) < 1e-12) continue;
      delta(k) = u(r, k) * v(r, k) < 0.0 ? -1.0 : 1.0;
      break;
    }
  }
  return delta;
}

/**
 * Classical MDS from the shrunk singular data held at one node:
 *   G = sum_n -1/2 delta_n [sigma_n - tau]^+ u~_n u~_n^T,  u~_n = u_n - mean(u_n) 1,
 * accumulated one rank-one term at a time with the secular solver. Returns
 * psi^{1/2} F^T for the h leading eigenpairs. Each eigenvector is signed so
 * its largest-magnitude entry is positive, which keeps the frames of
 * different nodes aligned.
 */
inline RealMatrix local_mds(const RealMatrix& u_full, const RealVector& sigma, const RealVector& delta,
                            double tau, Eigen::Index h, const SecularOptions& opt = {}) {
  const Eigen::Index n = u_full.rows(), m = u_full.cols();
  require(sigma.size() == m && delta.size() == m, "local_mds: sigma/delta length mismatch");
  require(h >= 1 && h <= n, "local_mds: invalid dimension h");
  RealMatrix w = RealMatrix::Identity(n, n);
  RealVector lambda = RealVector::Zero(n);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double s = sigma(k) - tau;
    if (s <= 0.0) continue;
    const RealVector centered = u_full.col(k).array() - u_full.col(k).mean();
    if (centered.squaredNorm() == 0.0) continue;
    const RealVector z = w.transpose() * centered;
    const auto evd = rank_one_diag_evd<double>(lambda, z, -0.5 * delta(k) * s, opt);
    w = (w * evd.W).eval();
    lambda = evd.eigvals;
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return lambda(a) > lambda(b); });
  const double top = lambda.cwiseAbs().maxCoeff();
  RealMatrix x(h, n);
  for (Eigen::Index p = 0; p < h; ++p) {
    const Eigen::Index k = order[std::size_t(p)];
    if (!(lambda(k) > 1e-12 * top))
      throw NumericalError("local_mds: Gram matrix has fewer than " + std::to_string(h) +
                           " positive eigenvalues");
    RealVector f = w.col(k);
    Eigen::Index arg = 0;
    f.cwiseAbs().maxCoeff(&arg);
    if (f(arg) < 0.0) f = -f;
    x.row(p) = std::sqrt(lambda(k)) * f.transpose();
  }
  return x;
}

struct Alignment {
  std::vector<RealMatrix> q;  // per node h x h orthogonal transform
  RealMatrix est_centroid;    // column i: node i's anchor centroid of the estimate
  RealMatrix true_centroid;
  RealMatrix aligned;  // column i: node i's final coordinates
};

/**
 * Anchor-based orthogonal Procrustes. Column i of `est` is node i's own
 * estimate; `truth` is read only at the anchor columns. Costs 2h instances
 * for the two centroids and h^2 for the cross matrix C.
 */
inline Alignment procrustes_align(const RealMatrix& est, const RealMatrix& truth,
                                  const std::vector<std::size_t>& anchors, ConsensusEngine& engine) {
  const Eigen::Index h = est.rows(), n = est.cols();
  require(truth.rows() == h && truth.cols() == n, "procrustes_align: shape mismatch");
  require(Eigen::Index(engine.n_nodes()) == n, "procrustes_align: node count mismatch");
  require(anchors.size() >= std::size_t(h) + 1, "procrustes_align: need at least h+1 anchors");
  const double na = double(anchors.size());

  RealMatrix contrib = RealMatrix::Zero(n, 2 * h);
  for (std::size_t a : anchors) {
    const auto i = Eigen::Index(a);
    contrib.row(i).head(h) = est.col(i).transpose() / na;
    contrib.row(i).tail(h) = truth.col(i).transpose() / na;
  }
  const RealMatrix centroids = engine.estimate(contrib);

  RealMatrix cross = RealMatrix::Zero(n, h * h);
  for (std::size_t a : anchors) {
    const auto i = Eigen::Index(a);
    const RealVector de = est.col(i) - centroids.row(i).head(h).transpose();
    const RealVector dt = truth.col(i) - centroids.row(i).tail(h).transpose();
    for (Eigen::Index q = 0; q < h; ++q)
      for (Eigen::Index p = 0; p < h; ++p) cross(i, q * h + p) = de(p) * dt(q);
  }
  const RealMatrix c_est = engine.estimate(cross);

  Alignment out;
  out.est_centroid = centroids.leftCols(h).transpose();
  out.true_centroid = centroids.rightCols(h).transpose();
  out.aligned.resize(h, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const RealMatrix c = c_est.row(i).reshaped(h, h);
    Eigen::JacobiSVD<RealMatrix> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const RealVector s = svd.singularValues();
    if (!(s(h - 1) > 1e-10 * s(0)))
      throw NumericalError("procrustes_align: degenerate anchor configuration (rank(C) < h)");
    RealMatrix q = svd.matrixV() * svd.matrixU().transpose();
    out.aligned.col(i) = q * (est.col(i) - out.est_centroid.col(i)) + out.true_centroid.col(i);
    out.q.push_back(std::move(q));
  }
  return out;
}

struct LocalizationErrors {
  double eps_r = 0.0;
  double eps_x = 0.0;
};

inline LocalizationErrors localization_errors(const RealMatrix& r_est, const RealMatrix& r,
                                              const RealMatrix& x_est, const RealMatrix& x) {
  require(r_est.rows() == r.rows() && r_est.cols() == r.cols(), "localization_errors: EDM shape mismatch");
  require(x_est.rows() == x.rows() && x_est.cols() == x.cols(), "localization_errors: coordinate shape mismatch");
  return {(r_est - r).norm() / r.norm(), (x_est - x).norm() / x.norm()};
}

struct LocalizationResult {
  LocalizationErrors errors;
  RealMatrix r_est;
  RealMatrix coords_est;
  double max_asymmetry = 0.0;
};

/**
 * Whole pipeline on the mask graph: d-SVT, then at every node the sign
 * factors from its own U entry and V copy, local MDS, and anchor Procrustes.
 */
inline LocalizationResult localize(const EdmProblem& p, const SvtConfig& cfg, ConsensusEngine& engine,
                                   const Svd1Backend& backend = {}, const SecularOptions& opt = {}) {
  const Eigen::Index n = p.n_nodes(), h = p.dim();
  require(Eigen::Index(engine.n_nodes()) == n, "localize: engine and problem disagree on N");
  SvtResult svt = d_svt(p.observed(), p.mask, cfg, engine, backend);
  const NodeSvd<double>& svd = svt.svd;
  const Eigen::Index m = svd.u.cols();

  RealMatrix local(h, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const RealMatrix& v = svd.v[std::size_t(i)];
    const RealVector delta = symmetric_sign_factors(svd.u.row(i), v.row(i).head(m));
    const RealMatrix u_full = v.leftCols(m) * delta.asDiagonal();
    local.col(i) = local_mds(u_full, svd.sigma[std::size_t(i)], delta, cfg.tau, h, opt).col(i);
  }
  const Alignment al = procrustes_align(local, p.coords, p.anchors, engine);

  LocalizationResult out;
  out.r_est = std::move(svt.estimate);
  out.coords_est = al.aligned;
  out.errors = localization_errors(out.r_est, p.edm, out.coords_est, p.coords);
  out.max_asymmetry = svt.max_asymmetry;
  return out;
}

}  // namespace dsvd
