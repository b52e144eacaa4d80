#pragma once

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <locale>
#include <map>
#include <mutex>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dsvd/apps/localization.hpp"
#include "dsvd/apps/radar.hpp"
#include "dsvd/apps/roc.hpp"
#include "dsvd/experiment/config.hpp"
#include "dsvd/oracle.hpp"
#include "dsvd/power.hpp"
#include "dsvd/svd1.hpp"
#include "dsvd/svd2.hpp"

namespace dsvd::experiment {

/// Dot decimal, 17 significant digits, independent of the global locale.
inline std::string format_number(double v) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::scientific << std::setprecision(16) << v;
  return s.str();
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    require(it != header.end(), "table: no column '" + name + "'");
    return std::size_t(it - header.begin());
  }
};

inline void write_csv(std::ostream& out, const Table& t) {
  for (std::size_t k = 0; k < t.header.size(); ++k) out << (k ? "," : "") << t.header[k];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << row[k];
    out << '\n';
  }
}

struct RunOutput {
  Table table;
  std::vector<std::string> summary;
  std::map<std::string, std::vector<RocPoint>> roc;  // radar_roc only, by backend
};

/**
 * Runs fn(trial) for every trial on up to `threads` workers and returns the
 * results in trial order. The first failing trial (by index) rethrows.
 */
template <class R, class F>
std::vector<R> run_trials(int trials, int threads, F fn) {
  std::vector<R> results(static_cast<std::size_t>(std::max(trials, 0)));
  std::vector<std::exception_ptr> errors(results.size());
  if (results.empty()) return results;
  unsigned workers = threads > 0 ? unsigned(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, unsigned(results.size()));
  std::mutex m;
  std::size_t next = 0;
  auto worker = [&]() {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard<std::mutex> lock(m);
        if (next >= results.size()) return;
        k = next++;
      }
      try {
        results[k] = fn(int(k));
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

using Rows = std::vector<std::vector<std::string>>;

namespace detail {

inline Graph build_network(const ExperimentConfig& c) {
  const std::size_t n = c.network.nodes;
  if (c.network.generator == "complete") return Graph::complete(n);
  if (c.network.generator == "path") return Graph::path(n);
  return generate_small_world(n, c.network.neighbors, c.network.rewire, c.seed);
}

inline ConsensusEngine make_engine(const Graph& g, const ExperimentConfig& c, int default_iterations = 0) {
  const int iters = c.consensus.iterations > 0 ? c.consensus.iterations : default_iterations;
  return ConsensusEngine(c.consensus.engine, g, c.consensus.engine == EngineKind::exact ? 0 : iters);
}

// Per-entry relative error; entries that are zero in the oracle are measured
// against the largest singular value instead.
inline double sigma_error(const RealVector& est, const RealVector& oracle) {
  double worst = 0.0;
  const double top = oracle.size() ? oracle(0) : 0.0;
  for (Eigen::Index k = 0; k < est.size(); ++k) {
    const double ref = oracle(k) > 1e-12 * top ? oracle(k) : top;
    worst = std::max(worst, std::abs(est(k) - oracle(k)) / ref);
  }
  return worst;
}

inline std::string str(std::uint64_t v) { return std::to_string(v); }

inline Mat<cplx> gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  return dsvd::detail::complex_gaussian(rows, cols, 1.0, rng);
}

inline Rows svd1_trial(const ExperimentConfig& c, const ConsensusEngine& base, int trial) {
  const std::uint64_t seed = c.seed + std::uint64_t(trial);
  std::mt19937_64 rng(seed);
  const auto n = Eigen::Index(c.network.nodes), t = Eigen::Index(c.samples);
  const Mat<cplx> r = gaussian(n, t, rng);
  ConsensusEngine e = base;
  NodeSvd<cplx> s;
  Eigen::Index k = n, d_echo = 0;
  const std::string& alg = c.backend.algorithm;
  if (alg == "dtra") {
    k = d_echo = Eigen::Index(c.backend.d);
    s = dtra_svd1(r, k, e);
  } else if (alg == "dpm") {
    k = c.backend.n_vectors ? Eigen::Index(c.backend.n_vectors) : std::min(n, t);
    s = dpm_svd1(r, c.backend.power_iterations, k, e, seed);
  } else {
    s = dra_svd1(r, e);
  }
  const auto oracle = centralized_svd_oracle(r);
  k = std::min<Eigen::Index>(k, oracle.sigma.size());
  double err = 0.0;
  for (const RealVector& sig : s.sigma) err = std::max(err, sigma_error(sig.head(k), oracle.sigma.head(k)));
  const Mat<cplx> best = oracle.U.leftCols(k) * oracle.sigma.head(k).asDiagonal() * oracle.V.leftCols(k).adjoint();
  const Mat<cplx> recon = s.u.leftCols(k) * s.sigma[0].head(k).asDiagonal() * s.v[0].leftCols(k).adjoint();
  return {{std::to_string(trial), str(seed), alg, std::to_string(n), std::to_string(t), std::to_string(d_echo),
           format_number(err), format_number((recon - best).norm() / best.norm()), str(e.ledger().instances())}};
}

inline Rows svd2_trial(const ExperimentConfig& c, const ConsensusEngine& base, int trial) {
  const std::uint64_t seed = c.seed + std::uint64_t(trial);
  std::mt19937_64 rng(seed);
  const auto n = Eigen::Index(c.network.nodes), t = Eigen::Index(c.samples);
  const Mat<cplx> x = gaussian(n, t, rng), y = gaussian(n, t, rng);
  const RealVector oracle = centralized_svd_oracle(Mat<cplx>(x * y.adjoint())).sigma;
  ConsensusEngine e = base;
  const std::string& alg = c.backend.algorithm;
  double err = 0.0;
  Eigen::Index d_echo = 0;
  if (alg == "dpm") {
    const auto top = dpm_svd2(x, y, c.backend.power_iterations, c.backend.alpha, e, seed);
    for (Eigen::Index i = 0; i < n; ++i) err = std::max(err, std::abs(top.sigma(i) - oracle(0)) / oracle(0));
  } else {
    const bool truncated = alg == "dtra";
    d_echo = truncated ? Eigen::Index(c.backend.d) : 0;
    auto states = init_svd2_states<cplx>(std::size_t(n), std::size_t(truncated ? d_echo : n));
    for (Eigen::Index k = 0; k < t; ++k) {
      if (truncated)
        dtra_svd2_update<cplx>(states, x.col(k), y.col(k), e);
      else
        dra_svd2_update<cplx>(states, x.col(k), y.col(k), e);
    }
    for (const auto& st : states) err = std::max(err, sigma_error(st.sigma, oracle.head(st.sigma.size())));
  }
  return {{std::to_string(trial), str(seed), alg, std::to_string(n), std::to_string(t), std::to_string(d_echo),
           format_number(err), str(e.ledger().instances())}};
}

/// N x T real Gaussian matrix whose singular values past `rank` are rescaled
/// so that sigma_{rank+1} = delta * sigma_rank.
inline RealMatrix gapped_matrix(Eigen::Index n, Eigen::Index t, Eigen::Index rank, double delta,
                                std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  RealMatrix r(n, t);
  for (Eigen::Index j = 0; j < t; ++j)
    for (Eigen::Index i = 0; i < n; ++i) r(i, j) = g(rng);
  Eigen::BDCSVD<RealMatrix> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
  RealVector s = svd.singularValues();
  const double scale = delta * s(rank - 1) / s(rank);
  s.tail(s.size() - rank) *= scale;
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

inline Rows sweep_trial(const ExperimentConfig& c, const ConsensusEngine& base, int trial) {
  const std::uint64_t seed = c.seed + std::uint64_t(trial);
  std::mt19937_64 rng(seed);
  const auto n = Eigen::Index(c.network.nodes), t = Eigen::Index(c.samples), p = Eigen::Index(c.sweep.rank);
  const RealMatrix r = gapped_matrix(n, t, p, c.sweep.delta, rng);
  const RealVector principal = centralized_svd_oracle(r).sigma.head(p);
  Rows rows;
  for (std::size_t d : c.sweep.d) {
    ConsensusEngine e = base;
    const auto s = dtra_svd1(r, Eigen::Index(d), e, false);
    double num = 0.0;
    for (const RealVector& sig : s.sigma) num += (sig.head(p) - principal).squaredNorm();
    const double eps = std::sqrt(num / double(n)) / principal.norm();
    rows.push_back({std::to_string(trial), str(seed), format_number(c.sweep.delta), std::to_string(d),
                    format_number(eps), str(e.ledger().instances())});
  }
  return rows;
}

inline Rows localize_trial(const ExperimentConfig& c, int trial) {
  const std::uint64_t seed = c.seed + std::uint64_t(trial);
  std::mt19937_64 rng(seed);
  const std::uint64_t scene_seed = rng(), mask_seed = rng(), anchor_seed = rng();
  const std::size_t n = c.network.nodes;
  Graph mask;
  RealMatrix coords;
  if (c.localize.mask == "obstacles") {
    const auto scene = generate_scene(n, c.localize.obstacles, c.localize.area, scene_seed);
    coords = scene.coords;
    mask = scene.los_graph();
  } else {
    coords = generate_scene(n, 0, c.localize.area, scene_seed).coords;
    mask = random_mask_graph(n, c.localize.missing, mask_seed);
  }
  const EdmProblem problem = make_edm_problem(coords, mask, pick_anchors(n, c.localize.anchors, anchor_seed));
  ConsensusEngine e = make_engine(mask, c, int(n));
  SvtConfig svt;
  svt.tau = c.svt.tau > 0.0 ? c.svt.tau : 5.0 * double(n);
  svt.mu = c.svt.mu;
  svt.max_iter = c.svt.iterations;
  Svd1Backend b;
  std::size_t d_echo = 0;
  if (c.backend.algorithm == "dtra") {
    b = Svd1Backend::dtra(Eigen::Index(c.backend.d));
    d_echo = c.backend.d;
  } else if (c.backend.algorithm == "dpm") {
    b = Svd1Backend::dpm(c.backend.power_iterations,
                         Eigen::Index(c.backend.n_vectors ? c.backend.n_vectors : n), seed);
  }
  const auto res = localize(problem, svt, e, b);
  const double pairs = double(n) * double(n - 1) / 2.0;
  const double missing = 1.0 - double(mask.n_edges()) / pairs;
  return {{std::to_string(trial), str(seed), c.backend.algorithm, std::to_string(n), std::to_string(d_echo),
           format_number(missing), format_number(res.errors.eps_r), format_number(res.errors.eps_x),
           str(e.ledger().instances())}};
}

inline RadarBackend radar_backend(const ExperimentConfig& c, const std::string& name, std::uint64_t seed) {
  RadarBackend b;
  if (name == "dra") b.kind = RadarBackend::Kind::dra;
  else if (name == "dtra") b.kind = RadarBackend::Kind::dtra;
  else if (name == "dpm") b.kind = RadarBackend::Kind::dpm;
  b.d = Eigen::Index(c.backend.d);
  b.power_iterations = c.backend.power_iterations;
  b.alpha = c.backend.alpha;
  b.seed = seed;
  return b;
}

inline Rows radar_trial(const ExperimentConfig& c, const ConsensusEngine& base, int trial) {
  const std::uint64_t seed = c.seed + std::uint64_t(trial);
  std::mt19937_64 rng(seed);
  const std::uint64_t seeds[2] = {rng(), rng()};
  RadarScenario sc;
  sc.n_nodes = Eigen::Index(c.network.nodes);
  sc.illuminators = Eigen::Index(c.radar.illuminators);
  sc.snapshots = Eigen::Index(c.radar.snapshots);
  sc.snr_db = c.radar.snr_db;
  Rows rows;
  for (int xi = 0; xi < 2; ++xi) {
    sc.target_present = xi == 1;
    const RadarStreams st = radar_simulate(sc, seeds[xi]);
    for (const std::string& name : c.radar.backends) {
      ConsensusEngine e = base;
      const auto out = cross_correlation_detect(st, e, radar_backend(c, name, seeds[xi]));
      rows.push_back({std::to_string(trial), str(seed), name, std::to_string(xi), format_number(out.statistic),
                      str(e.ledger().instances())});
    }
  }
  return rows;
}

inline std::vector<double> column_values(const Table& t, const std::string& name) {
  std::vector<double> v;
  const std::size_t k = t.column(name);
  for (const auto& row : t.rows) v.push_back(std::stod(row[k]));
  return v;
}

inline std::string mean_max(const Table& t, const std::string& name) {
  const auto v = column_values(t, name);
  if (v.empty()) return name + ": no rows";
  double sum = 0.0, mx = v.front();
  for (double x : v) {
    sum += x;
    mx = std::max(mx, x);
  }
  return name + ": mean " + format_number(sum / double(v.size())) + ", max " + format_number(mx);
}

}  // namespace detail

inline RunOutput run_experiment(const ExperimentConfig& c) {
  RunOutput out;
  Table& t = out.table;
  std::vector<Rows> parts;
  const int trials = c.trials;
  const auto flatten = [&]() {
    for (auto& p : parts)
      for (auto& row : p) t.rows.push_back(std::move(row));
  };
  out.summary.push_back("experiment " + to_string(c.experiment) + ", " + std::to_string(trials) + " trials, seed " +
                        std::to_string(c.seed));

  switch (c.experiment) {
    case Experiment::svd1: {
      t.header = {"trial", "seed", "algorithm", "nodes", "samples", "d", "sigma_rel_error", "lowrank_rel_error",
                  "consensus_instances"};
      const ConsensusEngine base = detail::make_engine(detail::build_network(c), c);
      parts = run_trials<Rows>(trials, c.threads, [&](int k) { return detail::svd1_trial(c, base, k); });
      flatten();
      out.summary.push_back(detail::mean_max(t, "sigma_rel_error"));
      out.summary.push_back(detail::mean_max(t, "lowrank_rel_error"));
      break;
    }
    case Experiment::svd2: {
      t.header = {"trial", "seed", "algorithm", "nodes", "samples", "d", "sigma_rel_error", "consensus_instances"};
      const ConsensusEngine base = detail::make_engine(detail::build_network(c), c);
      parts = run_trials<Rows>(trials, c.threads, [&](int k) { return detail::svd2_trial(c, base, k); });
      flatten();
      out.summary.push_back(detail::mean_max(t, "sigma_rel_error"));
      break;
    }
    case Experiment::truncation_sweep: {
      t.header = {"trial", "seed", "delta", "d", "sigma_rel_error", "consensus_instances"};
      const ConsensusEngine base = detail::make_engine(detail::build_network(c), c);
      parts = run_trials<Rows>(trials, c.threads, [&](int k) { return detail::sweep_trial(c, base, k); });
      flatten();
      for (std::size_t d : c.sweep.d) {
        double sum = 0.0;
        int count = 0;
        for (const auto& row : t.rows)
          if (row[3] == std::to_string(d)) {
            sum += std::stod(row[4]);
            ++count;
          }
        if (count) out.summary.push_back("d=" + std::to_string(d) + " mean sigma_rel_error " + format_number(sum / count));
      }
      break;
    }
    case Experiment::localize: {
      t.header = {"trial", "seed", "algorithm", "nodes", "d", "missing_fraction", "eps_r", "eps_x",
                  "consensus_instances"};
      parts = run_trials<Rows>(trials, c.threads, [&](int k) { return detail::localize_trial(c, k); });
      flatten();
      out.summary.push_back(detail::mean_max(t, "eps_r"));
      out.summary.push_back(detail::mean_max(t, "eps_x"));
      break;
    }
    case Experiment::radar_roc: {
      t.header = {"trial", "seed", "algorithm", "xi", "statistic", "consensus_instances"};
      const ConsensusEngine base = detail::make_engine(detail::build_network(c), c);
      parts = run_trials<Rows>(trials, c.threads, [&](int k) { return detail::radar_trial(c, base, k); });
      flatten();
      for (const std::string& name : c.radar.backends) {
        std::vector<double> h0, h1;
        std::string cost;
        for (const auto& row : t.rows)
          if (row[2] == name) {
            (row[3] == "0" ? h0 : h1).push_back(std::stod(row[4]));
            cost = row[5];
          }
        if (h0.empty()) continue;
        out.summary.push_back(name + ": auc " + format_number(auc(h0, h1)) + ", consensus_instances " + cost);
        if (h0.size() >= 100) out.roc[name] = roc_curve(h0, h1);
      }
      break;
    }
  }
  return out;
}

}  // namespace dsvd::experiment
