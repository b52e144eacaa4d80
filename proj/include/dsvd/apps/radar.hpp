#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "dsvd/power.hpp"
#include "dsvd/svd2.hpp"

namespace dsvd {

/**
 * Passive radar with L illuminators observed by N receivers over T
 * snapshots:
 *   r(t) = H_r kappa(t) + n_r(t),   s(t) = xi H_s kappa(t) + H_r kappa(t) + n_s(t).
 * Channel entries are CN(0, g) with g chosen so that E|H kappa|^2 / E|n|^2
 * equals the configured SNR; both channels are redrawn per realization.
 */
struct RadarScenario {
  Eigen::Index n_nodes = 10;
  Eigen::Index illuminators = 1;
  Eigen::Index snapshots = 5;
  double snr_db = -10.0;
  double noise_variance = 1.0;
  bool target_present = false;  // xi

  double channel_variance() const {
    return std::pow(10.0, snr_db / 10.0) * noise_variance / double(illuminators);
  }
};

struct RadarStreams {
  Mat<cplx> reference;     // N x T, column t is r(t)
  Mat<cplx> surveillance;  // N x T, column t is s(t)
  Mat<cplx> h_r, h_s;
  Mat<cplx> kappa;  // L x T
};

namespace detail {

inline Mat<cplx> complex_gaussian(Eigen::Index rows, Eigen::Index cols, double variance, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, std::sqrt(variance / 2.0));
  Mat<cplx> m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = g(rng);
      m(i, j) = cplx(re, g(rng));
    }
  return m;
}

}  // namespace detail

inline RadarStreams radar_simulate(const RadarScenario& sc, std::uint64_t seed) {
  require(sc.n_nodes >= 1 && sc.illuminators >= 1 && sc.snapshots >= 1,
          "radar_simulate: N, L and T must be positive");
  require(sc.noise_variance > 0.0, "radar_simulate: noise variance must be positive");
  std::mt19937_64 rng(seed);
  const Eigen::Index n = sc.n_nodes, l = sc.illuminators, t = sc.snapshots;
  RadarStreams out;
  out.h_r = detail::complex_gaussian(n, l, sc.channel_variance(), rng);
  out.h_s = detail::complex_gaussian(n, l, sc.channel_variance(), rng);
  out.kappa = detail::complex_gaussian(l, t, 1.0, rng);
  const Mat<cplx> direct = out.h_r * out.kappa;
  out.reference = direct + detail::complex_gaussian(n, t, sc.noise_variance, rng);
  out.surveillance = direct + detail::complex_gaussian(n, t, sc.noise_variance, rng);
  if (sc.target_present) out.surveillance += out.h_s * out.kappa;
  return out;
}

struct RadarBackend {
  enum class Kind { centralized, dra, dtra, dpm };
  Kind kind = Kind::centralized;
  Eigen::Index d = 1;
  int power_iterations = 10;
  double alpha = 0.1;
  std::uint64_t seed = 0;
};

inline std::string_view to_string(RadarBackend::Kind k) {
  switch (k) {
    case RadarBackend::Kind::dra: return "dra";
    case RadarBackend::Kind::dtra: return "dtra";
    case RadarBackend::Kind::dpm: return "dpm";
    case RadarBackend::Kind::centralized: break;
  }
  return "centralized";
}

struct DetectorOutput {
  double statistic = 0.0;
  double threshold = 0.0;
  bool decision = false;
};

/**
 * Cross-correlation detector on R_sr = (1/T) sum_t s(t) r(t)^H: the statistic
 * is sum_n sigma_n^2 of R_sr. The decentralized backends stream the pairs
 * (s(t), r(t)) unscaled and divide the singular values by T afterwards. The
 * power-method backend reports sigma_1^2 only. The value read out is node 0's;
 * every node holds its own copy.
 */
inline DetectorOutput cross_correlation_detect(const RadarStreams& st, ConsensusEngine& engine,
                                               const RadarBackend& b, double threshold = 0.0) {
  const Mat<cplx>& s = st.surveillance;
  const Mat<cplx>& r = st.reference;
  require(s.rows() == r.rows() && s.cols() == r.cols(), "detector: streams differ in shape");
  const Eigen::Index n = s.rows();
  const double t = double(s.cols());
  double stat = 0.0;
  switch (b.kind) {
    case RadarBackend::Kind::centralized:
      stat = (s * r.adjoint()).squaredNorm() / (t * t);
      break;
    case RadarBackend::Kind::dra:
    case RadarBackend::Kind::dtra: {
      const bool truncated = b.kind == RadarBackend::Kind::dtra;
      require(!truncated || (b.d >= 1 && b.d < n), "detector: need 1 <= d < N");
      auto states = init_svd2_states<cplx>(std::size_t(n), std::size_t(truncated ? b.d : n));
      for (Eigen::Index k = 0; k < s.cols(); ++k) {
        if (truncated)
          dtra_svd2_update<cplx>(states, s.col(k), r.col(k), engine);
        else
          dra_svd2_update<cplx>(states, s.col(k), r.col(k), engine);
      }
      stat = (states.front().sigma / t).squaredNorm();
      break;
    }
    case RadarBackend::Kind::dpm: {
      const auto top = dpm_svd2(s, r, b.power_iterations, b.alpha, engine, b.seed);
      stat = std::pow(top.sigma(0) / t, 2);
      break;
    }
  }
  return {stat, threshold, stat >= threshold};
}

}  // namespace dsvd
