#pragma once

#include <algorithm>
#include <iomanip>
#include <locale>
#include <ostream>
#include <vector>

#include "dsvd/core.hpp"

namespace dsvd {

struct RocPoint {
  double threshold = 0.0;
  double pfa = 0.0;
  double pd = 0.0;
};

namespace detail {

inline double fraction_at_or_above(const std::vector<double>& sorted, double eta) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), eta);
  return double(sorted.end() - it) / double(sorted.size());
}

}  // namespace detail

/**
 * Empirical ROC: decide H1 when the statistic is >= eta. With grid_size == 0
 * every pooled statistic is a threshold; otherwise grid_size thresholds are
 * spaced evenly over the pooled range. A threshold above every sample closes
 * the curve at (0, 0). Points come out with pfa non-decreasing.
 */
inline std::vector<RocPoint> roc_curve(std::vector<double> h0, std::vector<double> h1, std::size_t grid_size = 0) {
  require(h0.size() >= 100 && h1.size() >= 100, "roc_curve: need at least 100 statistics per hypothesis");
  std::sort(h0.begin(), h0.end());
  std::sort(h1.begin(), h1.end());
  std::vector<double> thresholds;
  const double lo = std::min(h0.front(), h1.front()), hi = std::max(h0.back(), h1.back());
  if (grid_size == 0) {
    thresholds = h0;
    thresholds.insert(thresholds.end(), h1.begin(), h1.end());
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  } else {
    for (std::size_t k = 0; k < grid_size; ++k)
      thresholds.push_back(grid_size == 1 ? lo : lo + (hi - lo) * double(k) / double(grid_size - 1));
  }
  std::vector<RocPoint> out;
  out.push_back({hi + std::max(1.0, std::abs(hi)), 0.0, 0.0});
  for (auto it = thresholds.rbegin(); it != thresholds.rend(); ++it)
    out.push_back({*it, detail::fraction_at_or_above(h0, *it), detail::fraction_at_or_above(h1, *it)});
  return out;
}

/// Mann-Whitney estimate of P(h1 > h0), ties counted as one half.
inline double auc(std::vector<double> h0, std::vector<double> h1) {
  require(!h0.empty() && !h1.empty(), "auc: empty sample");
  std::sort(h0.begin(), h0.end());
  double wins = 0.0;
  for (double v : h1) {
    const auto lower = std::lower_bound(h0.begin(), h0.end(), v);
    const auto upper = std::upper_bound(lower, h0.end(), v);
    wins += double(lower - h0.begin()) + 0.5 * double(upper - lower);
  }
  return wins / (double(h0.size()) * double(h1.size()));
}

/// Trapezoid area under ROC points ordered by pfa.
inline double roc_area(const std::vector<RocPoint>& curve) {
  double area = 0.0;
  for (std::size_t k = 1; k < curve.size(); ++k)
    area += (curve[k].pfa - curve[k - 1].pfa) * 0.5 * (curve[k].pd + curve[k - 1].pd);
  return area;
}

inline void write_roc_csv(std::ostream& out, const std::vector<RocPoint>& curve) {
  out.imbue(std::locale::classic());
  out << "threshold,pfa,pd\n" << std::scientific << std::setprecision(17);
  for (const RocPoint& p : curve) out << p.threshold << ',' << p.pfa << ',' << p.pd << '\n';
}

}  // namespace dsvd
